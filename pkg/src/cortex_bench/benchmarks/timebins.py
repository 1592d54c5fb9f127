"""Predictivity of separate early and late response windows."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from ..assembly.data import NeuroidAssembly
from .mapping import Point, select_point
from .neural import NeuralConfig, neural_predictivity

EARLY_LATE = ((90.0, 110.0), (190.0, 210.0))


@dataclass
class TimeBinnedResult:
    point: Point
    scores: Dict[Tuple[float, float], float]


def _bin_target(target: NeuroidAssembly, window) -> NeuroidAssembly:
    lo, hi = window
    tb = target.time_bins
    exact = np.flatnonzero(np.isclose(tb[:, 0], lo) & np.isclose(tb[:, 1], hi))
    if exact.size:
        return target.isel_time_bin(int(exact[0]))
    try:
        return target.time_average(window)
    except KeyError:
        raise KeyError(f"time bin [{lo}, {hi}] not available; bins: {tb.tolist()}") from None


def timebinned_predictivity(source: Union[NeuroidAssembly, Dict[Point, NeuroidAssembly]], target: NeuroidAssembly,
                            bins: Sequence[Tuple[float, float]] = EARLY_LATE,
                            selection_window: Tuple[float, float] = (70.0, 170.0),
                            cfg: NeuralConfig = NeuralConfig()) -> TimeBinnedResult:
    """Neural predictivity per time bin, fitting a fresh mapping for each bin.

    With several recording points the point is chosen once on the
    ``selection_window`` average and then held fixed across bins.
    """
    if "time_bin" not in target.dims:
        raise KeyError("target has no time_bin coordinate")
    targets = {tuple(map(float, b)): _bin_target(target, b) for b in bins}
    if isinstance(source, NeuroidAssembly):
        point, src = ("source", 0), source
    else:
        sel_cfg = NeuralConfig(**{**cfg.__dict__, "time_window": tuple(selection_window)})
        chosen = select_point(source, target, "search", cfg=sel_cfg)
        point = (chosen.area, chosen.timestep)
        src = source[point]
    return TimeBinnedResult(point, {b: neural_predictivity(src, t, cfg).score for b, t in targets.items()})
