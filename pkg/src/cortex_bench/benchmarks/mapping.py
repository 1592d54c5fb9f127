"""Choosing the model recording point that best predicts a target region."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

from ..assembly.data import NeuroidAssembly, StimulusSet
from .neural import NeuralConfig, NeuralResult, neural_predictivity

Point = Tuple[str, int]


@dataclass
class MappingResult:
    area: str
    timestep: int
    score: float
    result: NeuralResult
    candidates: Dict[Point, float] = field(default_factory=dict)


def recording_points(model, stimuli: StimulusSet, areas: Optional[Iterable[str]] = None) -> Dict[Point, NeuroidAssembly]:
    """Pooled features for every (area, timestep) of ``model``."""
    from ..model.features import extract_features

    names = list(areas) if areas is not None else model.config.area_names
    points = {}
    for name in names:
        asm = extract_features(model, stimuli, name, "all")
        for t in range(asm.n_time_bins):
            points[(name, t)] = asm.isel_time_bin(t)
    return points


def select_point(points: Dict[Point, NeuroidAssembly], target: NeuroidAssembly, mode: str = "search",
                 committed_area: Optional[str] = None, cfg: NeuralConfig = NeuralConfig()) -> MappingResult:
    """Score candidate points and return the best.

    ``mode="search"`` considers every point; ``mode="committed"`` restricts
    the search to the timesteps of ``committed_area`` (by default the
    target's region name).  Ties go to the earliest point in iteration order.
    """
    if mode == "committed":
        area = committed_area or str(target.region[0])
        points = {k: v for k, v in points.items() if k[0] == area}
    elif mode != "search":
        raise ValueError(f"mode must be 'search' or 'committed', got {mode!r}")
    if not points:
        raise ValueError("no recording points to evaluate")
    best, scores = None, {}
    for key, asm in points.items():
        res = neural_predictivity(asm, target, cfg)
        scores[key] = res.score
        if best is None or res.score > best[1].score:
            best = (key, res)
    (area, t), res = best
    return MappingResult(area, t, res.score, res, scores)


def map_layers(model, stimuli: StimulusSet, target: NeuroidAssembly, mode: str = "search",
               committed_area: Optional[str] = None, cfg: NeuralConfig = NeuralConfig()) -> MappingResult:
    areas = None
    if mode == "committed":
        areas = [committed_area or str(target.region[0])]
    return select_point(recording_points(model, stimuli, areas), target, mode, committed_area, cfg)
