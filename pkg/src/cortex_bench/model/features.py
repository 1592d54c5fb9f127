"""Read out area activations as neuroid assemblies."""
from __future__ import annotations

from typing import Union

import numpy as np

from ..assembly.data import NeuroidAssembly, StimulusSet, timestep_time_bins
from ..tensor import no_grad
from .cornet import Model
from .train import preprocess_eval


def extract_features(model: Model, stimuli: StimulusSet, area: str, timestep: Union[int, str] = "all",
                     batch: int = 64, preprocess: str = "resize") -> NeuroidAssembly:
    """Globally pooled activations of ``area`` for every stimulus.

    ``timestep="all"`` returns a ``time_bin`` axis with one bin per recurrent
    pass (nominal ms bins from :func:`timestep_time_bins`); an integer picks a
    single pass.  Neuroids are the area's output channels.
    """
    spec = model.config.area(area)
    times = spec.times
    if timestep != "all":
        if not isinstance(timestep, (int, np.integer)) or not 0 <= timestep < times:
            raise IndexError(f"area {area!r} has timesteps 0..{times - 1}, got {timestep!r}")

    model.eval()
    images = stimuli.as_rgb()
    chunks = []
    with no_grad():
        for start in range(0, len(stimuli), batch):
            x = preprocess_eval(model, images[start : start + batch], preprocess)
            _, records = model(x, record=True)
            steps = sorted((r for r in records if r.area == area), key=lambda r: r.timestep)
            chunks.append(np.stack([r.features for r in steps], axis=-1))
    data = np.concatenate(chunks, axis=0).astype(np.float32)  # [n, C, T]

    prov = {"source": "model", "area": area, "config_hash": model.config.config_hash(), "seed": model.seed,
            "timesteps": times}
    if timestep == "all":
        dims, bins = ("stimulus", "neuroid", "time_bin"), timestep_time_bins(times)
    else:
        data, dims, bins = data[..., int(timestep)], ("stimulus", "neuroid"), None
        prov["timestep"] = int(timestep)
    return NeuroidAssembly(
        data=data,
        stimulus_id=stimuli.stimulus_id,
        object_label=stimuli.object_label,
        neuroid_id=np.array([f"{area}.{c:04d}" for c in range(data.shape[1])]),
        region=area,
        dims=dims,
        time_bins=bins,
        provenance=prov,
    )
