"""Synthetic stand-ins for primate recordings and behavior.

Targets are generated from the known generative parameters of
:func:`~cortex_bench.assembly.synth.synth_stimuli`, never from a model, so
every model is scored against the same fixed ground truth.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from ..assembly.data import BehavioralMatrix, NeuroidAssembly, StimulusSet
from ..assembly.synth import synth_behavior, synth_neuroids
from .ost import OSTRecord


def stimulus_latents(stimuli: StimulusSet) -> dict:
    """Category one-hot, pose/contrast parameters and coarse luminance per image."""
    n = len(stimuli)
    onehot = np.eye(len(stimuli.categories))[stimuli.labels]
    keys = ("x", "y", "scale", "rotation_deg", "contrast")
    pose = np.array([[p[k] for k in keys] for p in stimuli.params], dtype=float) if stimuli.params else np.zeros((n, 5))
    img = stimuli.images.mean(axis=1)
    g = 4
    h = img.shape[1] // g * g
    coarse = img[:, :h, :h].reshape(n, g, h // g, g, h // g).mean(axis=(2, 4)).reshape(n, -1)
    # how easy an image is: large, high-contrast objects are recognized sooner
    ease = pose[:, 2] * np.abs(pose[:, 4])
    ease = (ease - ease.min()) / (np.ptp(ease) + 1e-12)
    return {"category": onehot, "pose": pose, "coarse": coarse, "ease": ease}


def _z(x):
    sd = x.std(axis=0)
    return (x - x.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


@dataclass
class SyntheticTargets:
    v4: NeuroidAssembly
    it: NeuroidAssembly
    behavior: BehavioralMatrix
    behavior_train: np.ndarray  # stimulus indices for fitting the model decoder
    behavior_test: np.ndarray  # stimulus indices the behavior matrix describes
    ost: List[OSTRecord]


def synth_targets(stimuli: StimulusSet, seed: int = 0, n_v4: int = 40, n_it: int = 40, snr: float = 2.0,
                  heldout_fraction: float = 0.1, trials_per_pair: int = 60) -> SyntheticTargets:
    """V4-like, IT-like, behavioral and solution-time targets for ``stimuli``.

    V4 neuroids mix coarse luminance and pose; IT neuroids are dominated by
    object identity; behavior comes from a noisy observer whose confidence
    grows with object size and contrast; solution times fall as that ease
    grows.
    """
    rng = np.random.default_rng(seed)
    lat = stimulus_latents(stimuli)
    ids, labels = stimuli.stimulus_id, stimuli.object_label
    v4_src = np.hstack([_z(lat["coarse"]), _z(lat["pose"])])
    it_src = np.hstack([3.0 * _z(lat["category"]), 0.5 * _z(lat["pose"])])
    v4 = synth_neuroids(v4_src, n_v4, snr=snr, seed=seed + 1, stimulus_id=ids, object_label=labels, region="V4")
    it = synth_neuroids(it_src, n_it, snr=snr, nonlinearity="relu", seed=seed + 2, stimulus_id=ids,
                        object_label=labels, region="IT")

    n, k = len(stimuli), len(stimuli.categories)
    test = []
    for c in range(k):
        members = rng.permutation(np.flatnonzero(stimuli.labels == c))
        test.extend(members[: max(1, int(round(heldout_fraction * len(members))))])
    test = np.sort(np.array(test))
    train = np.setdiff1d(np.arange(n), test)
    n_test = len(test)
    beta = 1.0 + 4.0 * lat["ease"][test]
    logits = beta[:, None] * lat["category"][test] + rng.normal(scale=0.7, size=(n_test, k))
    proba = np.exp(logits - logits.max(axis=1, keepdims=True))
    proba /= proba.sum(axis=1, keepdims=True)
    behavior = synth_behavior(proba=proba, labels=stimuli.labels[test], trials_per_pair=trials_per_pair,
                              seed=seed + 3, categories=stimuli.categories, stimulus_id=ids[test])

    target_ost = 230.0 - 130.0 * lat["ease"] + rng.normal(scale=10.0, size=n)
    thresholds = rng.uniform(0.3, 0.9, size=n)
    ost = [OSTRecord(ids[i], labels[i], float(thresholds[i]), None, float(np.clip(target_ost[i], 70.0, 250.0)))
           for i in range(n)]
    return SyntheticTargets(v4, it, behavior, train, test, ost)


def save_targets(targets: SyntheticTargets, directory) -> Path:
    """Write the suite as ``v4.assembly``, ``it.assembly``, ``behavior.csv``, ``ost.csv`` and ``split.json``."""
    from ..assembly.io import save_assembly, save_behavior_csv, save_ost_csv

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_assembly(targets.v4, d / "v4")
    save_assembly(targets.it, d / "it")
    save_behavior_csv(targets.behavior, d / "behavior.csv")
    save_ost_csv(targets.ost, d / "ost.csv")
    (d / "split.json").write_text(json.dumps({"behavior_train": targets.behavior_train.tolist(),
                                              "behavior_test": targets.behavior_test.tolist()}) + "\n")
    return d


def load_targets(directory) -> SyntheticTargets:
    from ..assembly.io import load_assembly, load_behavior_csv, load_ost_csv

    d = Path(directory)
    split = json.loads((d / "split.json").read_text())
    return SyntheticTargets(load_assembly(d / "v4"), load_assembly(d / "it"), load_behavior_csv(d / "behavior.csv"),
                            np.array(split["behavior_train"], dtype=np.int64),
                            np.array(split["behavior_test"], dtype=np.int64), load_ost_csv(d / "ost.csv"))
