"""Image-level behavioral consistency (I2n)."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..assembly.data import BehavioralMatrix
from ..assembly.synth import pair_accuracies
from ..errors import DimensionError, UndefinedCorrelationError
from ..stats import dprime, pearson_r


@dataclass
class BehaviorResult:
    score: float
    model_table: np.ndarray  # normalized d' [images, distractors], NaN on the mask
    target_table: np.ndarray

    def detail_rows(self, stimulus_id, categories):
        rows = []
        for i, sid in enumerate(stimulus_id):
            for j, c in enumerate(categories):
                if np.isfinite(self.target_table[i, j]):
                    rows.append({"stimulus_id": sid, "distractor": c, "model_dprime": float(self.model_table[i, j]),
                                 "target_dprime": float(self.target_table[i, j])})
        return rows


def false_alarm_rates(acc: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """FA(o) = 1 - mean accuracy over cells whose distractor is o and whose image is not of o."""
    n, k = acc.shape
    fa = np.empty(k)
    for o in range(k):
        cells = acc[labels != o, o]
        cells = cells[np.isfinite(cells)]
        fa[o] = 1.0 - cells.mean() if cells.size else np.nan
    return fa


def normalized_dprime(acc: np.ndarray, labels: np.ndarray, clip: float = 5.0) -> np.ndarray:
    """Per-cell d' = Z(hit) - Z(FA of the image's object), minus the (object, distractor) mean."""
    acc = np.asarray(acc, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, k = acc.shape
    mask = np.zeros((n, k), dtype=bool)
    mask[np.arange(n), labels] = True
    fa = false_alarm_rates(np.where(mask, np.nan, acc), labels)
    d = np.full((n, k), np.nan)
    valid = ~mask & np.isfinite(acc)
    rows, cols = np.nonzero(valid)
    d[rows, cols] = dprime(acc[rows, cols], fa[labels[rows]], clip)
    out = d.copy()
    for o in range(k):
        imgs = labels == o
        if not imgs.any():
            continue
        block = d[imgs]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # the masked column is all NaN
            out[imgs] = block - np.nanmean(block, axis=0)
    return out


def behavioral_predictivity(model: Union[np.ndarray, BehavioralMatrix], target: BehavioralMatrix,
                            clip: float = 5.0) -> BehaviorResult:
    """Pearson r between model and target normalized d' tables over unmasked cells.

    ``model`` is either a decoder probability matrix [images, classes] for the
    target's images, or a second :class:`BehavioralMatrix`.
    """
    labels = target.image_labels
    n, k = target.accuracies.shape
    missing = sorted(set(range(k)) - set(labels.tolist()))
    if missing:
        raise DimensionError(f"object classes absent from the matrix: {[target.categories[m] for m in missing]}")
    if isinstance(model, BehavioralMatrix):
        if model.accuracies.shape != (n, k) or not np.array_equal(model.image_labels, labels):
            raise DimensionError("model matrix must match the target's images and classes")
        model_acc = model.accuracies
    else:
        proba = np.asarray(model, dtype=np.float64)
        if proba.shape != (n, k):
            raise DimensionError(f"model probabilities have shape {proba.shape}, expected {(n, k)}")
        if not np.allclose(proba.sum(axis=1), 1.0, atol=1e-6):
            raise ValueError("model probability rows must sum to 1")
        model_acc = pair_accuracies(proba, labels)
    m = normalized_dprime(model_acc, labels, clip)
    t = normalized_dprime(target.accuracies, labels, clip)
    cells = np.isfinite(m) & np.isfinite(t)
    for name, table in (("model", m), ("target", t)):
        if np.std(table[cells]) < 1e-10:
            raise UndefinedCorrelationError(f"{name} normalized d' table has zero variance")
    return BehaviorResult(pearson_r(m[cells], t[cells]), m, t)
