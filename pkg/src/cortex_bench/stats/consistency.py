"""Split-half reliability of repeated responses."""
from __future__ import annotations

import numpy as np

from ..assembly.data import NeuroidAssembly
from ..errors import DimensionError, InsufficientDataError
from .correlation import columnwise_pearson


def spearman_brown(r):
    r = np.asarray(r, dtype=np.float64)
    return 2.0 * r / (1.0 + r)


def internal_consistency(assembly: NeuroidAssembly, n_splits: int = 10, seed: int = 0) -> np.ndarray:
    """Per-neuroid split-half consistency, Spearman-Brown corrected.

    For each of ``n_splits`` random halvings of the repetitions, the two
    half-means are correlated across stimuli; the per-neuroid r is averaged
    over splits before correction.  Constant neuroids yield NaN.
    """
    if "repetition" not in assembly.dims:
        raise InsufficientDataError("internal consistency needs a repetition dimension")
    if "time_bin" in assembly.dims:
        raise DimensionError("select or average time bins before computing consistency")
    data = np.moveaxis(np.asarray(assembly.data, dtype=np.float64), assembly.axis("repetition"), 0)
    reps = data.shape[0]
    if reps < 2:
        raise InsufficientDataError("internal consistency needs at least 2 repetitions")
    rng = np.random.default_rng(seed)
    rs = []
    for _ in range(n_splits):
        perm = rng.permutation(reps)
        half = reps // 2
        a = data[perm[:half]].mean(axis=0)
        b = data[perm[half : 2 * half]].mean(axis=0)
        rs.append(columnwise_pearson(a, b))
    return spearman_brown(np.mean(rs, axis=0))
