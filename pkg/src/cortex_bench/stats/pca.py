"""Principal component analysis via thin SVD."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateDataError(ValueError):
    """Input has no variance to decompose."""


@dataclass
class PCAModel:
    mean: np.ndarray  # [f]
    components: np.ndarray  # [k, f], rows orthonormal
    explained_variance: np.ndarray  # [k], decreasing

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def pca_fit(X: np.ndarray, n_components: int = 1000) -> PCAModel:
    """Fit ``n_components`` principal axes of ``X`` (stimuli x features).

    Components are sorted by decreasing explained variance and their sign is
    fixed so that the largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    n, f = X.shape
    limit = min(n - 1, f)
    if not 1 <= n_components <= limit:
        raise ValueError(f"n_components={n_components} must lie in [1, min(n_stimuli-1, n_features)={limit}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    if not np.any(Xc):
        raise DegenerateDataError("X has zero variance")
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    comps = vt[:n_components]
    signs = np.sign(comps[np.arange(n_components), np.abs(comps).argmax(axis=1)])
    comps = comps * np.where(signs == 0, 1.0, signs)[:, None]
    return PCAModel(mean, comps, s[:n_components] ** 2 / (n - 1))


def pca_transform(model: PCAModel, X: np.ndarray) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - model.mean) @ model.components.T


def pca_inverse_transform(model: PCAModel, Z: np.ndarray) -> np.ndarray:
    return np.asarray(Z, dtype=np.float64) @ model.components + model.mean
