"""Partial least squares regression (NIPALS with deflation)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ITER = 500


class ConvergenceError(RuntimeError):
    def __init__(self, component: int, residual: float):
        super().__init__(f"NIPALS did not converge for component {component} after {MAX_ITER} steps "
                         f"(residual {residual:.3e})")
        self.component = component
        self.residual = residual


class RankError(ValueError):
    """More components requested than the rank of X supports."""


@dataclass
class PLSModel:
    """Fitted PLS map.

    In per-target mode (PLS1) there is one block per target column, so
    ``x_weights`` etc. have shape [n_targets, n_features, k]; in joint mode
    (PLS2) there is a single block.  ``coef`` is the [n_features, n_targets]
    regression matrix on centered data.
    """

    n_components: int
    x_weights: np.ndarray
    x_loadings: np.ndarray
    y_loadings: np.ndarray
    x_scores: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray
    coef: np.ndarray
    mode: str = "pls1"


def _nipals(X: np.ndarray, Y: np.ndarray, k: int, tol: float):
    """NIPALS on centered X [n, f] and Y [n, m]; returns W, P, Q, T and coef."""
    n, f = X.shape
    m = Y.shape[1]
    W, P, T = np.zeros((f, k)), np.zeros((f, k)), np.zeros((n, k))
    Q = np.zeros((m, k))
    X, Y = X.copy(), Y.copy()
    scale = max(np.abs(X).max(), 1e-300)
    for a in range(k):
        u = Y[:, np.argmax((Y ** 2).sum(axis=0))]
        t_old, residual = None, float("inf")
        for step in range(MAX_ITER):
            w = X.T @ u
            norm = np.linalg.norm(w)
            if norm <= 1e-14 * scale * max(np.linalg.norm(u), 1e-300):
                w = None  # residual Y carries no covariance with X
                break
            w /= norm
            t = X @ w
            tt = t @ t
            c = Y.T @ t / tt
            if m == 1:
                break
            u = Y @ c / (c @ c)
            if t_old is not None:
                residual = np.linalg.norm(t - t_old) / np.linalg.norm(t)
                if residual < tol:
                    break
            t_old = t
        else:
            raise ConvergenceError(a, float(residual))
        if w is None:
            # y fully explained: remaining components contribute nothing
            W, P, T, Q = W[:, :a], P[:, :a], T[:, :a], Q[:, :a]
            break
        p = X.T @ t / tt
        X -= np.outer(t, p)
        Y -= np.outer(t, c)
        W[:, a], P[:, a], T[:, a], Q[:, a] = w, p, t, c
    if W.shape[1]:
        coef = W @ np.linalg.solve(P.T @ W, Q.T)
    else:
        coef = np.zeros((f, m))
    return W, P, Q, T, coef


def pls_fit(X: np.ndarray, Y: np.ndarray, n_components: int = 25, mode: str = "pls1", tol: float = 1e-12,
            check_rank: bool = True) -> PLSModel:
    """Fit PLS regression of ``Y`` (one or more targets) on ``X``.

    ``mode="pls1"`` fits an independent single-target model per column of
    ``Y``; ``mode="pls2"`` fits one joint multi-target model.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if mode not in ("pls1", "pls2"):
        raise ValueError(f"mode must be 'pls1' or 'pls2', got {mode!r}")
    x_mean, y_mean = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - x_mean, Y - y_mean
    if n_components < 1:
        raise RankError("n_components must be >= 1")
    if check_rank:
        rank = np.linalg.matrix_rank(Xc)
        if n_components > rank:
            raise RankError(f"n_components={n_components} exceeds rank(X)={rank}")
    blocks = [Yc[:, [j]] for j in range(Yc.shape[1])] if mode == "pls1" else [Yc]
    f, k = X.shape[1], n_components
    Ws, Ps, Qs, Ts, coefs = [], [], [], [], []
    for Yb in blocks:
        W, P, Q, T, coef = _nipals(Xc, Yb, k, tol)
        pad = k - W.shape[1]
        Ws.append(np.pad(W, ((0, 0), (0, pad))))
        Ps.append(np.pad(P, ((0, 0), (0, pad))))
        Qs.append(np.pad(Q, ((0, 0), (0, pad))))
        Ts.append(np.pad(T, ((0, 0), (0, pad))))
        coefs.append(coef)
    return PLSModel(k, np.stack(Ws), np.stack(Ps), np.stack(Qs), np.stack(Ts), x_mean, y_mean,
                    np.concatenate(coefs, axis=1), mode)


def pls_predict(model: PLSModel, X: np.ndarray) -> np.ndarray:
    """Predictions [n, n_targets] (mean-restored)."""
    return (np.asarray(X, dtype=np.float64) - model.x_mean) @ model.coef + model.y_mean
