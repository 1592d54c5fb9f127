"""Multinomial logistic regression with L2 penalty."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import optimize
from scipy.special import log_softmax, softmax


@dataclass
class LogisticClassifier:
    weights: np.ndarray  # [f, classes]
    bias: np.ndarray  # [classes]
    mean: np.ndarray
    scale: np.ndarray
    classes: int
    history: List[float] = field(default_factory=list)
    stopped_early: bool = False

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return ((np.asarray(X, dtype=np.float64) - self.mean) / self.scale) @ self.weights + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.decision_function(X).argmax(axis=1)


def _objective(W, b, X, y, l2):
    """Mean cross-entropy + 0.5 * l2 * ||W||^2 and its gradients (bias unpenalized)."""
    logits = X @ W + b
    logp = log_softmax(logits, axis=1)
    n = len(y)
    loss = -logp[np.arange(n), y].mean() + 0.5 * l2 * np.sum(W * W)
    g = np.exp(logp)
    g[np.arange(n), y] -= 1.0
    g /= n
    return loss, X.T @ g + l2 * W, g.sum(axis=0)


def logistic_fit(X: np.ndarray, labels: np.ndarray, classes: Optional[int] = None, l2: float = 0.0,
                 lr: float = 1e-4, epochs: int = 40, batch: Optional[int] = 64, init: str = "xavier",
                 zscore_inputs: bool = True, solver: str = "adam", seed: int = 0, tol: float = 1e-4,
                 max_iter: int = 1000, l2_decay: Optional[float] = None) -> LogisticClassifier:
    """Fit a softmax classifier.

    Parameters
    ----------
    X, labels
        Features [n, f] and integer labels in ``[0, classes)``.
    l2
        Penalty coefficient on the weights: the objective is mean
        cross-entropy plus ``0.5 * l2 * ||W||^2``.
    l2_decay
        If given, the penalty coefficient is multiplied by this factor after
        every epoch (minibatch solvers only).
    solver
        ``"sgd"`` or ``"adam"`` run ``epochs`` passes of minibatches of size
        ``batch`` (``None`` = full batch) and stop once the full training loss
        drops below ``tol``.  ``"lbfgs"`` minimizes the same objective with
        scipy's L-BFGS-B for at most ``max_iter`` iterations.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError(f"X must be [n, f] aligned with labels; got {X.shape} and {y.shape}")
    classes = int(y.max()) + 1 if classes is None else classes
    if y.min() < 0 or y.max() >= classes:
        raise ValueError(f"labels must lie in [0, {classes})")
    if len(np.unique(y)) < 2:
        raise ValueError("training set contains a single class")
    n, f = X.shape
    mean = X.mean(axis=0) if zscore_inputs else np.zeros(f)
    scale = X.std(axis=0) if zscore_inputs else np.ones(f)
    scale = np.where(scale > 0, scale, 1.0)
    Xs = (X - mean) / scale

    rng = np.random.default_rng(seed)
    if init == "xavier":
        bound = np.sqrt(6.0 / (f + classes))
        W = rng.uniform(-bound, bound, size=(f, classes))
    elif init == "zeros":
        W = np.zeros((f, classes))
    else:
        raise ValueError(f"init must be 'xavier' or 'zeros', got {init!r}")
    b = np.zeros(classes)
    clf = LogisticClassifier(W, b, mean, scale, classes)

    if solver == "lbfgs":
        # optimize W / s so a large penalty does not swamp the bias curvature
        s = 1.0 / np.sqrt(max(l2, 1.0))

        def fun(theta):
            loss, gW, gb = _objective(s * theta[:-classes].reshape(f, classes), theta[-classes:], Xs, y, l2)
            return loss, np.concatenate([s * gW.ravel(), gb])

        res = optimize.minimize(fun, np.concatenate([W.ravel() / s, b]), jac=True, method="L-BFGS-B",
                                options={"maxiter": max_iter, "gtol": 1e-8})
        clf.weights = s * res.x[:-classes].reshape(f, classes)
        clf.bias = res.x[-classes:]
        clf.history = [float(res.fun)]
        return clf
    if solver not in ("sgd", "adam"):
        raise ValueError(f"solver must be 'sgd', 'adam' or 'lbfgs', got {solver!r}")

    size = n if batch is None else batch
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    mW, vW, mb, vb = np.zeros_like(W), np.zeros_like(W), np.zeros_like(b), np.zeros_like(b)
    step = 0
    penalty = l2
    for _ in range(epochs):
        order = rng.permutation(n) if batch is not None else np.arange(n)
        for start in range(0, n, size):
            idx = order[start : start + size]
            _, gW, gb = _objective(W, b, Xs[idx], y[idx], penalty)
            if solver == "sgd":
                W -= lr * gW
                b -= lr * gb
            else:
                step += 1
                mW = beta1 * mW + (1 - beta1) * gW
                vW = beta2 * vW + (1 - beta2) * gW ** 2
                mb = beta1 * mb + (1 - beta1) * gb
                vb = beta2 * vb + (1 - beta2) * gb ** 2
                c1, c2 = 1 - beta1 ** step, 1 - beta2 ** step
                W -= lr * (mW / c1) / (np.sqrt(vW / c2) + eps)
                b -= lr * (mb / c1) / (np.sqrt(vb / c2) + eps)
        loss = _objective(W, b, Xs, y, penalty)[0]
        if l2_decay is not None:
            penalty *= l2_decay
        clf.history.append(float(loss))
        if loss < tol:
            clf.stopped_early = True
            break
    clf.weights, clf.bias = W, b
    return clf


def logistic_predict_proba(clf: LogisticClassifier, X: np.ndarray) -> np.ndarray:
    """Class probabilities [n, classes]; rows sum to 1."""
    return softmax(clf.decision_function(X), axis=1)
