"""Linear-probe transfer on frozen features."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from ..stats import logistic_fit
from ._parallel import ordered_map


def c_grid(low: float = 5e-4, high: float = 5e-2, steps: int = 10) -> np.ndarray:
    """Geometric grid of inverse regularization strengths, endpoints exact."""
    grid = np.geomspace(low, high, steps)
    grid[0], grid[-1] = low, high
    return grid


@dataclass
class TransferResult:
    accuracy: float
    best_c: float
    accuracies: Dict[float, float] = field(default_factory=dict)


def transfer_probe(train_features: np.ndarray, train_labels: np.ndarray, test_features: np.ndarray,
                   test_labels: np.ndarray, C_grid: Optional[Sequence[float]] = None, max_iter: int = 200,
                   threads: Optional[int] = None) -> TransferResult:
    """Fit a multinomial L-BFGS probe per C and report the best test accuracy.

    C is the inverse penalty on summed cross-entropy, i.e. the mean-loss
    penalty coefficient is ``1 / (C * n_train)``.
    """
    grid = c_grid() if C_grid is None else np.asarray(C_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("C grid is empty")
    Xtr = np.asarray(train_features, dtype=np.float64)
    Xte = np.asarray(test_features, dtype=np.float64)
    ytr, yte = np.asarray(train_labels), np.asarray(test_labels)
    classes = int(max(ytr.max(), yte.max())) + 1

    def run(C):
        clf = logistic_fit(Xtr, ytr, classes=classes, l2=1.0 / (C * len(Xtr)), solver="lbfgs", init="zeros",
                           max_iter=max_iter)
        return float(np.mean(clf.predict(Xte) == yte))

    accs = ordered_map(run, grid.tolist(), threads)
    best = int(np.argmax(accs))
    return TransferResult(accs[best], float(grid[best]), dict(zip(grid.tolist(), accs)))
