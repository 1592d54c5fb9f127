"""Stratified k-fold splitting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True)
class CrossValPlan:
    n_folds: int = 10
    seed: int = 0

    def folds(self, stratify_by) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(train, test) index pairs; each class is dealt round-robin over folds.

        Classes are shuffled within themselves and concatenated before dealing,
        so every fold holds within one item of its share of each class and fold
        sizes differ by at most one.
        """
        labels = np.asarray(stratify_by)
        n = len(labels)
        if self.n_folds < 2 or self.n_folds > n:
            raise ValueError(f"n_folds must lie in [2, {n}], got {self.n_folds}")
        rng = np.random.default_rng(self.seed)
        _, codes = np.unique(labels, return_inverse=True)
        order = np.concatenate([rng.permutation(np.flatnonzero(codes == c)) for c in range(codes.max() + 1)])
        fold_of = np.empty(n, dtype=np.int64)
        fold_of[order] = np.arange(n) % self.n_folds
        out = []
        for k in range(self.n_folds):
            test = np.flatnonzero(fold_of == k)
            train = np.flatnonzero(fold_of != k)
            out.append((train, test))
        return out
