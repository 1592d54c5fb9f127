"""Cross-validated PCA -> PLS neural predictivity."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..assembly.data import NeuroidAssembly
from ..errors import DimensionError, InsufficientDataError
from ..stats import CrossValPlan, columnwise_pearson, pca_fit, pca_transform, pls_fit, pls_predict
from ._parallel import ordered_map


@dataclass(frozen=True)
class NeuralConfig:
    n_pca: int = 1000
    n_pls: int = 25
    folds: int = 10
    time_window: Tuple[float, float] = (70.0, 170.0)
    aggregate: str = "mean"  # "mean" of per-fold r, or "pooled" r over all held-out predictions
    zscore_source: bool = True
    seed: int = 0
    threads: Optional[int] = None


@dataclass
class NeuralResult:
    score: float
    neuroid_id: np.ndarray
    per_neuroid_r: np.ndarray  # NaN where undefined
    fold_r: np.ndarray  # [folds, neuroids]
    n_undefined: int
    undefined_ids: List[str] = field(default_factory=list)

    def detail_rows(self):
        return [{"neuroid_id": i, "r": float(r)} for i, r in zip(self.neuroid_id, self.per_neuroid_r)]


def align(source: NeuroidAssembly, target: NeuroidAssembly) -> NeuroidAssembly:
    """Return ``source`` reordered to the target's stimulus order."""
    s, t = source.stimulus_id, target.stimulus_id
    if np.array_equal(s, t):
        return source
    ss, ts = set(s.tolist()), set(t.tolist())
    if ss != ts:
        only_s, only_t = sorted(ss - ts), sorted(ts - ss)
        raise DimensionError(f"stimulus sets differ: {len(only_s)} only in source {only_s[:5]}, "
                             f"{len(only_t)} only in target {only_t[:5]}")
    pos = {sid: i for i, sid in enumerate(s)}
    return source.isel_stimuli([pos[sid] for sid in t])


def source_matrix(source: NeuroidAssembly) -> np.ndarray:
    if "time_bin" in source.dims:
        if source.n_time_bins != 1:
            raise DimensionError("source has several time bins; pick one (see map_layers) before scoring")
        source = source.isel_time_bin(0)
    return source.as_matrix()


def target_matrix(target: NeuroidAssembly, window) -> np.ndarray:
    if "time_bin" in target.dims:
        target = target.time_average(window)
    return target.as_matrix()


def _fit_fold(X_train, Y_train, X_test, cfg: NeuralConfig):
    if cfg.zscore_source:
        mu, sd = X_train.mean(axis=0), X_train.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        X_train, X_test = (X_train - mu) / sd, (X_test - mu) / sd
    n, f = X_train.shape
    if f > cfg.n_pca:
        pca = pca_fit(X_train, min(cfg.n_pca, n - 1, f))
        X_train, X_test = pca_transform(pca, X_train), pca_transform(pca, X_test)
    rank = np.linalg.matrix_rank(X_train - X_train.mean(axis=0))
    if rank == 0:
        return np.repeat(Y_train.mean(axis=0, keepdims=True), len(X_test), axis=0)
    model = pls_fit(X_train, Y_train, min(cfg.n_pls, rank), mode="pls1", check_rank=False)
    return pls_predict(model, X_test)


def neural_predictivity(source: NeuroidAssembly, target: NeuroidAssembly,
                        cfg: NeuralConfig = NeuralConfig()) -> NeuralResult:
    """Median over target neuroids of the held-out Pearson r of a PCA -> PLS map.

    Folds are stratified by the target's object labels.  PCA (to at most
    ``n_pca`` components) is fit on each training split only, and only when
    the source has more features than that.  Each target neuroid gets its own
    PLS1 model with ``min(n_pls, rank)`` components.
    """
    source = align(source, target)
    X = source_matrix(source)
    Y = target_matrix(target, cfg.time_window)
    if len(X) < cfg.folds:
        raise InsufficientDataError(f"{len(X)} stimuli cannot fill {cfg.folds} folds")
    folds = CrossValPlan(cfg.folds, cfg.seed).folds(target.object_label)

    def run(fold):
        train, test = fold
        return test, _fit_fold(X[train], Y[train], X[test], cfg)

    results = ordered_map(run, folds, cfg.threads)
    fold_r = np.array([columnwise_pearson(pred, Y[test]) for test, pred in results])
    if cfg.aggregate == "mean":
        per = fold_r.mean(axis=0)
    elif cfg.aggregate == "pooled":
        pred_all = np.empty_like(Y)
        for test, pred in results:
            pred_all[test] = pred
        per = columnwise_pearson(pred_all, Y)
    else:
        raise ValueError(f"aggregate must be 'mean' or 'pooled', got {cfg.aggregate!r}")
    undefined = ~np.isfinite(per)
    if undefined.all():
        raise InsufficientDataError("correlation undefined for every neuroid")
    return NeuralResult(
        score=float(np.median(per[~undefined])),
        neuroid_id=target.neuroid_id,
        per_neuroid_r=per,
        fold_r=fold_r,
        n_undefined=int(undefined.sum()),
        undefined_ids=target.neuroid_id[undefined].tolist(),
    )


def permutation_null(source: NeuroidAssembly, target: NeuroidAssembly, cfg: NeuralConfig = NeuralConfig(),
                     n_permutations: int = 20, seed: int = 0) -> np.ndarray:
    """Scores obtained after shuffling target rows across stimuli."""
    rng = np.random.default_rng(seed)
    source = align(source, target)
    out = []
    for _ in range(n_permutations):
        perm = rng.permutation(target.n_stimuli)
        shuffled = target._replace(data=target.data[perm])
        out.append(neural_predictivity(source, shuffled, cfg).score)
    return np.array(out)
