"""Object solution times from time-resolved decodes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..assembly.data import NeuroidAssembly, timestep_time_bins
from ..errors import InsufficientDataError
from ..stats import CrossValPlan, dprime, logistic_fit, logistic_predict_proba, spearman_rho
from ._parallel import ordered_map

MIN_MUTUAL = 10


@dataclass
class OSTRecord:
    stimulus_id: str
    object_label: str
    threshold: float
    model_ost: Optional[float] = None
    target_ost: Optional[float] = None
    trajectory: Optional[np.ndarray] = None


@dataclass(frozen=True)
class DecoderConfig:
    """Time-bin linear decoder: z-scored inputs, Xavier init, L2 penalty."""

    l2: float = 0.463
    l2_decay: Optional[float] = None
    lr: float = 1e-4
    epochs: int = 40
    batch: int = 64
    solver: str = "adam"
    tol: float = 1e-4


@dataclass(frozen=True)
class OSTConfig:
    bin_ms: float = 10.0
    window: Tuple[float, float] = (70.0, 250.0)
    folds: int = 10
    clip: float = 5.0
    decoder: DecoderConfig = DecoderConfig()
    timestep_times: Optional[Tuple[Tuple[float, float], ...]] = None
    seed: int = 0
    threads: Optional[int] = None


@dataclass
class OSTResult:
    score: float
    reason: str
    n_mutual: int
    records: List[OSTRecord] = field(default_factory=list)

    def detail_rows(self):
        return [{"stimulus_id": r.stimulus_id, "object": r.object_label, "threshold": r.threshold,
                 "model_ost": r.model_ost, "target_ost": r.target_ost} for r in self.records]


def ost_from_trajectory(times: Sequence[float], values: Sequence[float], threshold: float) -> Optional[float]:
    """First time the linearly interpolated trajectory reaches ``threshold`` (None if never)."""
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    above = np.flatnonzero(v >= threshold)
    if not above.size:
        return None
    k = above[0]
    if k == 0:
        return float(t[0])
    t0, t1, v0, v1 = t[k - 1], t[k], v[k - 1], v[k]
    return float(t0 + (t1 - t0) * (threshold - v0) / (v1 - v0))


def i1_dprime(proba: np.ndarray, labels: np.ndarray, clip: float = 5.0) -> np.ndarray:
    """Per-image d': hit = p(true class); FA = mean p(that class) over other-class images."""
    proba = np.asarray(proba, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, k = proba.shape
    hit = proba[np.arange(n), labels]
    fa = np.array([proba[labels != o, o].mean() if np.any(labels != o) else np.nan for o in range(k)])
    return np.asarray(dprime(np.clip(hit, 0, 1), np.clip(fa[labels], 0, 1), clip))


def decode_heldout(X: np.ndarray, labels: np.ndarray, cfg: OSTConfig) -> np.ndarray:
    """Out-of-fold class probabilities (each image predicted by a decoder that never saw it)."""
    k = int(labels.max()) + 1
    proba = np.zeros((len(X), k))
    d = cfg.decoder
    for f, (train, test) in enumerate(CrossValPlan(cfg.folds, cfg.seed).folds(labels)):
        clf = logistic_fit(X[train], labels[train], classes=k, l2=d.l2, l2_decay=d.l2_decay, lr=d.lr, epochs=d.epochs,
                           batch=d.batch, solver=d.solver, tol=d.tol, seed=cfg.seed + f)
        proba[test] = logistic_predict_proba(clf, X[test])
    return proba


def bin_times(cfg: OSTConfig) -> np.ndarray:
    return np.arange(cfg.window[0], cfg.window[1], cfg.bin_ms)


def timestep_trajectory(per_step: np.ndarray, step_windows: np.ndarray, cfg: OSTConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Spread per-timestep values [n, T] onto the 10 ms grid via each timestep's window."""
    times = bin_times(cfg)
    idx = np.full(len(times), -1)
    for s, (lo, hi) in enumerate(step_windows):
        last = s == len(step_windows) - 1
        idx[(times >= lo) & ((times <= hi) if last else (times < hi))] = s
    keep = idx >= 0
    return times[keep], per_step[:, idx[keep]]


def ost_benchmark(source: NeuroidAssembly, targets: Sequence[OSTRecord], cfg: OSTConfig = OSTConfig()) -> OSTResult:
    """Spearman rho between model and target OSTs over images where both exist.

    ``source`` holds model features with one ``time_bin`` per recurrent pass.
    A source with a single pass cannot express dynamics and scores 0.
    """
    n_steps = source.n_time_bins
    if n_steps < 2:
        return OSTResult(0.0, "feedforward", 0, [])
    lookup = {r.stimulus_id: r for r in targets}
    keep = [i for i, sid in enumerate(source.stimulus_id) if sid in lookup]
    src = source.isel_stimuli(keep)
    cats = sorted(set(src.object_label.tolist()))
    labels = src.label_codes(cats)
    ax = src.axis("time_bin")
    steps = [np.asarray(np.take(src.mean_over_repetitions().data, s, axis=ax), dtype=np.float64)
             for s in range(n_steps)]
    probas = ordered_map(lambda X: decode_heldout(X, labels, cfg), steps, cfg.threads)
    per_step = np.stack([i1_dprime(p, labels, cfg.clip) for p in probas], axis=1)
    if cfg.timestep_times is not None:
        windows = np.asarray(cfg.timestep_times, dtype=float)
    elif src.time_bins is not None:
        windows = src.time_bins
    else:
        windows = timestep_time_bins(n_steps)
    times, traj = timestep_trajectory(per_step, windows, cfg)

    records = []
    for i, sid in enumerate(src.stimulus_id):
        t = lookup[sid]
        records.append(OSTRecord(sid, t.object_label, t.threshold, ost_from_trajectory(times, traj[i], t.threshold),
                                 t.target_ost, traj[i]))
    mutual = [r for r in records if r.model_ost is not None and r.target_ost is not None]
    if len(mutual) < MIN_MUTUAL:
        raise InsufficientDataError(f"only {len(mutual)} images have both model and target OSTs (need {MIN_MUTUAL})")
    rho = spearman_rho([r.model_ost for r in mutual], [r.target_ost for r in mutual])
    return OSTResult(rho, "ok", len(mutual), records)
