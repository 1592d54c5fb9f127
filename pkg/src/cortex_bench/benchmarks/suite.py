"""Run every benchmark on a model's features and assemble a ScoreCard."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..assembly.data import NeuroidAssembly
from ..errors import ConfigError, InsufficientDataError, UndefinedCorrelationError
from ..stats import logistic_fit, logistic_predict_proba
from .behavioral import behavioral_predictivity
from .mapping import select_point
from .neural import NeuralConfig
from .ost import OSTConfig, ost_benchmark
from .scorecard import ScoreCard
from .targets import SyntheticTargets


@dataclass(frozen=True)
class BehaviorConfig:
    clip: float = 5.0
    decoder_l2: float = 1e-3
    decoder_max_iter: int = 500
    area: str = "IT"


@dataclass(frozen=True)
class BenchmarkConfig:
    neural: NeuralConfig = field(default_factory=NeuralConfig)
    behavior: BehaviorConfig = field(default_factory=BehaviorConfig)
    ost: OSTConfig = field(default_factory=OSTConfig)
    include_ost: bool = True
    mapping: str = "committed"  # or "search" over every area and timestep

    def validate(self) -> "BenchmarkConfig":
        problems = []
        lo, hi = self.neural.time_window
        if not lo < hi:
            problems.append(f"neural time window {self.neural.time_window} is not increasing")
        if not self.ost.window[0] < self.ost.window[1]:
            problems.append(f"OST window {self.ost.window} is not increasing")
        if self.ost.timestep_times is not None:
            starts = [t[0] for t in self.ost.timestep_times]
            if any(b <= a for a, b in zip(starts, starts[1:])):
                problems.append("timestep_times must be strictly increasing")
        if self.mapping not in ("committed", "search"):
            problems.append(f"mapping must be 'committed' or 'search', got {self.mapping!r}")
        if problems:
            raise ConfigError(problems)
        return self


def behavior_probabilities(features: NeuroidAssembly, targets: SyntheticTargets, cfg: BehaviorConfig) -> np.ndarray:
    """Decoder probabilities for the behavioral test images from the last recurrent pass."""
    X = features.isel_time_bin(features.n_time_bins - 1) if "time_bin" in features.dims else features
    X = X.as_matrix()
    pos = {sid: i for i, sid in enumerate(features.stimulus_id)}
    train = np.array([pos[s] for s in features.stimulus_id[targets.behavior_train]])
    test = np.array([pos[s] for s in targets.behavior.stimulus_id])
    labels = features.label_codes(targets.behavior.categories)
    clf = logistic_fit(X[train], labels[train], classes=len(targets.behavior.categories), l2=cfg.decoder_l2,
                       solver="lbfgs", init="zeros", max_iter=cfg.decoder_max_iter)
    return logistic_predict_proba(clf, X[test])


def score_features(features: Dict[str, NeuroidAssembly], targets: SyntheticTargets,
                   cfg: BenchmarkConfig = BenchmarkConfig(), config_hash: str = "", seed: int = 0) -> ScoreCard:
    """Score pooled model features (one assembly per area, time_bin = recurrent pass).

    With ``cfg.mapping="committed"`` each neural benchmark reads its
    namesake area; benchmarks whose area is missing are left empty with a
    reason.  ``"search"`` picks the best area and timestep per benchmark.
    """
    cfg.validate()
    card = ScoreCard(include_ost=cfg.include_ost, config_hash=config_hash, seed=seed)
    all_points = {(area, t): asm.isel_time_bin(t) for area, asm in features.items() for t in range(asm.n_time_bins)}
    for key, region, target in (("v4", "V4", targets.v4), ("it", "IT", targets.it)):
        if cfg.mapping == "search":
            points = all_points
        elif region in features:
            points = {k: v for k, v in all_points.items() if k[0] == region}
        else:
            card.reasons[key] = f"no {region} features"
            continue
        res = select_point(points, target, cfg.mapping, region, cfg.neural)
        setattr(card, key, res.score)
        card.choices[key] = {"area": res.area, "timestep": res.timestep}
        card.details[f"neural_{key}"] = res.result.detail_rows()

    area = cfg.behavior.area
    if area in features:
        proba = behavior_probabilities(features[area], targets, cfg.behavior)
        try:
            res = behavioral_predictivity(proba, targets.behavior, cfg.behavior.clip)
            card.behavior = res.score
            card.details["behavior"] = res.detail_rows(targets.behavior.stimulus_id, targets.behavior.categories)
        except UndefinedCorrelationError as exc:
            card.reasons["behavior"] = f"undefined: {exc}"
    else:
        card.reasons["behavior"] = f"no {area} features"

    if not cfg.include_ost:
        card.reasons["ost"] = "excluded"
    elif "IT" in features:
        try:
            res = ost_benchmark(features["IT"], targets.ost, cfg.ost)
            card.ost = res.score
            if res.reason != "ok":
                card.reasons["ost"] = res.reason
            card.details["ost"] = res.detail_rows()
        except InsufficientDataError as exc:
            card.reasons["ost"] = f"insufficient-data: {exc}"
        except UndefinedCorrelationError as exc:
            card.reasons["ost"] = f"undefined: {exc}"
    else:
        card.reasons["ost"] = "no IT features"
    return card
