"""Single-axis architecture ablations scored against fixed synthetic targets."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..assembly.synth import synth_stimuli
from ..errors import ConfigError, DimensionError
from ..model.config import CircuitConfig, validation_report
from ..model.cornet import build, compute_depth
from ..model.features import extract_features
from ..model.train import TrainRecipe, evaluate_accuracy, train
from .composite import composite
from .neural import NeuralConfig
from .suite import BenchmarkConfig, score_features
from .targets import synth_targets

log = logging.getLogger(__name__)

AXES = ("times", "expansion", "skip", "areas", "convs", "norm", "gate")
_AREA_FIELDS = {"expansion": "expansion", "skip": "skip", "convs": "convs_per_block", "norm": "norm", "gate": "gate"}


@dataclass(frozen=True)
class SweepBudget:
    """Data and training sizes shared by every variant."""

    train_images: int = 200
    test_images: int = 100
    bench_images: int = 200
    image_size: int = 32
    epochs: int = 5
    recipe: TrainRecipe = field(default_factory=lambda: TrainRecipe(batch=32, epochs=3, lr=0.05, lr_step=20,
                                                                   weight_decay=1e-4))
    neural_folds: int = 5
    seed: int = 0


def with_n_areas(base: CircuitConfig, n: int) -> CircuitConfig:
    """Change the number of areas, keeping V1 first and the last area last.

    Shrinking removes areas just before the last one; growing inserts copies
    of the second-to-last area (named ``<name>b``, ``<name>c`` ...) there.
    """
    areas = list(base.areas)
    if n < 2:
        raise ConfigError([f"areas must be >= 2, got {n}"])
    while len(areas) > n:
        del areas[-2]
    template = areas[-2] if len(areas) >= 2 else areas[-1]
    suffix = iter("bcdefgh")
    while len(areas) < n:
        areas.insert(-1, replace(template, name=template.name + next(suffix)))
    new = CircuitConfig.from_dict(base.to_dict())
    new.areas = areas
    return new


def expand_axes(base: CircuitConfig, axes: Dict) -> List[Tuple[str, str, CircuitConfig]]:
    """(axis, value label, config) for every single-axis variant of ``base``."""
    out = []
    for axis, values in axes.items():
        if axis not in AXES:
            raise ConfigError([f"unknown sweep axis {axis!r}; valid axes: {AXES}"])
        if axis == "times":
            for area, counts in values.items():
                for v in counts:
                    out.append((axis, f"{area}={v}", base.with_area(area, times=int(v))))
        elif axis == "areas":
            for v in values:
                out.append((axis, str(v), with_n_areas(base, int(v))))
        else:
            key = _AREA_FIELDS[axis]
            for v in values:
                cfg = CircuitConfig.from_dict(base.to_dict())
                cfg.areas = [a if a.style != "bottleneck" else replace(a, **{key: v}) for a in cfg.areas]
                out.append((axis, str(v), cfg))
    return out


@dataclass
class SweepTable:
    rows: List[dict]

    @property
    def baseline(self) -> dict:
        return self.rows[0]

    def deltas(self) -> Dict[str, Tuple[Optional[float], Optional[float]]]:
        return {r["variant"]: (r["delta_top1"], r["delta_brain_score"]) for r in self.rows}

    def to_csv(self, path) -> Path:
        path = Path(path)
        cols = list(self.rows[0].keys())
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in r.items()})
        return path

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.rows, indent=1) + "\n")
        return path


def _evaluate(cfg: CircuitConfig, data, budget: SweepBudget, bench_cfg: BenchmarkConfig) -> dict:
    train_set, test_set, bench_set, targets = data
    model = build(cfg, seed=budget.seed)
    recipe = replace(budget.recipe, epochs=budget.epochs, seed=budget.seed)
    train(model, train_set, recipe)
    top1 = evaluate_accuracy(model, test_set)
    feats = {a: extract_features(model, bench_set, a) for a in cfg.area_names}
    card = score_features(feats, targets, replace(bench_cfg, behavior=replace(bench_cfg.behavior, area=cfg.areas[-1].name)),
                          cfg.config_hash(), budget.seed)
    parts = (card.v4, card.it, card.behavior)
    bs = None if any(p is None for p in parts) else float(composite(*parts, include_ost=False))
    return {"top1": top1, "v4": card.v4, "it": card.it, "behavior": card.behavior, "brain_score": bs,
            "params": model.num_parameters()}


def ablation_sweep(base: CircuitConfig, axes: Optional[Dict] = None, budget: SweepBudget = SweepBudget()) -> SweepTable:
    """Train and score the baseline and every single-axis variant with one recipe.

    Brain score here excludes solution times.  Variants identical to the
    baseline are folded into the baseline row; invalid variants are listed
    with status ``skipped`` and no scores.
    """
    axes = axes or {}
    base = CircuitConfig.from_dict(base.to_dict())
    base.input_size = budget.image_size
    base.validate()
    k = base.num_classes
    data = (
        synth_stimuli(budget.train_images, k, budget.image_size, seed=budget.seed + 11),
        synth_stimuli(budget.test_images, k, budget.image_size, seed=budget.seed + 12),
    )
    bench = synth_stimuli(budget.bench_images, k, budget.image_size, seed=budget.seed + 13)
    data = data + (bench, synth_targets(bench, seed=budget.seed))
    bench_cfg = BenchmarkConfig(neural=NeuralConfig(folds=budget.neural_folds, seed=budget.seed), include_ost=False,
                                mapping="search")

    base_hash = base.config_hash()
    results: Dict[str, dict] = {base_hash: _evaluate(base, data, budget, bench_cfg)}
    rows = [{"variant": "baseline", "axis": "", "value": "", "config_hash": base_hash, "depth": compute_depth(base),
             "status": "ok", "aliases": ""}]
    for axis, value, cfg in expand_axes(base, axes):
        name = f"{axis}:{value}"
        cfg.input_size = budget.image_size
        problems = validation_report(cfg)
        h = cfg.config_hash()
        if h == base_hash:
            rows[0]["aliases"] = ";".join(filter(None, [rows[0]["aliases"], name]))
            continue
        row = {"variant": name, "axis": axis, "value": value, "config_hash": h, "depth": None,
               "status": "ok", "aliases": ""}
        if problems:
            row["status"] = "skipped: " + "; ".join(problems)
        else:
            row["depth"] = compute_depth(cfg)
            if h not in results:
                try:
                    build(cfg).spatial_plan()
                    log.info("sweep variant %s", name)
                    results[h] = _evaluate(cfg, data, budget, bench_cfg)
                except DimensionError as exc:
                    row["status"] = f"skipped: {exc}"
        rows.append(row)

    ref = results[base_hash]
    out = []
    for row in rows:
        res = results.get(row["config_hash"]) if row["status"] == "ok" else None
        for key in ("top1", "v4", "it", "behavior", "brain_score", "params"):
            row[key] = None if res is None else res[key]
        row["delta_top1"] = None if res is None else res["top1"] - ref["top1"]
        if res is None or res["brain_score"] is None or ref["brain_score"] is None:
            row["delta_brain_score"] = None
        else:
            row["delta_brain_score"] = res["brain_score"] - ref["brain_score"]
        out.append(row)
    return SweepTable(out)


# Every axis lists the baseline value too; those entries fold into the baseline row.
ABLATION_AXES = {
    "times": {"V2": [1, 2], "V4": [1, 2, 4], "IT": [1, 2]},
    "expansion": [1, 2, 4],
    "skip": [True, False],
    "areas": [3, 4, 5],
    "convs": [2, 3],
    "norm": ["per_timestep_batchnorm", "shared_groupnorm"],
    "gate": ["replace", "none"],
}
