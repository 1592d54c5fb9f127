"""ScoreCard: headline scores plus detail tables, serialized as JSON + CSV."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .composite import composite

BENCHMARKS = ("v4", "it", "behavior", "ost")


@dataclass
class ScoreCard:
    v4: Optional[float] = None
    it: Optional[float] = None
    behavior: Optional[float] = None
    ost: Optional[float] = None
    include_ost: bool = True
    config_hash: str = ""
    seed: int = 0
    reasons: Dict[str, str] = field(default_factory=dict)
    choices: Dict[str, dict] = field(default_factory=dict)
    details: Dict[str, List[dict]] = field(default_factory=dict)
    extras: Dict[str, float] = field(default_factory=dict)  # e.g. linear-probe accuracy

    @property
    def composite(self) -> Optional[float]:
        """Mean of the included scores; None while any of them is missing."""
        parts = [self.v4, self.it, self.behavior] + ([self.ost] if self.include_ost else [])
        if any(p is None for p in parts):
            return None
        return float(composite(self.v4, self.it, self.behavior, self.ost or 0.0, self.include_ost))

    def scores(self) -> Dict[str, Optional[float]]:
        return {b: getattr(self, b) for b in BENCHMARKS}

    def to_dict(self, details_path: Optional[str] = None) -> dict:
        return {"benchmarks": self.scores(), "composite": self.composite, "include_ost": self.include_ost,
                "details_path": details_path, "config_hash": self.config_hash, "seed": self.seed,
                "reasons": dict(self.reasons), "choices": self.choices, "extras": dict(self.extras)}

    def save(self, path) -> Path:
        """Write ``path`` (JSON) and one CSV per detail table in ``<stem>_details/``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        details_dir = path.with_name(path.stem + "_details")
        if self.details:
            details_dir.mkdir(exist_ok=True)
            for name, rows in sorted(self.details.items()):
                write_csv(details_dir / f"{name}.csv", rows)
        rel = details_dir.name if self.details else None
        path.write_text(json.dumps(_clean(self.to_dict(rel)), indent=1, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "ScoreCard":
        path = Path(path)
        raw = json.loads(path.read_text())
        card = cls(**raw["benchmarks"], include_ost=raw.get("include_ost", True), config_hash=raw.get("config_hash", ""),
                   seed=raw.get("seed", 0), reasons=raw.get("reasons", {}), choices=raw.get("choices", {}),
                   extras=raw.get("extras", {}))
        if raw.get("details_path"):
            for f in sorted((path.parent / raw["details_path"]).glob("*.csv")):
                card.details[f.stem] = read_csv(f)
        return card


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_csv(path, rows: List[dict]) -> Path:
    path = Path(path)
    cols = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v))
                        for k, v in r.items()})
    return path


def read_csv(path) -> List[dict]:
    def parse(v):
        if v == "":
            return None
        try:
            return float(v)
        except ValueError:
            return v

    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]
