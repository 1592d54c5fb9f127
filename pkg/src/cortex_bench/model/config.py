"""Declarative circuit descriptions for CORnet-style models."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

from ..errors import ConfigError

AREA_STYLES = ("v1", "bottleneck", "plain")
GATES = ("replace", "none")
NORMS = ("per_timestep_batchnorm", "shared_groupnorm")
STRIDE_POLICIES = ("first_pass_only",)


@dataclass
class AreaSpec:
    """One model area.

    ``style`` selects the circuit: ``"v1"`` is the feedforward pre-processor
    (7x7/s2 conv, 3x3/s2 max pool, 3x3 conv), ``"bottleneck"`` is the recurrent
    CORnet-S block and ``"plain"`` a single 3x3 conv (for degenerate CNNs).
    """

    name: str
    out_channels: int
    times: int = 1
    expansion: int = 4
    convs_per_block: int = 3
    skip: bool = True
    gate: str = "replace"
    norm: str = "per_timestep_batchnorm"
    stride: int = 2
    stride_policy: str = "first_pass_only"
    style: str = "bottleneck"

    @property
    def v1_style(self) -> bool:
        return self.style == "v1"


@dataclass
class DecoderHeadSpec:
    pool: str = "global_avg"


@dataclass
class CircuitConfig:
    areas: List[AreaSpec]
    classifier: DecoderHeadSpec = field(default_factory=DecoderHeadSpec)
    input_size: int = 224
    num_classes: int = 1000
    bn_momentum: float = 0.1

    def validate(self) -> "CircuitConfig":
        problems = validation_report(self)
        if problems:
            raise ConfigError(problems)
        return self

    def area(self, name: str) -> AreaSpec:
        for a in self.areas:
            if a.name == name:
                return a
        raise KeyError(f"unknown area {name!r}; valid names: {[a.name for a in self.areas]}")

    @property
    def area_names(self) -> List[str]:
        return [a.name for a in self.areas]

    def with_area(self, name: str, **changes) -> "CircuitConfig":
        new = copy.deepcopy(self)
        new.areas = [replace(a, **changes) if a.name == name else a for a in new.areas]
        return new

    def with_all_areas(self, **changes) -> "CircuitConfig":
        """Apply ``changes`` to every recurrent (non-V1) area."""
        new = copy.deepcopy(self)
        new.areas = [a if a.style == "v1" else replace(a, **changes) for a in new.areas]
        return new

    # serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitConfig":
        d = dict(d)
        areas = [AreaSpec(**a) for a in d.pop("areas")]
        classifier = DecoderHeadSpec(**d.pop("classifier", {}))
        return cls(areas=areas, classifier=classifier, **d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CircuitConfig":
        return cls.from_dict(json.loads(text))

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def validation_report(cfg: CircuitConfig) -> List[str]:
    """Every violated invariant, as human-readable strings (empty if valid)."""
    out = []
    if not cfg.areas:
        out.append("config must have at least one area")
    names = [a.name for a in cfg.areas]
    if len(set(names)) != len(names):
        out.append(f"area names must be unique, got {names}")
    if cfg.num_classes < 2:
        out.append(f"num_classes must be >= 2, got {cfg.num_classes}")
    if cfg.input_size < 1:
        out.append(f"input_size must be >= 1, got {cfg.input_size}")
    if cfg.classifier.pool != "global_avg":
        out.append(f"classifier.pool must be 'global_avg', got {cfg.classifier.pool!r}")
    for i, a in enumerate(cfg.areas):
        where = f"area {a.name!r}"
        if a.style not in AREA_STYLES:
            out.append(f"{where}: style must be one of {AREA_STYLES}, got {a.style!r}")
        if a.style == "v1" and i != 0:
            out.append(f"{where}: a v1-style area must come first")
        if a.out_channels < 1:
            out.append(f"{where}: out_channels must be >= 1")
        if not 1 <= a.times <= 8:
            out.append(f"{where}: times must lie in [1, 8], got {a.times}")
        if a.style in ("v1", "plain") and a.times != 1:
            out.append(f"{where}: {a.style} areas are feedforward (times must be 1)")
        if a.expansion not in (1, 2, 4):
            out.append(f"{where}: expansion must be 1, 2 or 4, got {a.expansion}")
        if a.convs_per_block not in (2, 3):
            out.append(f"{where}: convs_per_block must be 2 or 3, got {a.convs_per_block}")
        if a.gate not in GATES:
            out.append(f"{where}: gate must be one of {GATES}, got {a.gate!r}")
        if a.norm not in NORMS:
            out.append(f"{where}: norm must be one of {NORMS}, got {a.norm!r}")
        if a.stride_policy not in STRIDE_POLICIES:
            out.append(f"{where}: stride_policy must be 'first_pass_only'")
        if a.stride < 1:
            out.append(f"{where}: stride must be >= 1")
    return out


def cornet_s(num_classes: int = 1000, input_size: int = 224, width_divisor: int = 1) -> CircuitConfig:
    """The CORnet-S circuit: V1 feedforward, V2/IT twice, V4 four times."""
    w = lambda c: max(1, c // width_divisor)  # noqa: E731
    return CircuitConfig(
        areas=[
            AreaSpec("V1", w(64), style="v1"),
            AreaSpec("V2", w(128), times=2),
            AreaSpec("V4", w(256), times=4),
            AreaSpec("IT", w(512), times=2),
        ],
        input_size=input_size,
        num_classes=num_classes,
    )


def desk_cornet_s(num_classes: int = 10, input_size: int = 64, width_divisor: int = 4) -> CircuitConfig:
    """CORnet-S geometry at desk scale (64 px input, widths / 4, 10 classes)."""
    return cornet_s(num_classes=num_classes, input_size=input_size, width_divisor=width_divisor)


def plain_cnn(channels, input_size: int = 32, num_classes: int = 10, v1: bool = False) -> CircuitConfig:
    """Feedforward stack of plain 3x3 conv areas (optionally behind a V1 area)."""
    areas = [AreaSpec("V1", channels[0], style="v1")] if v1 else []
    rest = channels[1:] if v1 else channels
    areas += [AreaSpec(f"A{i + 1}", c, style="plain") for i, c in enumerate(rest)]
    return CircuitConfig(areas=areas, input_size=input_size, num_classes=num_classes)


def load_config(path) -> CircuitConfig:
    with open(path) as fh:
        return CircuitConfig.from_json(fh.read()).validate()
