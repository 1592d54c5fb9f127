"""CORnet-style recurrent convolutional models built from a CircuitConfig."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import DimensionError
from ..tensor import functional as F
from ..tensor.checkpoint import Checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from ..tensor.core import Tensor
from ..tensor.nn import BatchNorm2d, Conv2d, GroupNorm, Linear, Module
from .config import AreaSpec, CircuitConfig

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class ActivationRecord:
    """Output of one area at one recurrent timestep."""

    area: str
    timestep: int
    tensor: np.ndarray  # [N, C, H, W]

    @property
    def features(self) -> np.ndarray:
        return self.tensor.mean(axis=(2, 3))


def _strided_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Conv output size, or 0 when a strided stage gets fewer than ``stride`` pixels."""
    return 0 if size < stride else F.conv_output_size(size, kernel, stride, padding)


def _norm(spec: AreaSpec, channels: int, momentum: float, dtype):
    if spec.norm == "shared_groupnorm":
        return GroupNorm(channels, dtype=dtype)
    return BatchNorm2d(channels, momentum=momentum, dtype=dtype)


class V1Area(Module):
    def __init__(self, spec: AreaSpec, in_channels: int, rng, dtype, momentum: float):
        c = spec.out_channels
        self.spec = spec
        self.conv1 = Conv2d(in_channels, c, 7, stride=2, padding=3, rng=rng, dtype=dtype)
        self.norm1 = _norm(spec, c, momentum, dtype)
        self.conv2 = Conv2d(c, c, 3, stride=1, padding=1, rng=rng, dtype=dtype)
        self.norm2 = _norm(spec, c, momentum, dtype)

    def output_size(self, size: int) -> int:
        size = _strided_size(size, 7, 2, 3)
        return _strided_size(size, 3, 2, 1)

    def __call__(self, x: Tensor, record: Optional[list] = None) -> Tensor:
        x = F.relu(self.norm1(self.conv1(x)))
        x = F.maxpool2d(x, 3, 2, padding=1)
        x = F.relu(self.norm2(self.conv2(x)))
        if record is not None:
            record.append(ActivationRecord(self.spec.name, 0, x.data))
        return x


class PlainArea(Module):
    def __init__(self, spec: AreaSpec, in_channels: int, rng, dtype, momentum: float):
        self.spec = spec
        self.conv = Conv2d(in_channels, spec.out_channels, 3, stride=spec.stride, padding=1, rng=rng, dtype=dtype)
        self.norm = _norm(spec, spec.out_channels, momentum, dtype)

    def output_size(self, size: int) -> int:
        return _strided_size(size, 3, self.spec.stride, 1)

    def __call__(self, x: Tensor, record: Optional[list] = None) -> Tensor:
        x = F.relu(self.norm(self.conv(x)))
        if record is not None:
            record.append(ActivationRecord(self.spec.name, 0, x.data))
        return x


class BottleneckArea(Module):
    """Recurrent CORnet-S block with weights shared across timesteps.

    t = 0: adapter 1x1 conv sets the channel count; the 3x3 conv and the skip
    projection use the area stride.  t > 0: stride 1, identity skip, and the
    previous output replaces the input (``gate="replace"``) or is summed with
    the subsampled adapted input (``gate="none"``).
    """

    def __init__(self, spec: AreaSpec, in_channels: int, rng, dtype, momentum: float):
        c, inner = spec.out_channels, spec.out_channels * spec.expansion
        self.spec = spec
        steps = spec.times if spec.norm == "per_timestep_batchnorm" else 1
        self.conv_input = Conv2d(in_channels, c, 1, rng=rng, dtype=dtype)
        if spec.skip:
            self.skip = Conv2d(c, c, 1, stride=spec.stride, rng=rng, dtype=dtype)
            self.norm_skip = _norm(spec, c, momentum, dtype)
        if spec.convs_per_block == 3:
            self.conv1 = Conv2d(c, inner, 1, rng=rng, dtype=dtype)
            self.norm1 = [_norm(spec, inner, momentum, dtype) for _ in range(steps)]
            conv2_in = inner
        else:
            conv2_in = c
        self.conv2 = Conv2d(conv2_in, inner, 3, stride=spec.stride, padding=1, rng=rng, dtype=dtype)
        self.norm2 = [_norm(spec, inner, momentum, dtype) for _ in range(steps)]
        self.conv3 = Conv2d(inner, c, 1, rng=rng, dtype=dtype)
        self.norm3 = [_norm(spec, c, momentum, dtype) for _ in range(steps)]

    def output_size(self, size: int) -> int:
        return _strided_size(size, 3, self.spec.stride, 1)

    def _n(self, norms, t):
        return norms[t] if len(norms) > 1 else norms[0]

    def __call__(self, x: Tensor, record: Optional[list] = None) -> Tensor:
        spec = self.spec
        inp = self.conv_input(x)
        gate_input = None
        state = inp
        for t in range(spec.times):
            stride = spec.stride if t == 0 else 1
            if t == 0:
                block_in = inp
                residual = self.norm_skip(self.skip(inp)) if spec.skip else None
            else:
                block_in = state if spec.gate == "replace" else state + gate_input
                residual = block_in if spec.skip else None
            h = block_in
            if spec.convs_per_block == 3:
                h = F.relu(self._n(self.norm1, t)(self.conv1(h)))
            h = F.relu(self._n(self.norm2, t)(self.conv2(h, stride=stride)))
            h = self._n(self.norm3, t)(self.conv3(h))
            if residual is not None:
                h = h + residual
            state = F.relu(h)
            if t == 0 and spec.gate == "none" and spec.times > 1:
                gate_input = Tensor.from_op(
                    np.ascontiguousarray(inp.data[:, :, ::stride, ::stride]),
                    (inp,),
                    _subsample_backward(inp.shape, stride),
                    "subsample",
                )
            if record is not None:
                record.append(ActivationRecord(spec.name, t, state.data))
        return state


def _subsample_backward(shape, stride):
    def backward(g):
        out = np.zeros(shape, dtype=g.dtype)
        out[:, :, ::stride, ::stride] = g
        return (out,)

    return backward


_AREA_TYPES = {"v1": V1Area, "plain": PlainArea, "bottleneck": BottleneckArea}


class Model(Module):
    """A built circuit: areas in sequence, then global average pool + linear."""

    def __init__(self, config: CircuitConfig, seed: int = 0, dtype=np.float32, in_channels: int = 3):
        config.validate()
        self.config = config
        self.seed = seed
        self.dtype = np.dtype(dtype).type
        self.in_channels = in_channels
        self.input_mean = np.array(IMAGENET_MEAN[:in_channels], dtype=np.float64)
        self.input_std = np.array(IMAGENET_STD[:in_channels], dtype=np.float64)
        rng = np.random.default_rng(seed)
        areas, c = [], in_channels
        for spec in config.areas:
            areas.append(_AREA_TYPES[spec.style](spec, c, rng, self.dtype, config.bn_momentum))
            c = spec.out_channels
        self.areas = areas
        self.decoder = Linear(c, config.num_classes, rng=rng, dtype=self.dtype)

    # geometry --------------------------------------------------------------
    def spatial_plan(self, size: Optional[int] = None) -> List[Tuple[str, int]]:
        """Output spatial size after each area; raises if one reaches 0."""
        size = self.config.input_size if size is None else size
        plan = []
        for area in self.areas:
            size = area.output_size(size)
            if size < 1:
                raise DimensionError(
                    f"input too small: spatial size reaches 0 in area {area.spec.name!r}"
                )
            plan.append((area.spec.name, size))
        return plan

    def area_module(self, name: str):
        for a in self.areas:
            if a.spec.name == name:
                return a
        raise KeyError(f"unknown area {name!r}; valid names: {self.config.area_names}")

    # running ---------------------------------------------------------------
    def forward(self, images, record: bool = False):
        """Run the circuit on preprocessed ``images`` [N, C, H, W].

        Returns ``(logits, records)``; ``records`` is None unless ``record``.
        """
        x = images if isinstance(images, Tensor) else Tensor(np.asarray(images, dtype=self.dtype))
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise DimensionError(f"images must be [N,{self.in_channels},H,W], got {x.shape}")
        h, w = x.shape[2:]
        self.spatial_plan(min(h, w))
        records: Optional[list] = [] if record else None
        for area in self.areas:
            x = area(x, records)
        logits = self.decoder(F.global_avg_pool(x))
        return logits, records

    __call__ = forward

    def normalize(self, images: np.ndarray) -> np.ndarray:
        """Mean/std normalization per channel (inputs in [0, 1])."""
        m = self.input_mean.reshape(1, -1, 1, 1)
        s = self.input_std.reshape(1, -1, 1, 1)
        return ((images - m) / s).astype(self.dtype)

    # state -----------------------------------------------------------------
    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {name: p.data for name, p in self.named_parameters()}
        state.update(dict(self.named_buffers()))
        return state

    def _buffer_owners(self):
        owners = {}
        for name, module in _named_modules(self):
            stats = getattr(module, "stats", None)
            if isinstance(stats, F.RunningStats):
                owners[f"{name}stats"] = stats
        return owners

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        owners = self._buffer_owners()
        missing = [k for k in params if k not in state]
        if missing:
            raise KeyError(f"state is missing parameters: {missing[:5]}")
        for k, p in params.items():
            arr = np.asarray(state[k])
            if arr.shape != p.shape:
                raise DimensionError(f"parameter {k}: shape {arr.shape} != {p.shape}")
            p.data = arr.astype(self.dtype).copy()
        for prefix, stats in owners.items():
            if prefix + ".running_mean" in state:
                stats.mean = np.asarray(state[prefix + ".running_mean"], dtype=self.dtype).copy()
                stats.var = np.asarray(state[prefix + ".running_var"], dtype=self.dtype).copy()
                stats.initialized = True

    def checkpoint_bytes(self, extra: Optional[dict] = None) -> bytes:
        state = self.state_dict()
        kinds = {k: "buffer" for k, _ in self.named_buffers()}
        info = {"input_mean": self.input_mean.tolist(), "input_std": self.input_std.tolist(),
                "in_channels": self.in_channels, "buffers_initialized": self.stats_initialized()}
        info.update(extra or {})
        return encode_checkpoint(state, graph=self.config.to_dict(), seed=self.seed, kinds=kinds, extra=info)

    def save(self, path, extra: Optional[dict] = None) -> str:
        data = self.checkpoint_bytes(extra)
        with open(path, "wb") as fh:
            fh.write(data)
        return str(path)

    def stats_initialized(self) -> bool:
        owners = self._buffer_owners()
        return bool(owners) and all(s.initialized for s in owners.values())

    @classmethod
    def from_checkpoint(cls, ckpt, dtype=np.float32) -> "Model":
        if not isinstance(ckpt, Checkpoint):
            ckpt = load_checkpoint(ckpt)
        extra = ckpt.header.get("extra", {})
        model = cls(CircuitConfig.from_dict(ckpt.graph), seed=ckpt.seed or 0, dtype=dtype,
                    in_channels=extra.get("in_channels", 3))
        state = dict(ckpt.tensors)
        if not extra.get("buffers_initialized", True):
            state = {k: v for k, v in state.items() if not k.endswith(("running_mean", "running_var"))}
        model.load_state_dict(state)
        if "input_mean" in extra:
            model.input_mean = np.asarray(extra["input_mean"], dtype=np.float64)
            model.input_std = np.asarray(extra["input_std"], dtype=np.float64)
        return model


def _named_modules(module: Module, prefix: str = ""):
    yield prefix, module
    for key, value in vars(module).items():
        if isinstance(value, Module):
            yield from _named_modules(value, f"{prefix}{key}.")
        elif isinstance(value, (list, tuple)):
            for i, item in enumerate(value):
                if isinstance(item, Module):
                    yield from _named_modules(item, f"{prefix}{key}.{i}.")


def build(config: CircuitConfig, seed: int = 0, dtype=np.float32, in_channels: int = 3) -> Model:
    return Model(config, seed=seed, dtype=dtype, in_channels=in_channels)


def count_conv_linear_weights(model: Model) -> int:
    """Element count of convolution and linear weights (excludes norm affine params)."""
    return sum(p.size for name, p in model.named_parameters() if p.ndim in (2, 4))


def compute_depth(config: CircuitConfig) -> int:
    """Unique conv/linear layers on the longest feedforward path.

    Shared recurrent layers count once; the skip projection runs in parallel
    with the block and is never on the longest path; the adapter 1x1 conv is
    in series with the block and is counted.
    """
    depth = 0
    for a in config.areas:
        if a.style == "v1":
            depth += 2
        elif a.style == "plain":
            depth += 1
        else:
            depth += 1 + a.convs_per_block
    return depth + 1
