"""Layer operations with hand-written backward passes.

Convolution uses the cross-correlation convention (no kernel flip) with
symmetric zero padding, lowered to a single GEMM over unfolded patches.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import ConfigError, DimensionError
from .core import Tensor


class NormStateError(RuntimeError):
    """Batch norm evaluated with running statistics that were never set."""


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def _patches(xp: np.ndarray, kh: int, kw: int, stride: int, ho: int, wo: int) -> np.ndarray:
    """Strided view of shape (C, kh, kw, N, Ho, Wo) over a padded input."""
    n, c, _, _ = xp.shape
    sn, sc, sh, sw = xp.strides
    return as_strided(
        xp,
        shape=(c, kh, kw, n, ho, wo),
        strides=(sc, sh, sw, sn, sh * stride, sw * stride),
        writeable=False,
    )


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of ``x[N,C,H,W]`` with ``weight[K,C,kh,kw]``."""
    if x.ndim != 4:
        raise DimensionError(f"conv2d input must be 4-D [N,C,H,W], got shape {x.shape}")
    if weight.ndim != 4:
        raise DimensionError(f"conv2d weight must be 4-D [K,C,kh,kw], got shape {weight.shape}")
    n, c, h, w = x.shape
    k, wc, kh, kw = weight.shape
    if wc != c:
        raise DimensionError(f"conv2d channel axis mismatch: input C={c} (axis 1) vs weight C={wc} (axis 1)")
    if stride < 1:
        raise DimensionError(f"conv2d stride must be >= 1, got {stride}")
    if kh > h + 2 * padding or kw > w + 2 * padding:
        raise DimensionError(
            f"conv2d kernel {kh}x{kw} exceeds padded spatial axes (H={h}, W={w}, padding={padding})"
        )
    if bias is not None and bias.shape != (k,):
        raise DimensionError(f"conv2d bias must have shape ({k},), got {bias.shape}")

    ho = conv_output_size(h, kh, stride, padding)
    wo = conv_output_size(w, kw, stride, padding)
    xd, wd = x.data, weight.data
    w2 = wd.reshape(k, c * kh * kw)

    if kh == 1 and kw == 1 and padding == 0:
        xs = xd[:, :, ::stride, ::stride] if stride > 1 else xd
        cols = np.ascontiguousarray(xs.transpose(1, 0, 2, 3)).reshape(c, n * ho * wo)
    else:
        xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else xd
        cols = _patches(xp, kh, kw, stride, ho, wo).reshape(c * kh * kw, n * ho * wo)
    out = (w2 @ cols).reshape(k, n, ho, wo).transpose(1, 0, 2, 3)
    if bias is not None:
        out = out + bias.data.reshape(1, k, 1, 1)
    out = np.ascontiguousarray(out)

    def backward(g):
        g2 = np.ascontiguousarray(g.transpose(1, 0, 2, 3)).reshape(k, n * ho * wo)
        gw = (g2 @ cols.T).reshape(wd.shape) if weight.requires_grad else None
        gb = g.sum(axis=(0, 2, 3)) if bias is not None and bias.requires_grad else None
        gx = None
        if x.requires_grad:
            dcols = (w2.T @ g2).reshape(c, kh, kw, n, ho, wo)
            gxp = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=xd.dtype)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += dcols[
                        :, i, j
                    ].transpose(1, 0, 2, 3)
            gx = gxp[:, :, padding : padding + h, padding : padding + w] if padding else gxp
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, "conv2d")


def maxpool2d(x: Tensor, k: int, stride: int, padding: int = 0) -> Tensor:
    """Max over ``k x k`` windows; padded cells never win (padded with -inf)."""
    if x.ndim != 4:
        raise DimensionError(f"maxpool2d input must be 4-D, got shape {x.shape}")
    n, c, h, w = x.shape
    if k > h + 2 * padding or k > w + 2 * padding:
        raise DimensionError(f"maxpool2d window {k} exceeds spatial axes H={h}, W={w}")
    ho = conv_output_size(h, k, stride, padding)
    wo = conv_output_size(w, k, stride, padding)
    xd = x.data
    xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding), (padding, padding)), constant_values=-np.inf) if padding else xd
    sn, sc, sh, sw = xp.strides
    windows = as_strided(
        xp, shape=(n, c, ho, wo, k, k), strides=(sn, sc, sh * stride, sw * stride, sh, sw), writeable=False
    ).reshape(n, c, ho, wo, k * k)
    arg = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        gxp = np.zeros(xp.shape, dtype=xd.dtype)
        for idx in range(k * k):
            i, j = divmod(idx, k)
            gxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += np.where(arg == idx, g, 0)
        return (gxp[:, :, padding : padding + h, padding : padding + w] if padding else gxp,)

    return Tensor.from_op(np.ascontiguousarray(out), (x,), backward, "maxpool2d")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor.from_op(x.data * mask, (x,), lambda g: (g * mask,), "relu")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ weight.T + bias`` with ``weight`` of shape [out, in]."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise DimensionError(f"linear: input {x.shape} incompatible with weight {weight.shape} (axis 1)")
    xd, wd = x.data, weight.data
    out = xd @ wd.T
    if bias is not None:
        out = out + bias.data

    def backward(g):
        return (
            g @ wd if x.requires_grad else None,
            g.T @ xd if weight.requires_grad else None,
            g.sum(axis=0) if bias is not None else None,
        )

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, "linear")


def global_avg_pool(x: Tensor) -> Tensor:
    """Average each feature map over its full spatial extent: [N,C,H,W] -> [N,C]."""
    if x.ndim != 4:
        raise DimensionError(f"global_avg_pool expects 4-D input, got {x.shape}")
    n, c, h, w = x.shape
    scale = 1.0 / (h * w)
    return Tensor.from_op(
        x.data.mean(axis=(2, 3)),
        (x,),
        lambda g: (np.broadcast_to((g * scale)[:, :, None, None], x.shape).copy(),),
        "global_avg_pool",
    )


def flatten(x: Tensor) -> Tensor:
    return x.reshape(x.shape[0], -1)


# normalization ----------------------------------------------------------

def _normalize(xd: np.ndarray, axes: tuple, eps: float):
    mean = xd.mean(axis=axes, keepdims=True)
    var = xd.var(axis=axes, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    return (xd - mean) * inv_std, inv_std, mean, var


def _normalize_backward(gxhat: np.ndarray, xhat: np.ndarray, inv_std: np.ndarray, axes: tuple) -> np.ndarray:
    return inv_std * (
        gxhat - gxhat.mean(axis=axes, keepdims=True) - xhat * (gxhat * xhat).mean(axis=axes, keepdims=True)
    )


class RunningStats:
    """Per-channel running mean/variance for batch norm (eval mode)."""

    def __init__(self, num_features: int, momentum: float = 0.1, dtype=np.float32):
        self.momentum = momentum
        self.mean = np.zeros(num_features, dtype=dtype)
        self.var = np.ones(num_features, dtype=dtype)
        self.initialized = False

    def update(self, batch_mean: np.ndarray, batch_var_unbiased: np.ndarray) -> None:
        m = self.momentum
        self.mean = ((1 - m) * self.mean + m * batch_mean).astype(self.mean.dtype)
        self.var = ((1 - m) * self.var + m * batch_var_unbiased).astype(self.var.dtype)
        self.initialized = True


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_stats: Optional[RunningStats] = None,
    mode: str = "train",
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalization of [N,C,H,W] (or [N,C]) activations.

    In ``train`` mode batch statistics are used and ``running_stats`` (if
    given) is updated with the unbiased batch variance.  ``eval`` mode uses
    the running statistics and refuses to run before any train step.
    """
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError(f"batch_norm parameters must have length C={c}, got {gamma.shape}, {beta.shape}")
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, c) + (1,) * (x.ndim - 2)
    g_, b_ = gamma.data.reshape(bshape), beta.data.reshape(bshape)

    if mode == "train":
        xhat, inv_std, mean, var = _normalize(x.data, axes, eps)
        if running_stats is not None:
            count = x.data.size // c
            unbiased = var.reshape(c) * (count / (count - 1) if count > 1 else 1.0)
            running_stats.update(mean.reshape(c), unbiased)

        def backward(g):
            gx = _normalize_backward(g * g_, xhat, inv_std, axes) if x.requires_grad else None
            return gx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    elif mode == "eval":
        if running_stats is None or not running_stats.initialized:
            raise NormStateError("batch_norm in eval mode requires running statistics from at least one train step")
        mean = running_stats.mean.reshape(bshape)
        inv_std = 1.0 / np.sqrt(running_stats.var.reshape(bshape) + eps)
        xhat = (x.data - mean) * inv_std

        def backward(g):
            return g * g_ * inv_std, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    else:
        raise ValueError(f"batch_norm mode must be 'train' or 'eval', got {mode!r}")

    out = (g_ * xhat + b_).astype(x.dtype, copy=False)
    return Tensor.from_op(out, (x, gamma, beta), backward, "batch_norm")


def group_norm(x: Tensor, groups: int, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize each sample over (channels-in-group x H x W); no running state."""
    n, c = x.shape[:2]
    if groups < 1 or c % groups:
        raise ConfigError([f"group_norm: C={c} is not divisible by groups={groups}"])
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError(f"group_norm parameters must have length C={c}")
    bshape = (1, c) + (1,) * (x.ndim - 2)
    g_, b_ = gamma.data.reshape(bshape), beta.data.reshape(bshape)
    xg = x.data.reshape(n, groups, -1)
    xhat_g, inv_std, _, _ = _normalize(xg, (2,), eps)
    xhat = xhat_g.reshape(x.shape)
    red = (0,) + tuple(range(2, x.ndim))

    def backward(g):
        gx = None
        if x.requires_grad:
            gxhat = (g * g_).reshape(n, groups, -1)
            gx = _normalize_backward(gxhat, xhat_g, inv_std, (2,)).reshape(x.shape)
        return gx, (g * xhat).sum(axis=red), g.sum(axis=red)

    out = (g_ * xhat + b_).astype(x.dtype, copy=False)
    return Tensor.from_op(out, (x, gamma, beta), backward, "group_norm")


# classification ---------------------------------------------------------

def softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(s, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    s = np.exp(out)
    return Tensor.from_op(out, (x,), lambda g: (g - s * g.sum(axis=axis, keepdims=True),), "log_softmax")


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise DimensionError(f"cross_entropy: logits {logits.shape} vs labels {labels.shape}")
    n, k = logits.shape
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    nll = lse - z[np.arange(n), labels]
    loss = np.asarray(nll.mean(), dtype=logits.dtype)

    def backward(g):
        p = np.exp(z - lse[:, None])
        p[np.arange(n), labels] -= 1.0
        return (p * (g / n),)

    return Tensor.from_op(loss, (logits,), backward, "cross_entropy")
