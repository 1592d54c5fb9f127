"""Synthetic stimuli, neuroids and behavior with known ground truth.

All generators are pure functions of their arguments and ``seed``.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .data import BehavioralMatrix, NeuroidAssembly, StimulusSet

SHAPES = ("disk", "ring", "square", "triangle", "cross", "star", "bar", "crescent", "ell", "frame",
          "hexagon", "tee")


def _polygon_mask(u, v, vertices):
    """Even-odd rule point-in-polygon over coordinate grids."""
    inside = np.zeros(u.shape, dtype=bool)
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        cond = (y1 > v) != (y2 > v)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (v - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (u < xint)
    return inside


def _regular(k, r=1.0, phase=0.0):
    return [(r * math.cos(phase + 2 * math.pi * i / k), r * math.sin(phase + 2 * math.pi * i / k)) for i in range(k)]


def shape_mask(shape: str, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Mask of a unit-size shape in object coordinates (u right, v up)."""
    r = np.hypot(u, v)
    if shape == "disk":
        return r <= 1.0
    if shape == "ring":
        return (r <= 1.0) & (r >= 0.6)
    if shape == "square":
        return (np.abs(u) <= 0.8) & (np.abs(v) <= 0.8)
    if shape == "triangle":
        return _polygon_mask(u, v, _regular(3, 1.0, math.pi / 2))
    if shape == "cross":
        return ((np.abs(u) <= 0.3) & (np.abs(v) <= 1.0)) | ((np.abs(v) <= 0.3) & (np.abs(u) <= 1.0))
    if shape == "star":
        pts = []
        for i in range(10):
            rad = 1.0 if i % 2 == 0 else 0.42
            ang = math.pi / 2 + math.pi * i / 5
            pts.append((rad * math.cos(ang), rad * math.sin(ang)))
        return _polygon_mask(u, v, pts)
    if shape == "bar":
        return (np.abs(u) <= 1.0) & (np.abs(v) <= 0.3)
    if shape == "crescent":
        return (r <= 1.0) & (np.hypot(u - 0.45, v) > 0.8)
    if shape == "ell":
        return ((u >= -0.8) & (u <= -0.3) & (np.abs(v) <= 0.9)) | ((v >= -0.9) & (v <= -0.4) & (u >= -0.8) & (u <= 0.8))
    if shape == "frame":
        return (np.abs(u) <= 0.9) & (np.abs(v) <= 0.9) & ~((np.abs(u) <= 0.55) & (np.abs(v) <= 0.55))
    if shape == "hexagon":
        return _polygon_mask(u, v, _regular(6, 1.0))
    if shape == "tee":
        return ((np.abs(u) <= 0.25) & (v <= 0.6) & (v >= -1.0)) | ((np.abs(u) <= 1.0) & (v >= 0.45) & (v <= 0.95))
    raise KeyError(f"unknown shape {shape!r}; available: {SHAPES}")


def _background(rng, size: int) -> np.ndarray:
    noise = rng.normal(size=(size, size))
    smooth = ndimage.gaussian_filter(noise, sigma=size / 16, mode="wrap")
    smooth /= smooth.std() + 1e-12
    fine = ndimage.gaussian_filter(rng.normal(size=(size, size)), 1.0, mode="wrap")
    return 0.35 + 0.08 * smooth + 0.04 * fine / (fine.std() + 1e-12)


def synth_stimuli(n: int, categories: Union[int, Sequence[str]] = 10, size: int = 64, seed: int = 0,
                  rotation: float = 30.0, balanced: bool = True) -> StimulusSet:
    """Grayscale images of 2-D shapes over textured noise backgrounds.

    Each image varies object position, scale, rotation (uniform within
    +/- ``rotation`` degrees) and contrast.  Labels cycle through the
    categories (``balanced``) before the order is shuffled.
    """
    cats = list(SHAPES[:categories]) if isinstance(categories, int) else list(categories)
    for c in cats:
        if c not in SHAPES:
            raise KeyError(f"unknown shape {c!r}; available: {SHAPES}")
    rng = np.random.default_rng(seed)
    if balanced:
        labels = np.arange(n) % len(cats)
        rng.shuffle(labels)
    else:
        labels = rng.integers(0, len(cats), size=n)
    images = np.empty((n, 1, size, size), dtype=np.float32)
    params = []
    grid = (np.arange(size) + 0.5) / size * 2 - 1  # [-1, 1]
    gx, gy = np.meshgrid(grid, -grid)
    for i in range(n):
        scale = rng.uniform(0.3, 0.55)
        cx, cy = rng.uniform(-0.35, 0.35, size=2)
        theta = math.radians(rng.uniform(-rotation, rotation))
        contrast = rng.uniform(0.35, 0.6) * rng.choice([-1.0, 1.0])
        dx, dy = gx - cx, gy - cy
        u = (math.cos(theta) * dx + math.sin(theta) * dy) / scale
        v = (-math.sin(theta) * dx + math.cos(theta) * dy) / scale
        mask = shape_mask(cats[labels[i]], u, v).astype(float)
        mask = ndimage.gaussian_filter(mask, 0.6)
        img = _background(rng, size) + contrast * mask
        images[i, 0] = np.clip(img, 0.0, 1.0)
        params.append({"shape": cats[labels[i]], "x": float(cx), "y": float(cy), "scale": float(scale),
                       "rotation_deg": math.degrees(theta), "contrast": float(contrast)})
    ids = np.array([f"stim{seed:04d}_{i:05d}" for i in range(n)], dtype=str)
    return StimulusSet(images, ids, labels, cats, params, seed)


def attainable_r(snr: float) -> float:
    """Expected correlation between a noisy neuroid and its noiseless signal."""
    if np.isinf(snr):
        return 1.0
    return math.sqrt(snr / (1.0 + snr))


def _zscore_columns(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    sd = x.std(axis=0)
    return (x - x.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def synth_neuroids(features: Optional[np.ndarray] = None, n_neuroids: int = 40, snr: Union[float, Sequence[float]] = np.inf,
                   nonlinearity: str = "none", seed: int = 0, n_stimuli: Optional[int] = None, latent_dim: int = 20,
                   stimulus_id=None, object_label=None, region: str = "IT", repetitions: Optional[int] = None,
                   time_bins=None, dtype=np.float32) -> NeuroidAssembly:
    """Neuroids that are fixed random linear readouts of ``features`` plus noise.

    Each neuroid's signal is standardized to unit variance and mixed with
    unit-variance Gaussian noise so that the correlation between response
    and signal is ``sqrt(snr / (1 + snr))``.  ``snr`` may be a list with one
    entry per time bin (then ``time_bins`` must be given).  With
    ``repetitions`` the noise is drawn independently per repetition.
    """
    rng = np.random.default_rng(seed)
    if features is None:
        if n_stimuli is None:
            raise ValueError("give features or n_stimuli")
        features = rng.normal(size=(n_stimuli, latent_dim))
    f = _zscore_columns(features)
    n = f.shape[0]
    mixing = rng.normal(size=(f.shape[1], n_neuroids))
    signal = f @ mixing
    if nonlinearity == "relu":
        signal = np.maximum(signal, 0.0)
    elif nonlinearity != "none":
        raise ValueError(f"nonlinearity must be 'none' or 'relu', got {nonlinearity!r}")
    signal = _zscore_columns(signal)

    snrs = np.atleast_1d(np.asarray(snr, dtype=float))
    if time_bins is None and len(snrs) > 1:
        raise ValueError("a per-bin snr list needs time_bins")
    n_bins = 1 if time_bins is None else len(time_bins)
    if len(snrs) == 1:
        snrs = np.repeat(snrs, n_bins)
    reps = repetitions or 1
    out = np.empty((n, n_neuroids, reps, n_bins))
    for b, s in enumerate(snrs):
        a = 1.0 if np.isinf(s) else math.sqrt(s / (1.0 + s))
        c = 0.0 if np.isinf(s) else math.sqrt(1.0 / (1.0 + s))
        noise = rng.normal(size=(n, n_neuroids, reps))
        out[..., b] = a * signal[:, :, None] + c * noise
    dims = ["stimulus", "neuroid"]
    if repetitions is None:
        out = out[:, :, 0]
    else:
        dims.append("repetition")
    if time_bins is None:
        out = out[..., 0]
    else:
        dims.append("time_bin")
    ids = stimulus_id if stimulus_id is not None else np.array([f"s{i:05d}" for i in range(n)])
    labels = object_label if object_label is not None else np.zeros(n, dtype=int)
    return NeuroidAssembly(
        data=out.astype(dtype),
        stimulus_id=ids,
        object_label=labels,
        neuroid_id=np.array([f"{region}_{j:04d}" for j in range(n_neuroids)]),
        region=region,
        dims=tuple(dims),
        time_bins=time_bins,
        provenance={"source": "synth_neuroids", "seed": seed, "snr": snrs.tolist(),
                    "attainable_r": [attainable_r(s) for s in snrs], "nonlinearity": nonlinearity,
                    "rates": "pre-normalized"},
    )


def pair_accuracies(proba: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """p(truth) / (p(truth) + p(choice)) for each image x distractor."""
    proba = np.asarray(proba, dtype=np.float64)
    truth = proba[np.arange(len(labels)), labels][:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        acc = truth / (truth + proba)
    acc[np.arange(len(labels)), labels] = np.nan
    return acc


def synth_behavior(planted: Optional[np.ndarray] = None, labels=None, proba: Optional[np.ndarray] = None,
                   trials_per_pair: Optional[int] = 60, seed: int = 0, categories=None,
                   stimulus_id=None) -> BehavioralMatrix:
    """Binomially sampled accuracies from planted pair difficulties.

    Give either ``planted`` (image x distractor success probabilities) or
    decoder ``proba`` (image x class), which is converted with
    :func:`pair_accuracies`.  ``trials_per_pair=None`` returns the planted
    probabilities exactly.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if proba is not None:
        planted = pair_accuracies(proba, labels)
    if planted is None:
        raise ValueError("give planted accuracies or decoder probabilities")
    planted = np.asarray(planted, dtype=np.float64)
    n, k = planted.shape
    rng = np.random.default_rng(seed)
    mask = np.zeros((n, k), dtype=bool)
    mask[np.arange(n), labels] = True
    p = np.where(mask, 0.5, np.nan_to_num(planted, nan=0.5))
    if trials_per_pair is None:
        acc, trials = p.copy(), None
    else:
        trials = np.full((n, k), trials_per_pair, dtype=np.int64)
        trials[mask] = 0
        acc = rng.binomial(trials_per_pair, p) / trials_per_pair
    cats = list(categories) if categories is not None else [f"obj{i:02d}" for i in range(k)]
    return BehavioralMatrix(acc, labels, cats, stimulus_id, trials)
