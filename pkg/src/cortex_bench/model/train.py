"""Supervised training of circuit models with momentum SGD."""
from __future__ import annotations

import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from scipy import ndimage

from ..assembly.data import StimulusSet
from ..tensor import SGD, cross_entropy, no_grad
from .cornet import Model

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; ``diagnostics`` describes the offending batch."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass
class TrainRecipe:
    batch: int = 256
    epochs: int = 43
    lr: float = 0.1
    lr_step: int = 20
    lr_gamma: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    seed: int = 0
    augment: bool = True

    def lr_at(self, epoch: int) -> float:
        """Step schedule: ``lr`` divided by 1/``lr_gamma`` every ``lr_step`` epochs."""
        return self.lr * self.lr_gamma ** (epoch // self.lr_step)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    checkpoints: List[Union[str, bytes]]
    log: List[dict] = field(default_factory=list)

    @property
    def final_accuracy(self) -> Optional[float]:
        return self.log[-1]["train_accuracy"] if self.log else None


def dataset_stats(images: np.ndarray):
    """Per-channel mean and std of a [n, C, H, W] image array."""
    return images.mean(axis=(0, 2, 3)).astype(np.float64), images.std(axis=(0, 2, 3)).astype(np.float64) + 1e-8


def center_crop(images: np.ndarray, size: int) -> np.ndarray:
    h, w = images.shape[2:]
    if h < size or w < size:
        raise ValueError(f"cannot crop {h}x{w} images to {size}")
    top, left = (h - size) // 2, (w - size) // 2
    return images[:, :, top : top + size, left : left + size]


def resize(images: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize of [n, C, H, W] images to ``size x size``."""
    h, w = images.shape[2:]
    if (h, w) == (size, size):
        return images
    return ndimage.zoom(images, (1, 1, size / h, size / w), order=1)


def random_crop_flip(images: np.ndarray, size: int, rng: np.random.Generator, augment: bool) -> np.ndarray:
    """Training augmentation: random ``size`` crop plus random horizontal flip."""
    n, _, h, w = images.shape
    if not augment:
        return center_crop(images, size)
    out = np.empty(images.shape[:2] + (size, size), dtype=images.dtype)
    tops = rng.integers(0, h - size + 1, size=n)
    lefts = rng.integers(0, w - size + 1, size=n)
    flips = rng.random(n) < 0.5
    for i in range(n):
        crop = images[i, :, tops[i] : tops[i] + size, lefts[i] : lefts[i] + size]
        out[i] = crop[:, :, ::-1] if flips[i] else crop
    return out


def preprocess_eval(model: Model, images: np.ndarray, mode: str = "resize") -> np.ndarray:
    """Eval-time preprocessing: central crop (validation) or resize (benchmarks), then normalize."""
    size = model.config.input_size
    images = center_crop(images, size) if mode == "crop" else resize(images, size)
    return model.normalize(images)


def _batches(n: int, batch: int):
    for start in range(0, n, batch):
        yield slice(start, min(start + batch, n))


def evaluate_accuracy(model: Model, stimuli: StimulusSet, batch: int = 128, mode: str = "crop") -> float:
    model.eval()
    correct = 0
    images = stimuli.as_rgb()
    with no_grad():
        for sl in _batches(len(stimuli), batch):
            logits, _ = model(preprocess_eval(model, images[sl], mode))
            correct += int((logits.data.argmax(axis=1) == stimuli.labels[sl]).sum())
    return correct / max(1, len(stimuli))


def calibrate_norm_stats(model: Model, stimuli: StimulusSet, batch: int = 64) -> Model:
    """Set batch-norm running statistics from train-mode passes without touching weights.

    Each batch contributes equally (cumulative average), so an untrained
    control model can be evaluated.  Input normalization is fit as in
    :func:`train`.
    """
    images = stimuli.as_rgb()
    model.input_mean, model.input_std = dataset_stats(images)
    owners = list(model._buffer_owners().values())
    saved = [s.momentum for s in owners]
    model.train()
    try:
        with no_grad():
            for i, sl in enumerate(_batches(len(stimuli), batch)):
                for s in owners:
                    s.momentum = 1.0 / (i + 1)
                model(preprocess_eval(model, images[sl], "crop"))
    finally:
        for s, m in zip(owners, saved):
            s.momentum = m
    model.eval()
    return model


def train(model: Model, dataset: StimulusSet, recipe: TrainRecipe, out_dir: Optional[Union[str, os.PathLike]] = None,
          eval_set: Optional[StimulusSet] = None) -> TrainResult:
    """Train ``model`` on ``dataset``; checkpoint after every epoch.

    With ``out_dir`` checkpoints are written as ``epoch_XXX.ckpt`` (epoch 000
    is the initialization) and paths are returned; otherwise the encoded
    checkpoint bytes are returned.  Zero epochs yields only the initial
    checkpoint and an empty log.
    """
    rng = np.random.default_rng(recipe.seed)
    images = dataset.as_rgb()
    model.input_mean, model.input_std = dataset_stats(images)
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    def snapshot(epoch: int):
        data = model.checkpoint_bytes({"epoch": epoch, "recipe": recipe.to_dict()})
        if out_path is None:
            return data
        p = out_path / f"epoch_{epoch:03d}.ckpt"
        p.write_bytes(data)
        return str(p)

    result = TrainResult([snapshot(0)])
    size = model.config.input_size
    opt = SGD(model.parameters(), lr=recipe.lr, momentum=recipe.momentum, weight_decay=recipe.weight_decay)
    n = len(dataset)
    for epoch in range(recipe.epochs):
        model.train()
        opt.lr = recipe.lr_at(epoch)
        order = rng.permutation(n)
        total_loss, correct, seen = 0.0, 0, 0
        for b, sl in enumerate(_batches(n, recipe.batch)):
            idx = order[sl]
            x = model.normalize(random_crop_flip(images[idx], size, rng, recipe.augment))
            y = dataset.labels[idx]
            opt.zero_grad()
            logits, _ = model(x)
            loss = cross_entropy(logits, y)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDivergedError("non-finite loss", {
                    "epoch": epoch, "batch": b, "loss": value, "input_mean": float(x.mean()),
                    "input_std": float(x.std()), "logit_absmax": float(np.max(np.abs(logits.data), initial=0.0)),
                    "lr": opt.lr,
                })
            loss.backward()
            opt.step()
            total_loss += value * len(idx)
            correct += int((logits.data.argmax(axis=1) == y).sum())
            seen += len(idx)
        entry = {"epoch": epoch + 1, "lr": opt.lr, "train_loss": total_loss / seen, "train_accuracy": correct / seen}
        if eval_set is not None:
            entry["eval_accuracy"] = evaluate_accuracy(model, eval_set)
        log.info("epoch %d: %s", epoch + 1, entry)
        result.log.append(entry)
        result.checkpoints.append(snapshot(epoch + 1))
    return result
