"""In-memory data model: neuroid assemblies, stimulus sets, behavioral matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import DimensionError

DIM_ORDER = ("stimulus", "neuroid", "repetition", "time_bin")


def timestep_time_bins(k: int, window=(70.0, 250.0)) -> np.ndarray:
    """Nominal millisecond bins for ``k`` model timesteps.

    k=1 is the time-averaged 70-170 ms window; k=2 splits at 150 ms
    (t0 early, t1 late); larger k partitions ``window`` equally.
    """
    if k < 1:
        raise ValueError("need at least one timestep")
    if k == 1:
        return np.array([[70.0, 170.0]])
    if k == 2:
        return np.array([[window[0], 150.0], [150.0, window[1]]])
    edges = np.linspace(window[0], window[1], k + 1)
    return np.stack([edges[:-1], edges[1:]], axis=1)


@dataclass
class NeuroidAssembly:
    """stimulus x neuroid (x repetition x time_bin) responses with coordinates.

    ``dims`` names the data axes in order; it always starts with
    ``("stimulus", "neuroid")`` and may add ``"repetition"`` then
    ``"time_bin"``.  Per-stimulus coords are ``stimulus_id`` and
    ``object_label``; per-neuroid coords are ``neuroid_id`` and ``region``;
    ``time_bins`` is a (T, 2) array of [start, end) ms.  Extra coordinate
    arrays live in ``coords`` keyed by ``"<dim>:<name>"``.
    """

    data: np.ndarray
    stimulus_id: np.ndarray
    object_label: np.ndarray
    neuroid_id: np.ndarray
    region: np.ndarray
    dims: tuple = ("stimulus", "neuroid")
    time_bins: Optional[np.ndarray] = None
    coords: Dict[str, np.ndarray] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        self.stimulus_id = np.asarray(self.stimulus_id).astype(str)
        self.object_label = np.asarray(self.object_label).astype(str)
        self.neuroid_id = np.asarray(self.neuroid_id).astype(str)
        self.region = np.broadcast_to(np.asarray(self.region).astype(str), self.neuroid_id.shape).copy()
        self.dims = tuple(self.dims)
        if self.time_bins is not None:
            self.time_bins = np.asarray(self.time_bins, dtype=float).reshape(-1, 2)
        self.validate()

    def validate(self) -> None:
        problems = []
        if self.dims[:2] != ("stimulus", "neuroid") or list(self.dims) != [d for d in DIM_ORDER if d in self.dims]:
            problems.append(f"dims must be an ordered subset of {DIM_ORDER} starting with stimulus, neuroid; got {self.dims}")
        if self.data.ndim != len(self.dims):
            problems.append(f"data has {self.data.ndim} axes but dims={self.dims}")
        else:
            sizes = dict(zip(self.dims, self.data.shape))
            for name, arr, dim in (("stimulus_id", self.stimulus_id, "stimulus"),
                                   ("object_label", self.object_label, "stimulus"),
                                   ("neuroid_id", self.neuroid_id, "neuroid"),
                                   ("region", self.region, "neuroid")):
                if len(arr) != sizes[dim]:
                    problems.append(f"coord {name} has length {len(arr)} but {dim} axis has {sizes[dim]}")
            if "time_bin" in self.dims:
                if self.time_bins is None or len(self.time_bins) != sizes["time_bin"]:
                    problems.append("time_bins must match the time_bin axis")
            for key, arr in self.coords.items():
                dim = key.split(":", 1)[0]
                if dim not in sizes or len(arr) != sizes[dim]:
                    problems.append(f"coord {key} does not match its dimension")
        if len(set(self.stimulus_id.tolist())) != len(self.stimulus_id):
            problems.append("stimulus_id values must be unique")
        if self.time_bins is not None and len(self.time_bins) > 1:
            tb = self.time_bins
            if np.any(tb[:, 1] < tb[:, 0]) or np.any(tb[1:, 0] < tb[:-1, 1]):
                problems.append("time bins must be sorted and non-overlapping")
        if problems:
            raise DimensionError("; ".join(problems))

    # shape helpers -----------------------------------------------------------
    @property
    def n_stimuli(self) -> int:
        return self.data.shape[0]

    @property
    def n_neuroids(self) -> int:
        return self.data.shape[1]

    @property
    def n_time_bins(self) -> int:
        return self.data.shape[self.dims.index("time_bin")] if "time_bin" in self.dims else 1

    def axis(self, dim: str) -> int:
        return self.dims.index(dim)

    def label_codes(self, categories: Optional[Sequence[str]] = None) -> np.ndarray:
        cats = list(categories) if categories is not None else sorted(set(self.object_label.tolist()))
        lookup = {c: i for i, c in enumerate(cats)}
        return np.array([lookup[c] for c in self.object_label], dtype=np.int64)

    def _replace(self, **kw) -> "NeuroidAssembly":
        base = dict(data=self.data, stimulus_id=self.stimulus_id, object_label=self.object_label,
                    neuroid_id=self.neuroid_id, region=self.region, dims=self.dims, time_bins=self.time_bins,
                    coords=dict(self.coords), provenance=dict(self.provenance))
        base.update(kw)
        return NeuroidAssembly(**base)

    # selection -----------------------------------------------------------------
    def isel_stimuli(self, index) -> "NeuroidAssembly":
        index = np.asarray(index)
        coords = {k: (v[index] if k.startswith("stimulus:") else v) for k, v in self.coords.items()}
        return self._replace(data=self.data[index], stimulus_id=self.stimulus_id[index],
                             object_label=self.object_label[index], coords=coords)

    def isel_neuroids(self, index) -> "NeuroidAssembly":
        index = np.asarray(index)
        coords = {k: (v[index] if k.startswith("neuroid:") else v) for k, v in self.coords.items()}
        return self._replace(data=self.data[:, index], neuroid_id=self.neuroid_id[index],
                             region=self.region[index], coords=coords)

    def sel(self, region: Optional[str] = None, time_bin=None) -> "NeuroidAssembly":
        """Slice by region name and/or time bin ([start, end] or integer index)."""
        out = self
        if region is not None:
            mask = out.region == region
            if not mask.any():
                raise KeyError(f"no neuroids with region {region!r}; regions: {sorted(set(out.region))}")
            out = out.isel_neuroids(np.flatnonzero(mask))
        if time_bin is not None:
            out = out.isel_time_bin(out._time_index(time_bin))
        return out

    def _time_index(self, time_bin) -> int:
        if "time_bin" not in self.dims:
            raise KeyError("assembly has no time_bin dimension")
        if np.isscalar(time_bin):
            return int(time_bin)
        tb = np.asarray(time_bin, dtype=float)
        hits = np.flatnonzero(np.all(np.isclose(self.time_bins, tb), axis=1))
        if not len(hits):
            raise KeyError(f"time bin {list(tb)} not present; bins: {self.time_bins.tolist()}")
        return int(hits[0])

    def isel_time_bin(self, index: int) -> "NeuroidAssembly":
        ax = self.axis("time_bin")
        prov = dict(self.provenance)
        prov["time_bin"] = self.time_bins[index].tolist()
        coords = {}
        for k, v in self.coords.items():
            if k.startswith("time_bin:"):
                prov[k.split(":", 1)[1]] = np.asarray(v)[index].item()
            else:
                coords[k] = v
        dims = tuple(d for d in self.dims if d != "time_bin")
        return NeuroidAssembly(np.take(self.data, index, axis=ax), self.stimulus_id, self.object_label,
                               self.neuroid_id, self.region, dims, None, coords, prov)

    def time_average(self, window) -> "NeuroidAssembly":
        """Average the bins that fall inside ``window`` = [start, end] ms."""
        if "time_bin" not in self.dims:
            return self
        lo, hi = window
        mask = (self.time_bins[:, 0] >= lo) & (self.time_bins[:, 1] <= hi)
        if not mask.any():
            raise KeyError(f"no time bins inside window [{lo}, {hi}]")
        ax = self.axis("time_bin")
        data = np.compress(mask, self.data, axis=ax).mean(axis=ax)
        prov = dict(self.provenance)
        prov["time_bin"] = [float(lo), float(hi)]
        dims = tuple(d for d in self.dims if d != "time_bin")
        coords = {k: v for k, v in self.coords.items() if not k.startswith("time_bin:")}
        return NeuroidAssembly(data, self.stimulus_id, self.object_label, self.neuroid_id, self.region,
                               dims, None, coords, prov)

    def mean_over_repetitions(self) -> "NeuroidAssembly":
        if "repetition" not in self.dims:
            return self
        ax = self.axis("repetition")
        return self._replace(data=self.data.mean(axis=ax), dims=tuple(d for d in self.dims if d != "repetition"))

    def as_matrix(self) -> np.ndarray:
        """stimulus x neuroid view (repetitions averaged; requires no time axis)."""
        a = self.mean_over_repetitions()
        if "time_bin" in a.dims:
            raise DimensionError("assembly still has a time_bin axis; select or average bins first")
        return np.asarray(a.data, dtype=np.float64)


@dataclass
class StimulusSet:
    """Images [n, C, H, W] in [0, 1] with ids, integer labels and generation params."""

    images: np.ndarray
    stimulus_id: np.ndarray
    labels: np.ndarray
    categories: List[str]
    params: List[dict] = field(default_factory=list)
    seed: Optional[int] = None

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float32)
        self.stimulus_id = np.asarray(self.stimulus_id).astype(str)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        problems = []
        if self.images.ndim != 4:
            problems.append(f"images must be [n, C, H, W], got {self.images.shape}")
        if not (len(self.stimulus_id) == len(self.labels) == len(self.images)):
            problems.append("images, stimulus_id and labels must have equal length")
        if len(set(self.stimulus_id.tolist())) != len(self.stimulus_id):
            problems.append("stimulus_id values must be unique")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= len(self.categories)):
            problems.append("labels must index the declared category list")
        if problems:
            raise DimensionError("; ".join(problems))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def object_label(self) -> np.ndarray:
        return np.array([self.categories[i] for i in self.labels], dtype=str)

    def as_rgb(self) -> np.ndarray:
        return np.repeat(self.images, 3, axis=1) if self.images.shape[1] == 1 else self.images

    def subset(self, index) -> "StimulusSet":
        index = np.asarray(index, dtype=int)
        params = [self.params[i] for i in index] if self.params else []
        return StimulusSet(self.images[index], self.stimulus_id[index], self.labels[index], list(self.categories),
                           params, self.seed)


@dataclass
class BehavioralMatrix:
    """image x distractor accuracy table (NaN where distractor is the true object)."""

    accuracies: np.ndarray
    image_labels: np.ndarray
    categories: List[str]
    stimulus_id: Optional[np.ndarray] = None
    trials: Optional[np.ndarray] = None

    def __post_init__(self):
        self.accuracies = np.asarray(self.accuracies, dtype=np.float64).copy()
        self.image_labels = np.asarray(self.image_labels, dtype=np.int64)
        n, k = self.accuracies.shape
        if self.stimulus_id is None:
            self.stimulus_id = np.array([f"img{i:05d}" for i in range(n)])
        self.stimulus_id = np.asarray(self.stimulus_id).astype(str)
        problems = []
        if len(self.categories) != k:
            problems.append(f"{k} distractor columns but {len(self.categories)} categories")
        if len(self.image_labels) != n or len(self.stimulus_id) != n:
            problems.append("image_labels/stimulus_id length must match rows")
        if len(self.image_labels) and (self.image_labels.min() < 0 or self.image_labels.max() >= k):
            problems.append("image labels must index the categories")
        vals = self.accuracies[~self.mask] if not problems else self.accuracies
        if np.any((vals < 0) | (vals > 1)):
            problems.append("accuracies must lie in [0, 1]")
        if problems:
            raise DimensionError("; ".join(problems))
        self.accuracies[self.mask] = np.nan

    @property
    def mask(self) -> np.ndarray:
        """True where the distractor equals the image's object (undefined cell)."""
        n, k = self.accuracies.shape
        m = np.zeros((n, k), dtype=bool)
        m[np.arange(n), self.image_labels] = True
        return m
