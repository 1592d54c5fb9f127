"""On-disk formats.

An assembly is a directory ``<name>.assembly/`` holding ``meta.json``
(schema version, dims, shape, dtype, byte order, coordinates, provenance and
the SHA-256 of the payload) and ``data.bin`` (row-major little-endian
values).  Stimulus sets use the same layout under ``<name>.stimuli/``.
Small hand-written fixtures (behavioral matrices, OST tables) are CSV:
comma separated, dot decimal, UTF-8 with a header row.
"""
from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import os
import shutil
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..errors import ChecksumError, DimensionError
from .data import BehavioralMatrix, NeuroidAssembly, StimulusSet

SCHEMA_VERSION = 1
_DTYPES = {"float32": "<f4", "float64": "<f8"}


@contextlib.contextmanager
def path_lock(path: Path):
    """Exclusive writer lock: a sibling ``.lock`` file created with O_EXCL."""
    lock = Path(str(path) + ".lock")
    fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    try:
        yield
    finally:
        os.close(fd)
        lock.unlink(missing_ok=True)


def _write_blob_dir(path: Path, array: np.ndarray, meta: dict) -> Path:
    dtype = np.asarray(array).dtype.name
    if dtype not in _DTYPES:
        array, dtype = np.asarray(array, dtype=np.float32), "float32"
    payload = np.ascontiguousarray(array, dtype=_DTYPES[dtype]).tobytes()
    meta = dict(meta, schema_version=SCHEMA_VERSION, shape=list(np.shape(array)), dtype=dtype,
                byte_order="little", sha256=hashlib.sha256(payload).hexdigest())
    path.parent.mkdir(parents=True, exist_ok=True)
    with path_lock(path):
        tmp = path.with_name(path.name + ".tmp")
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir()
        (tmp / "data.bin").write_bytes(payload)
        (tmp / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True))
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    return path


def _read_blob_dir(path: Path):
    meta = json.loads((path / "meta.json").read_text())
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {meta.get('schema_version')}")
    payload = (path / "data.bin").read_bytes()
    expected = int(np.prod(meta["shape"])) * np.dtype(_DTYPES[meta["dtype"]]).itemsize
    if hashlib.sha256(payload).hexdigest() != meta["sha256"]:
        raise ChecksumError(f"{path}: data.bin checksum mismatch ({len(payload)} bytes, expected {expected})")
    if len(payload) != expected:
        raise DimensionError(f"{path}: data.bin has {len(payload)} bytes, shape {meta['shape']} needs {expected}")
    data = np.frombuffer(payload, dtype=_DTYPES[meta["dtype"]]).reshape(meta["shape"])
    return meta, data.astype(meta["dtype"])


def _with_suffix(path, suffix: str) -> Path:
    path = Path(path)
    return path if path.name.endswith(suffix) else path.with_name(path.name + suffix)


def save_assembly(assembly: NeuroidAssembly, path) -> Path:
    path = _with_suffix(path, ".assembly")
    coords = {
        "stimulus_id": assembly.stimulus_id.tolist(),
        "object_label": assembly.object_label.tolist(),
        "neuroid_id": assembly.neuroid_id.tolist(),
        "region": assembly.region.tolist(),
        "time_bins": None if assembly.time_bins is None else assembly.time_bins.tolist(),
        "extra": {k: np.asarray(v).tolist() for k, v in assembly.coords.items()},
    }
    meta = {"kind": "neuroid_assembly", "dims": list(assembly.dims), "coords": coords,
            "provenance": _jsonable(assembly.provenance)}
    return _write_blob_dir(path, assembly.data, meta)


def load_assembly(path) -> NeuroidAssembly:
    path = _with_suffix(path, ".assembly")
    meta, data = _read_blob_dir(path)
    c = meta["coords"]
    return NeuroidAssembly(
        data=data,
        stimulus_id=np.array(c["stimulus_id"], dtype=str),
        object_label=np.array(c["object_label"], dtype=str),
        neuroid_id=np.array(c["neuroid_id"], dtype=str),
        region=np.array(c["region"], dtype=str),
        dims=tuple(meta["dims"]),
        time_bins=None if c["time_bins"] is None else np.array(c["time_bins"], dtype=float),
        coords={k: np.array(v) for k, v in c.get("extra", {}).items()},
        provenance=meta.get("provenance", {}),
    )


def save_stimuli(stimuli: StimulusSet, path) -> Path:
    path = _with_suffix(path, ".stimuli")
    meta = {"kind": "stimulus_set", "stimulus_id": stimuli.stimulus_id.tolist(),
            "labels": stimuli.labels.tolist(), "categories": list(stimuli.categories),
            "params": _jsonable(stimuli.params), "seed": stimuli.seed}
    return _write_blob_dir(path, stimuli.images, meta)


def load_stimuli(path) -> StimulusSet:
    path = _with_suffix(path, ".stimuli")
    meta, data = _read_blob_dir(path)
    return StimulusSet(data, np.array(meta["stimulus_id"], dtype=str), np.array(meta["labels"], dtype=np.int64),
                       meta["categories"], meta.get("params", []), meta.get("seed"))


# CSV fixtures -----------------------------------------------------------------

def save_behavior_csv(matrix: BehavioralMatrix, path) -> Path:
    """Columns: stimulus_id, object, then one accuracy column per distractor."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["stimulus_id", "object", *matrix.categories])
        for sid, lab, row in zip(matrix.stimulus_id, matrix.image_labels, matrix.accuracies):
            w.writerow([sid, matrix.categories[lab], *["" if np.isnan(v) else repr(float(v)) for v in row]])
    return path


def load_behavior_csv(path) -> BehavioralMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:2] != ["stimulus_id", "object"]:
        raise ValueError("behavior CSV must start with columns stimulus_id, object")
    cats = header[2:]
    lookup = {c: i for i, c in enumerate(cats)}
    unknown = sorted({r[1] for r in body} - set(cats))
    if unknown:
        raise ValueError(f"objects not among distractor columns: {unknown}")
    acc = np.array([[float(v) if v != "" else np.nan for v in r[2:]] for r in body], dtype=float).reshape(len(body), len(cats))
    return BehavioralMatrix(acc, np.array([lookup[r[1]] for r in body]), cats,
                            np.array([r[0] for r in body], dtype=str))


def save_ost_csv(records, path) -> Path:
    """Columns: stimulus_id, object, threshold, model_ost, target_ost (blank = absent)."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["stimulus_id", "object", "threshold", "model_ost", "target_ost"])
        for r in records:
            w.writerow([r.stimulus_id, r.object_label, repr(float(r.threshold)),
                        "" if r.model_ost is None else repr(float(r.model_ost)),
                        "" if r.target_ost is None else repr(float(r.target_ost))])
    return path


def load_ost_csv(path) -> List:
    from ..benchmarks.ost import OSTRecord

    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(OSTRecord(
                stimulus_id=row["stimulus_id"],
                object_label=row.get("object", ""),
                threshold=float(row["threshold"]),
                model_ost=float(row["model_ost"]) if row.get("model_ost") else None,
                target_ost=float(row["target_ost"]) if row.get("target_ost") else None,
            ))
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj
