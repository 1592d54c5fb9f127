"""``.ckpt`` files: JSON header followed by little-endian float32 blobs.

Layout::

    8 bytes   magic  b"CBCKPT01"
    8 bytes   header length (uint64, little-endian)
    N bytes   header JSON (utf-8): graph, seed, tensors[{name, shape, kind, offset, nbytes}]
    ...       float32 little-endian blobs in declaration order
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from ..errors import ChecksumError

MAGIC = b"CBCKPT01"
_BLOB_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    header: dict
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def graph(self):
        return self.header.get("graph")

    @property
    def seed(self):
        return self.header.get("seed")


def encode_checkpoint(tensors: Mapping[str, np.ndarray], graph=None, seed: Optional[int] = None,
                      kinds: Optional[Mapping[str, str]] = None, extra: Optional[dict] = None) -> bytes:
    entries, blobs, offset = [], [], 0
    for name, arr in tensors.items():
        blob = np.ascontiguousarray(np.asarray(arr), dtype=_BLOB_DTYPE).tobytes()
        entries.append({
            "name": name,
            "shape": list(np.shape(arr)),
            "dtype": "float32",
            "kind": (kinds or {}).get(name, "parameter"),
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    payload = b"".join(blobs)
    header = {
        "format": "cortex-bench-checkpoint",
        "version": 1,
        "byte_order": "little",
        "graph": graph,
        "seed": seed,
        "tensors": entries,
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    if extra:
        header["extra"] = extra
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(raw)) + raw + payload


def save_checkpoint(path, tensors: Mapping[str, np.ndarray], graph=None, seed: Optional[int] = None,
                    kinds: Optional[Mapping[str, str]] = None, extra: Optional[dict] = None) -> str:
    path = os.fspath(path)
    data = encode_checkpoint(tensors, graph, seed, kinds, extra)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return path


def decode_checkpoint(data: bytes) -> Checkpoint:
    if data[:8] != MAGIC:
        raise ValueError("not a cortex-bench checkpoint (bad magic)")
    (hlen,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16 : 16 + hlen].decode("utf-8"))
    payload = data[16 + hlen :]
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise ChecksumError("checkpoint payload checksum mismatch (truncated or corrupted file)")
    tensors = {}
    for e in header["tensors"]:
        arr = np.frombuffer(payload, dtype=_BLOB_DTYPE, count=e["nbytes"] // 4, offset=e["offset"])
        tensors[e["name"]] = arr.reshape(e["shape"]).astype(np.float32)
    return Checkpoint(header, tensors)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
