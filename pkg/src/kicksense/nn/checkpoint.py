"""Self-describing binary checkpoints.

Layout: magic bytes, a little-endian uint32 header length, a UTF-8 JSON
header, then the raw tensor bytes in header order. Tensors are stored
as little-endian float64 so a checkpoint re-loads bit-identically on
any host.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

MAGIC = b"KSCKPT1\n"
_TENSOR_DTYPE = "<f8"


def save_checkpoint(path, meta: dict, tensors: dict) -> None:
    """Write ``tensors`` (name -> array) with a JSON ``meta`` block."""
    descriptors = []
    blobs = []
    for name, value in tensors.items():
        arr = np.ascontiguousarray(np.asarray(value, dtype=np.float64).astype(_TENSOR_DTYPE))
        descriptors.append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = json.dumps({"meta": meta, "tensors": descriptors}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path):
    """Read a checkpoint; returns ``(meta, tensors)``."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a recognised checkpoint file")
        header_len = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        header = json.loads(fh.read(header_len).decode("utf-8"))
        tensors = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype=_TENSOR_DTYPE)
            if data.size != count:
                raise ValueError(f"{path}: truncated tensor {entry['name']}")
            tensors[entry["name"]] = data.reshape(shape).astype(np.float64)
    return header["meta"], tensors


def sha256_of_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
