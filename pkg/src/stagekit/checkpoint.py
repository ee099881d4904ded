"""Versioned checkpoint container: one JSON config record plus named
float32 tensors, written byte-deterministically.

Layout: magic, format version (u32), JSON header length (u32), JSON header
(sorted keys; includes the tensor directory with dtype/shape/byte counts),
then the raw little-endian tensor payloads in directory order. Two saves
of the same state produce identical bytes, and a load reproduces tensors
bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError

CKPT_MAGIC = b"STKCKPT1"
CKPT_VERSION = 1


def save_checkpoint(path: str | Path, config: dict,
                    tensors: dict[str, np.ndarray]) -> None:
    names = sorted(tensors)
    directory = []
    payloads = []
    for name in names:
        arr = np.ascontiguousarray(tensors[name])
        if arr.dtype != np.float32:
            arr = arr.astype(np.float32)
        data = arr.astype("<f4").tobytes()
        directory.append({"name": name, "shape": list(arr.shape), "nbytes": len(data)})
        payloads.append(data)
    header = json.dumps({"config": config, "tensors": directory},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<II", CKPT_VERSION, len(header)))
        fh.write(header)
        for data in payloads:
            fh.write(data)


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(CKPT_MAGIC))
        if magic != CKPT_MAGIC:
            raise ParseError(f"bad checkpoint magic {magic!r}")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != CKPT_VERSION:
            raise ParseError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        tensors: dict[str, np.ndarray] = {}
        for rec in header["tensors"]:
            data = fh.read(rec["nbytes"])
            if len(data) != rec["nbytes"]:
                raise ParseError(f"truncated tensor {rec['name']!r}")
            arr = np.frombuffer(data, dtype="<f4").reshape(rec["shape"])
            tensors[rec["name"]] = arr.copy()
    return header["config"], tensors
