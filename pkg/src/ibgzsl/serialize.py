"""Text checkpoint format shared by every parameter struct.

Layout: a header line, `key = value` metadata, then one `tensor NAME ROWS COLS`
stanza per array with comma-separated base-10 rows. %.9g round-trips float32.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import LoadError

HEADER = "ibgzsl-checkpoint v1"
FLOAT_FORMAT = "%.9g"


def config_hash(text):
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def save_checkpoint(path, kind, tensors, meta=None):
    with open(path, "w") as f:
        f.write(HEADER + "\n")
        f.write(f"kind = {kind}\n")
        for key in sorted(meta or {}):
            f.write(f"{key} = {(meta or {})[key]}\n")
        for name, arr in tensors.items():
            arr = np.atleast_2d(np.asarray(arr))
            f.write(f"tensor {name} {arr.shape[0]} {arr.shape[1]}\n")
            for row in arr:
                f.write(",".join(FLOAT_FORMAT % v for v in row) + "\n")


def load_checkpoint(path, expect_kind=None):
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if not lines or lines[0] != HEADER:
        raise LoadError(f"{path}: not a checkpoint file")
    meta = {}
    tensors = {}
    i = 1
    while i < len(lines):
        line = lines[i]
        if line.startswith("tensor "):
            parts = line.split()
            if len(parts) != 4:
                raise LoadError(f"{path}: bad tensor header: {line!r}")
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            block = lines[i + 1: i + 1 + rows]
            if len(block) != rows:
                raise LoadError(f"{path}: tensor {name}: truncated")
            data = [[float(v) for v in row.split(",")] for row in block]
            arr = np.array(data, dtype=np.float32)
            if arr.shape != (rows, cols):
                raise LoadError(f"{path}: tensor {name}: expected {rows}x{cols}, got {arr.shape}")
            tensors[name] = arr
            i += 1 + rows
        elif " = " in line:
            key, value = line.split(" = ", 1)
            meta[key] = value
            i += 1
        elif not line.strip():
            i += 1
        else:
            raise LoadError(f"{path}: unparseable line: {line!r}")
    kind = meta.pop("kind", None)
    if expect_kind is not None and kind != expect_kind:
        raise LoadError(f"{path}: checkpoint kind {kind!r}, expected {expect_kind!r}")
    return kind, tensors, meta
