"""Writers for the EMB1/LBL1 binary formats consumed by the gapkit CLI.

Layouts (little-endian):
    EMB1: magic "EMB1", u32 version 1, u64 n, u64 d, u32 dtype
          (0 = float32, 1 = float64), then n*d row-major values.
    LBL1: magic "LBL1", u32 version 1, u64 n, then n signed 64-bit ints.

Files are written via temp file + atomic rename.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

EMB_HEADER = struct.Struct("<4sIQQI")
LBL_HEADER = struct.Struct("<4sIQ")


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".export-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_emb1(matrix: np.ndarray, path: str, float64: bool = False) -> None:
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    n, d = m.shape
    code = 1 if float64 else 0
    dtype = np.dtype("<f8") if float64 else np.dtype("<f4")
    header = EMB_HEADER.pack(b"EMB1", 1, n, d, code)
    _atomic_write(path, header + np.ascontiguousarray(m, dtype=dtype).tobytes())


def write_lbl1(labels, path: str) -> None:
    arr = np.asarray(labels, dtype="<i8")
    if arr.ndim != 1:
        raise ValueError(f"expected 1-D labels, got shape {arr.shape}")
    _atomic_write(path, LBL_HEADER.pack(b"LBL1", 1, arr.shape[0]) + arr.tobytes())
