"""Binary/CSV embedding formats, trajectory/curve CSV, and atomic writes.

EMB1 layout (all little-endian):
    magic   4 bytes  b"EMB1"
    version u32      1
    n       u64
    d       u64
    dtype   u32      0 = float32, 1 = float64
    payload n*d values, row-major

LBL1 layout:
    magic   4 bytes  b"LBL1"
    version u32      1
    n       u64
    payload n signed 64-bit integers

Every writer goes through a temp file in the destination directory plus an
atomic rename, so readers never observe a partial file.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from .errors import (
    BadConfig,
    BadMagic,
    BadVersion,
    IoError,
    ParseError,
    RaggedRows,
    TruncatedPayload,
)
from .core import as_matrix

EMB_MAGIC = b"EMB1"
LBL_MAGIC = b"LBL1"
EMB_HEADER = struct.Struct("<4sIQQI")
LBL_HEADER = struct.Struct("<4sIQ")

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES_BY_NAME = {"f32": 0, "f64": 1, "float32": 0, "float64": 1}


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gapkit-tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_text_atomic(path: str, text: str) -> None:
    _atomic_write(path, text.encode("utf-8"))


def write_embeddings(m: np.ndarray, path: str, dtype: str = "f64") -> None:
    """Write an EMB1 file; dtype is "f32" or "f64"."""
    m = as_matrix(m)
    if dtype not in _CODES_BY_NAME:
        raise BadConfig(f"dtype must be f32 or f64, got {dtype!r}")
    code = _CODES_BY_NAME[dtype]
    n, d = m.shape
    header = EMB_HEADER.pack(EMB_MAGIC, 1, n, d, code)
    payload = np.ascontiguousarray(m, dtype=_DTYPE_CODES[code]).tobytes()
    _atomic_write(path, header + payload)


def read_embeddings(path: str) -> np.ndarray:
    """Read an EMB1 file into a float64 matrix (32-bit files are widened)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(blob) < EMB_HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than the EMB1 header")
    magic, version, n, d, code = EMB_HEADER.unpack_from(blob)
    if magic != EMB_MAGIC:
        raise BadMagic(f"{path}: expected magic {EMB_MAGIC!r}, got {magic!r}")
    if version != 1:
        raise BadVersion(f"{path}: unsupported EMB1 version {version}")
    if code not in _DTYPE_CODES:
        raise BadVersion(f"{path}: unknown dtype code {code}")
    dtype = _DTYPE_CODES[code]
    expected = n * d * dtype.itemsize
    payload = blob[EMB_HEADER.size:]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(payload)} bytes, expected exactly {expected}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(n, d)
    return as_matrix(values.astype(np.float64), path)


def write_labels(labels: np.ndarray, path: str) -> None:
    labels = np.asarray(labels, dtype="<i8")
    if labels.ndim != 1:
        raise BadConfig(f"labels must be 1-D, got shape {labels.shape}")
    header = LBL_HEADER.pack(LBL_MAGIC, 1, labels.shape[0])
    _atomic_write(path, header + labels.tobytes())


def read_labels(path: str) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(blob) < LBL_HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than the LBL1 header")
    magic, version, n = LBL_HEADER.unpack_from(blob)
    if magic != LBL_MAGIC:
        raise BadMagic(f"{path}: expected magic {LBL_MAGIC!r}, got {magic!r}")
    if version != 1:
        raise BadVersion(f"{path}: unsupported LBL1 version {version}")
    payload = blob[LBL_HEADER.size:]
    if len(payload) != n * 8:
        raise TruncatedPayload(f"{path}: payload is {len(payload)} bytes, expected {n * 8}")
    return np.frombuffer(payload, dtype="<i8").astype(np.int64)


def read_csv_embeddings(path: str) -> np.ndarray:
    """Read headerless comma-separated floats, one embedding per line."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    rows = []
    width = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise RaggedRows(
                f"{path}:{lineno}: row has {len(parts)} columns, expected {width}"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return as_matrix(rows, path)


def _fmt(value) -> str:
    return repr(float(value))


TRAJECTORY_HEADER = (
    "iter,loss,gap_norm,mean_abs_cos,var_along_gap_x,var_along_gap_y,"
    "var_along_init_gap_x,var_along_init_gap_y,var_s,alignment_err"
)

CURVE_HEADER = "lambda,gap_norm_after,robustness,clean_accuracy,noisy_accuracy"


def trajectory_csv(records) -> str:
    lines = [TRAJECTORY_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [str(r.iter)]
                + [
                    _fmt(getattr(r, name))
                    for name in (
                        "loss",
                        "gap_norm",
                        "mean_abs_cos",
                        "var_along_gap_x",
                        "var_along_gap_y",
                        "var_along_init_gap_x",
                        "var_along_init_gap_y",
                        "var_s",
                        "alignment_err",
                    )
                ]
            )
        )
    return "\n".join(lines) + "\n"


def curve_csv(curve) -> str:
    lines = [CURVE_HEADER]
    for j in range(len(curve.lambdas)):
        cells = [
            _fmt(curve.lambdas[j]),
            _fmt(curve.gap_norm_after[j]),
            _fmt(curve.robustness[j]),
            _fmt(curve.clean_accuracy[j]) if curve.clean_accuracy is not None else "",
            _fmt(curve.noisy_accuracy[j]) if curve.noisy_accuracy is not None else "",
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_json_report(report: dict, path: str) -> None:
    write_text_atomic(path, json.dumps(report, indent=2, sort_keys=False) + "\n")


def load_experiment_config(path: str) -> dict:
    """Parse a JSON experiment config; unknown top-level keys are rejected
    by the consumer, paths are resolved relative to the config file here."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise BadConfig(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise BadConfig(f"{path}: top-level JSON value must be an object")
    cfg["__dir__"] = os.path.dirname(os.path.abspath(path))
    return cfg
