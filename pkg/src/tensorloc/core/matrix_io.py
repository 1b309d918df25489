# src/tensorloc/core/matrix_io.py
"""
Matrix and data file codecs.

CSV matrix : first row holds p, then p rows of p values (repr precision)
Binary     : b"TCOV", little-endian u64 p, then p*p little-endian f64, row-major
Data CSV   : n rows of p values, no header

Both matrix formats reproduce finite float64 values bit-exactly.
"""

import io
import struct
from pathlib import Path

import numpy as np
import pandas as pd

from tensorloc.core.errors import ConfigError, ShapeError

MAGIC = b"TCOV"
_HEADER = struct.Struct("<4sQ")

FORMATS = ("csv", "bin")


def format_for(path: Path, fmt: str | None = None) -> str:
    if fmt:
        if fmt not in FORMATS:
            raise ConfigError(f"unknown matrix format '{fmt}' (expected one of {FORMATS})")
        return fmt
    return "bin" if Path(path).suffix.lower() in {".bin", ".tcov"} else "csv"


# ------------------------------------------------------------
# Binary
# ------------------------------------------------------------


def dumps_binary(m: np.ndarray) -> bytes:
    m = np.asarray(m, dtype="<f8")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"only square matrices can be written, got {m.shape}")
    return _HEADER.pack(MAGIC, m.shape[0]) + np.ascontiguousarray(m).tobytes(order="C")


def loads_binary(blob: bytes) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise ConfigError("binary matrix file is truncated")
    magic, p = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ConfigError(f"bad magic {magic!r}; not a TCOV matrix file")
    expected = _HEADER.size + 8 * p * p
    if len(blob) != expected:
        raise ConfigError(f"binary matrix file has {len(blob)} bytes, expected {expected}")
    return np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(p, p).astype(np.float64)


# ------------------------------------------------------------
# CSV
# ------------------------------------------------------------


def dumps_csv(m: np.ndarray) -> str:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"only square matrices can be written, got {m.shape}")
    lines = [str(m.shape[0])]
    lines.extend(",".join(repr(float(v)) for v in row) for row in m)
    return "\n".join(lines) + "\n"


def loads_csv(text: str) -> np.ndarray:
    head, _, body = text.lstrip().partition("\n")
    try:
        p = int(head.strip())
    except ValueError:
        raise ConfigError(f"matrix CSV line 1: expected the dimension p, got '{head.strip()}'") from None
    if p < 1:
        raise ConfigError("matrix CSV line 1: dimension must be positive")
    try:
        frame = pd.read_csv(io.StringIO(body), header=None, dtype=np.float64, float_precision="round_trip")
    except (ValueError, pd.errors.ParserError) as e:
        raise ConfigError(f"matrix CSV: {e}") from None
    if frame.shape != (p, p):
        raise ConfigError(f"matrix CSV declares p={p} but holds a {frame.shape[0]}x{frame.shape[1]} table")
    return frame.to_numpy()


# ------------------------------------------------------------
# Files
# ------------------------------------------------------------


def read_matrix(path: str | Path, fmt: str | None = None) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"matrix file not found: {path}")
    if format_for(path, fmt) == "bin":
        return loads_binary(path.read_bytes())
    return loads_csv(path.read_text())


def write_matrix(m: np.ndarray, path: str | Path, fmt: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format_for(path, fmt) == "bin":
        path.write_bytes(dumps_binary(m))
    else:
        path.write_text(dumps_csv(m))
    return path


def read_data(path: str | Path) -> np.ndarray:
    """n x p observation matrix from a header-less CSV ('#' lines are comments)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"data file not found: {path}")
    try:
        frame = pd.read_csv(
            path, header=None, comment="#", dtype=np.float64, float_precision="round_trip"
        )
    except (ValueError, pd.errors.ParserError) as e:
        raise ConfigError(f"data CSV {path}: {e}") from None
    return frame.to_numpy()


def write_data(x: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(np.asarray(x, dtype=np.float64)).to_csv(
        path, header=False, index=False, float_format="%.17g"
    )
    return path
