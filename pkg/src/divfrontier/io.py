"""Reading and writing embedding matrices.

Binary layout (little endian): the 4-byte magic ``DFE1``, a u32 format
version, a u32 dtype code (0 = float32, 1 = float64), u64 rows, u64 columns,
then the row-major payload. Headerless comma-separated text is also read
when the file name ends in ``.csv`` or ``.txt``.
"""

from __future__ import annotations

import os
import struct

import numpy as np

__all__ = ["EmbeddingFormatError", "MAGIC", "FORMAT_VERSION", "read_embeddings", "write_embeddings"]

MAGIC = b"DFE1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQQ")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_TEXT_SUFFIXES = (".csv", ".txt")


class EmbeddingFormatError(ValueError):
    """The file could not be parsed as an embedding matrix."""


def write_embeddings(path, X, dtype=np.float64) -> None:
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError("embeddings must be a 2-D array")
    dt = np.dtype(dtype).newbyteorder("<")
    code = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}.get(dt)
    if code is None:
        raise ValueError("dtype must be float32 or float64")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, code, X.shape[0], X.shape[1]))
        fh.write(np.ascontiguousarray(X, dtype=dt).tobytes())


def _read_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < 4 or head[:4] != MAGIC:
            raise EmbeddingFormatError("bad magic")
        if len(head) < _HEADER.size:
            raise EmbeddingFormatError("truncated header")
        _, version, code, rows, cols = _HEADER.unpack(head)
        if version != FORMAT_VERSION:
            raise EmbeddingFormatError(f"unsupported format version {version}")
        if code not in _DTYPES:
            raise EmbeddingFormatError(f"unknown dtype code {code}")
        if rows == 0 or cols == 0:
            raise EmbeddingFormatError("empty matrix")
        dt = _DTYPES[code]
        expected = rows * cols * dt.itemsize
        payload = fh.read(expected + 1)
    if len(payload) < expected:
        raise EmbeddingFormatError(f"truncated payload: expected {expected} bytes, got {len(payload)}")
    if len(payload) > expected:
        raise EmbeddingFormatError("trailing bytes after payload")
    return np.frombuffer(payload, dtype=dt).reshape(rows, cols).astype(np.float64)


def _read_text(path) -> np.ndarray:
    try:
        X = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise EmbeddingFormatError(f"cannot parse CSV: {exc}") from None
    if X.size == 0:
        raise EmbeddingFormatError("empty matrix")
    return X


def read_embeddings(path) -> np.ndarray:
    """Load an embedding matrix as float64, rejecting NaN and infinite entries."""
    if not os.path.exists(path):
        raise EmbeddingFormatError(f"no such file: {path}")
    if str(path).lower().endswith(_TEXT_SUFFIXES):
        X = _read_text(path)
    else:
        X = _read_binary(path)
    if not np.all(np.isfinite(X)):
        raise EmbeddingFormatError("embeddings contain NaN or infinite values")
    return X
