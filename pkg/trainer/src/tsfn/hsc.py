"""Reader/writer for the ``.hsc`` cube container.

The container is a 64-byte little-endian header followed by the raw pixel
payload. Header fields: an 8-byte magic, a format version, the three cube
dimensions (bands, lines, columns), a dtype code (0 = float32, 1 = float64),
and a value-scale hint; the payload is band-major. This module speaks the
format only — cubes travel between this package and the fusion toolkit as
files, never as in-process objects.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, ShapeError

MAGIC = b"HSCUBE\x00\x01"
CONTAINER_VERSION = 1

_HEADER = struct.Struct("<8sIIIIBd31x")
assert _HEADER.size == 64

_DTYPE_OF_CODE = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODE_OF_NAME = {"f32": 0, "f64": 1}


def read_hsc(path) -> np.ndarray:
    """Load a cube as a float64 array of shape (bands, lines, columns)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, bands, lines, cols, code, _scale = _HEADER.unpack(
        raw[:_HEADER.size])
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != CONTAINER_VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    if code not in _DTYPE_OF_CODE:
        raise FormatError(f"{path}: unknown dtype code {code}")
    if min(bands, lines, cols) < 1:
        raise FormatError(f"{path}: degenerate dimensions "
                          f"({bands}, {lines}, {cols})")
    dtype = _DTYPE_OF_CODE[code]
    expected = bands * lines * cols * dtype.itemsize
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, "
                          f"expected {expected}")
    data = np.frombuffer(payload, dtype=dtype).reshape(bands, lines, cols)
    out = data.astype(np.float64)
    if not np.all(np.isfinite(out)):
        raise FormatError(f"{path}: payload contains non-finite values")
    return out


def write_hsc(data: np.ndarray, path, dtype: str = "f64",
              scale_hint: float = 1.0) -> None:
    """Write a (bands, lines, columns) array as a cube file."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"cube must be 3-D, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeError(f"cube has an empty dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FormatError("refusing to write non-finite values")
    if dtype not in _CODE_OF_NAME:
        raise FormatError(f"unknown dtype name {dtype!r}")
    code = _CODE_OF_NAME[dtype]
    header = _HEADER.pack(MAGIC, CONTAINER_VERSION, arr.shape[0], arr.shape[1],
                          arr.shape[2], code, float(scale_hint))
    payload = np.ascontiguousarray(arr.astype(_DTYPE_OF_CODE[code])).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
