"""Hyperspectral cube type and its on-disk container.

A cube is a band-major float64 array of shape (bands, height, width) with
finite samples. The file container (extension ``.hsc``) is a fixed 64-byte
little-endian header followed by the raw band-major payload:

    bytes 0-7    magic ``HSCUBE\\x00\\x01``
    bytes 8-11   container version (u32, currently 1)
    bytes 12-15  bands   (u32)
    bytes 16-19  height  (u32)
    bytes 20-23  width   (u32)
    byte  24     sample dtype code: 0 = float32, 1 = float64
    bytes 25-32  scale hint (f64); nominal full-scale of the data
    bytes 33-63  reserved, zero

float64 payloads round-trip bit-exactly; float32 storage is lossy by at most
one float32 ulp per sample.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptionError, DimensionError, FormatError, NonFiniteError

MAGIC = b"HSCUBE\x00\x01"
CONTAINER_VERSION = 1

_HEADER = struct.Struct("<8sIIIIBd31x")
assert _HEADER.size == 64

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODE_FOR = {"f32": 0, "f64": 1}


@dataclass(frozen=True)
class HyperCube:
    """Immutable band-major image cube.

    ``data`` has shape (bands, height, width), dtype float64, and is marked
    read-only; operations that change samples return a new cube.
    """

    data: np.ndarray
    scale_hint: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise DimensionError(f"cube data must be 3-d, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionError(f"cube dimensions must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("cube samples must be finite")
        if not np.isfinite(self.scale_hint):
            raise NonFiniteError("scale hint must be finite")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def pixels(self) -> np.ndarray:
        """The cube as a (bands, height*width) matrix view."""
        return self.data.reshape(self.bands, -1)

    def with_data(self, data: np.ndarray) -> "HyperCube":
        return HyperCube(data, scale_hint=self.scale_hint)


def new_cube(bands: int, height: int, width: int, fill: float = 0.0,
             scale_hint: float = 1.0) -> HyperCube:
    """Allocate a constant-filled cube."""
    for name, v in (("bands", bands), ("height", height), ("width", width)):
        if int(v) != v or v < 1:
            raise DimensionError(f"{name} must be a positive integer, got {v!r}")
    if not np.isfinite(fill):
        raise NonFiniteError(f"fill value must be finite, got {fill!r}")
    data = np.full((int(bands), int(height), int(width)), float(fill))
    return HyperCube(data, scale_hint=scale_hint)


def write_cube(cube: HyperCube, path, dtype: str = "f64") -> None:
    """Write a cube to ``path`` in the .hsc container.

    dtype selects the stored sample type: "f64" (default, lossless) or "f32".
    """
    if dtype not in _CODE_FOR:
        raise FormatError(f"unsupported sample dtype {dtype!r}; use 'f32' or 'f64'")
    code = _CODE_FOR[dtype]
    header = _HEADER.pack(MAGIC, CONTAINER_VERSION, cube.bands, cube.height,
                          cube.width, code, float(cube.scale_hint))
    payload = np.ascontiguousarray(cube.data, dtype=_DTYPE_CODES[code])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_cube(path) -> HyperCube:
    """Read a cube from the .hsc container at ``path``.

    Raises FormatError on an unrecognized header, CorruptionError when the
    file length contradicts the header, NonFiniteError on NaN/Inf samples.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CorruptionError(
            f"{path}: file is {len(raw)} bytes, shorter than the 64-byte header")
    magic, version, bands, height, width, code, scale_hint = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != CONTAINER_VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    if code not in _DTYPE_CODES:
        raise FormatError(f"{path}: unknown sample dtype code {code}")
    if min(bands, height, width) < 1:
        raise CorruptionError(
            f"{path}: header declares degenerate dims {(bands, height, width)}")
    if not np.isfinite(scale_hint):
        raise FormatError(f"{path}: non-finite scale hint")
    dt = _DTYPE_CODES[code]
    count = bands * height * width
    expected = _HEADER.size + count * dt.itemsize
    if len(raw) != expected:
        raise CorruptionError(
            f"{path}: payload length mismatch, header implies {expected} bytes, "
            f"file has {len(raw)}")
    flat = np.frombuffer(raw, dtype=dt, offset=_HEADER.size, count=count)
    data = flat.reshape(bands, height, width).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{path}: payload contains NaN or Inf samples")
    return HyperCube(data, scale_hint=scale_hint)
