"""Writer/reader for the dense-tensor interchange format consumed downstream.

Layout: magic ``BTSR``, then u32 little-endian version (1), dtype code
(1=float32, 2=uint8, 3=uint32), height, width, channels, followed by the raw
row-major little-endian payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"BTSR"
VERSION = 1
_CODES = {np.dtype(np.float32): 1, np.dtype(np.uint8): 2, np.dtype(np.uint32): 3}
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("u1"), 3: np.dtype("<u4")}


def write_tensor(t: np.ndarray, path) -> None:
    t = np.asarray(t)
    if t.ndim != 3 or t.dtype not in _CODES:
        raise ValueError(f"expected (h, w, c) float32/uint8/uint32, got {t.dtype} {t.shape}")
    h, w, c = t.shape
    header = MAGIC + struct.pack("<IIIII", VERSION, _CODES[t.dtype], h, w, c)
    payload = np.ascontiguousarray(t).astype(t.dtype.newbyteorder("<"), copy=False).tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a tensor file")
    version, code, h, w, c = struct.unpack_from("<IIIII", data, 4)
    if version != VERSION or code not in _DTYPES:
        raise ValueError(f"{path}: unsupported version/dtype {version}/{code}")
    dtype = _DTYPES[code]
    expect = 24 + h * w * c * dtype.itemsize
    if len(data) != expect:
        raise ValueError(f"{path}: size {len(data)} != expected {expect}")
    arr = np.frombuffer(data, dtype=dtype, count=h * w * c, offset=24)
    return arr.astype(arr.dtype.newbyteorder("="), copy=True).reshape(h, w, c)
