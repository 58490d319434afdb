"""Bit-exact I/O for dense H x W x C tensors, netpbm images, and label maps.

Tensor container (``.btsr``), all integers little-endian:

======  =====  =========================================
offset  bytes  field
======  =====  =========================================
0       4      magic ``BTSR``
4       4      version, u32 (currently 1)
8       4      dtype code, u32 (1=float32, 2=uint8, 3=uint32)
12      12     height, width, channels, u32 each
24      ...    raw row-major payload, little-endian
======  =====  =========================================

Images are binary netpbm: ``P6`` (RGB) and ``P5`` (gray), maxval 255.
Label maps persist as uint32 tensors with channels=1.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CorruptHeader,
    DtypeUnknown,
    IoFailure,
    NonFiniteFloat,
    TrailingData,
    TruncatedPayload,
    TruncatedPixelData,
    UnsupportedChannels,
    UnsupportedFormat,
    UnsupportedVersion,
)

TENSOR_MAGIC = b"BTSR"
TENSOR_VERSION = 1

_CODE_TO_DTYPE = {1: np.dtype("<f4"), 2: np.dtype("u1"), 3: np.dtype("<u4")}
_DTYPE_TO_CODE = {np.dtype(np.float32): 1, np.dtype(np.uint8): 2, np.dtype(np.uint32): 3}


def _check_tensor(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t)
    if t.ndim != 3:
        raise CorruptHeader(f"expected a (height, width, channels) array, got shape {t.shape}")
    if any(s < 1 for s in t.shape):
        raise CorruptHeader(f"all dimensions must be positive, got shape {t.shape}")
    if t.dtype not in _DTYPE_TO_CODE:
        raise DtypeUnknown(f"unsupported dtype {t.dtype}; use float32, uint8 or uint32")
    return t


def tensor_bytes(t: np.ndarray) -> bytes:
    """Serialize a tensor to its exact on-disk byte string."""
    t = _check_tensor(t)
    h, w, c = t.shape
    header = TENSOR_MAGIC + struct.pack("<IIIII", TENSOR_VERSION, _DTYPE_TO_CODE[t.dtype], h, w, c)
    payload = np.ascontiguousarray(t).astype(t.dtype.newbyteorder("<"), copy=False).tobytes()
    return header + payload


def write_tensor(t: np.ndarray, path) -> None:
    data = tensor_bytes(t)
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def tensor_from_bytes(data: bytes, offset: int = 0, allow_trailing: bool = False):
    """Parse one tensor record starting at ``offset``.

    Returns ``(tensor, next_offset)``. With ``allow_trailing`` the buffer may
    continue past the record (used by multi-record containers).
    """
    if len(data) - offset < 4 or data[offset : offset + 4] != TENSOR_MAGIC:
        raise BadMagic("not a BTSR tensor record")
    if len(data) - offset < 24:
        raise TruncatedPayload("header cut short")
    version, code, h, w, c = struct.unpack_from("<IIIII", data, offset + 4)
    if version != TENSOR_VERSION:
        raise UnsupportedVersion(f"version {version} not supported")
    if code not in _CODE_TO_DTYPE:
        raise DtypeUnknown(f"dtype code {code}")
    if h < 1 or w < 1 or c < 1:
        raise CorruptHeader(f"non-positive dimension in header: {(h, w, c)}")
    dtype = _CODE_TO_DTYPE[code]
    count = h * w * c
    start = offset + 24
    end = start + count * dtype.itemsize
    if len(data) < end:
        raise TruncatedPayload(f"payload needs {end - start} bytes, file has {len(data) - start}")
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=start)
    arr = arr.astype(arr.dtype.newbyteorder("="), copy=True).reshape(h, w, c)
    if arr.dtype == np.float32 and not np.isfinite(arr).all():
        raise NonFiniteFloat("float tensor contains NaN or Inf")
    if not allow_trailing and len(data) != end:
        raise TrailingData(f"{len(data) - end} unexpected bytes after payload")
    return arr, end


def read_tensor(path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    arr, _ = tensor_from_bytes(data)
    return arr


# --- netpbm ------------------------------------------------------------------


def _parse_pnm_tokens(data: bytes, n: int, pos: int):
    """Read ``n`` whitespace-separated ASCII integers, skipping ``#`` comments."""
    vals = []
    while len(vals) < n:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos] == ord("#"):
            while pos < len(data) and data[pos] not in (10, 13):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise CorruptHeader("expected an integer in image header")
        vals.append(int(data[start:pos]))
    return vals, pos


def read_image(path) -> np.ndarray:
    """Read a binary PPM/PGM into a uint8 (H, W, C) array, C in {1, 3}."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    magic = data[:2]
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise UnsupportedFormat(f"not a binary PPM/PGM: magic {magic!r}")
    try:
        (w, h, maxval), pos = _parse_pnm_tokens(data, 3, 2)
    except IndexError:
        raise CorruptHeader("image header ends prematurely") from None
    if w < 1 or h < 1:
        raise CorruptHeader(f"non-positive image size {w}x{h}")
    if maxval != 255:
        raise UnsupportedFormat(f"only maxval 255 supported, got {maxval}")
    pos += 1  # exactly one whitespace byte separates header from pixels
    need = w * h * channels
    pixels = data[pos : pos + need]
    if len(pixels) < need:
        raise TruncatedPixelData(f"need {need} pixel bytes, got {len(pixels)}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, channels).copy()


def write_image(t: np.ndarray, path) -> None:
    """Write a uint8 (H, W, C) array as binary PPM (C=3) or PGM (C=1)."""
    t = np.asarray(t)
    if t.ndim == 2:
        t = t[:, :, None]
    if t.ndim != 3 or t.dtype != np.uint8:
        raise UnsupportedFormat(f"expected a uint8 (H, W, C) array, got {t.dtype} shape {t.shape}")
    h, w, c = t.shape
    if c == 3:
        header = b"P6"
    elif c == 1:
        header = b"P5"
    else:
        raise UnsupportedChannels(f"cannot encode {c} channels as PPM/PGM")
    try:
        with open(path, "wb") as f:
            f.write(header + b"\n%d %d\n255\n" % (w, h))
            f.write(np.ascontiguousarray(t).tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


# --- label maps ---------------------------------------------------------------


def relabel(labels: np.ndarray) -> np.ndarray:
    """Renumber labels to 0..L-1 in order of first row-major occurrence."""
    labels = np.asarray(labels)
    flat = labels.ravel()
    uniq, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty(len(uniq), dtype=np.int32)
    rank[order] = np.arange(len(uniq), dtype=np.int32)
    return rank[inverse].reshape(labels.shape)


def write_label_map(labels: np.ndarray, path) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise CorruptHeader(f"label map must be 2-D, got shape {labels.shape}")
    if labels.size and labels.min() < 0:
        raise CorruptHeader("label map contains negative labels")
    write_tensor(labels.astype(np.uint32)[:, :, None], path)


def read_label_map(path) -> np.ndarray:
    t = read_tensor(path)
    if t.shape[2] != 1 or t.dtype != np.uint32:
        raise UnsupportedFormat(f"label map must be uint32 with channels=1, got {t.dtype} {t.shape}")
    return t[:, :, 0].astype(np.int32)
