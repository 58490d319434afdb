"""Spatial grids of binary codes and their mapping onto superpixels.

A feature map encodes cell-by-cell into an h x w grid of b-bit codes. Pixels
of the full-resolution image correspond to cells by proportional scaling, so
the grid stays aligned with the image for any stride.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, TooManyBits
from .itq import HashModel, encode_rows
from .superpixel import SuperpixelSet


@dataclass(frozen=True)
class BinaryMap:
    codes: np.ndarray  # (h, w, b) bool

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    @property
    def width(self) -> int:
        return self.codes.shape[1]

    @property
    def bits(self) -> int:
        return self.codes.shape[2]


def encode_feature_map(model: HashModel, fmap: np.ndarray) -> BinaryMap:
    """Encode every (r, c) feature vector of an (h, w, d) map."""
    fmap = np.asarray(fmap)
    if fmap.ndim != 3:
        raise DimMismatch(f"expected an (h, w, d) feature map, got shape {fmap.shape}")
    h, w, d = fmap.shape
    if d != model.dim:
        raise DimMismatch(f"feature dim {d} != model dim {model.dim}")
    codes = encode_rows(model, fmap.reshape(h * w, d)).reshape(h, w, model.bits)
    return BinaryMap(codes=codes)


def map_pixel_to_cell(image_h: int, image_w: int, map_h: int, map_w: int,
                      r: int, c: int) -> tuple[int, int]:
    """Cell under pixel (r, c) by proportional scaling: floor(r*h/H), floor(c*w/W)."""
    if not (0 <= r < image_h and 0 <= c < image_w):
        raise DimMismatch(f"pixel ({r}, {c}) outside {image_h}x{image_w} image")
    return (r * map_h) // image_h, (c * map_w) // image_w


def _cell_grid(image_h: int, image_w: int, bm: BinaryMap) -> np.ndarray:
    """Per-pixel cell codes, (H, W, b), by the proportional mapping."""
    rows = (np.arange(image_h, dtype=np.int64) * bm.height) // image_h
    cols = (np.arange(image_w, dtype=np.int64) * bm.width) // image_w
    return bm.codes[rows[:, None], cols[None, :]]


def superpixel_codes(bm: BinaryMap, sp: SuperpixelSet, image_dims: tuple[int, int],
                     assign: str = "majority") -> np.ndarray:
    """One code per superpixel, (count, b) bool.

    ``majority`` votes each bit over the cells covering the superpixel's
    pixels (ties set the bit); ``center`` samples the cell under the pixel
    nearest the superpixel centroid.
    """
    h, w = image_dims
    if sp.labels.shape != (h, w):
        raise DimMismatch(f"label map {sp.labels.shape} != image dims {(h, w)}")
    if assign == "center":
        rows = np.clip(np.floor(sp.centroids[:, 0] + 0.5).astype(np.int64), 0, h - 1)
        cols = np.clip(np.floor(sp.centroids[:, 1] + 0.5).astype(np.int64), 0, w - 1)
        cr = (rows * bm.height) // h
        cc = (cols * bm.width) // w
        return bm.codes[cr, cc]
    if assign != "majority":
        raise ValueError(f"unknown code assignment {assign!r}")
    bits = _cell_grid(h, w, bm).reshape(h * w, bm.bits)
    flat = sp.labels.ravel()
    sizes = np.bincount(flat, minlength=sp.count)
    ones = np.empty((sp.count, bm.bits), dtype=np.int64)
    for i in range(bm.bits):
        ones[:, i] = np.bincount(flat, weights=bits[:, i], minlength=sp.count)
    return ones * 2 >= sizes[:, None]


def code_values(codes: np.ndarray) -> np.ndarray:
    """Integer value of each code with bit 0 as the least significant bit."""
    codes = np.asarray(codes, dtype=np.uint64)
    weights = np.uint64(1) << np.arange(codes.shape[-1], dtype=np.uint64)
    return (codes * weights).sum(axis=-1)


def visualize_binary_map(bm: BinaryMap) -> np.ndarray:
    """Render codes to uint8: grayscale for b <= 8, RGB byte-planes for b <= 24."""
    b = bm.bits
    if b > 24:
        raise TooManyBits(f"cannot visualize {b} bits, max 24")
    if b <= 8:
        vals = code_values(bm.codes)
        scale = 255 // ((1 << b) - 1)
        return (vals * scale).astype(np.uint8)[..., None]
    out = np.zeros((bm.height, bm.width, 3), dtype=np.uint8)
    for plane in range(3):
        lo = plane * 8
        hi = min(lo + 8, b)
        if lo >= b:
            break
        out[..., plane] = code_values(bm.codes[..., lo:hi]).astype(np.uint8)
    return out


def binary_map_to_tensor(bm: BinaryMap) -> np.ndarray:
    """One byte per bit, values in {0, 1}, for persistence."""
    return bm.codes.astype(np.uint8)


def binary_map_from_tensor(t: np.ndarray) -> BinaryMap:
    t = np.asarray(t)
    if t.ndim != 3 or not np.isin(t, (0, 1)).all():
        raise DimMismatch("binary map tensor must be (h, w, b) of 0/1 values")
    return BinaryMap(codes=t.astype(bool))
