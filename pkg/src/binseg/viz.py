"""Qualitative rendering helpers: label colorization and nearest-neighbor scaling."""

from __future__ import annotations

import numpy as np


def _mix(x: np.ndarray) -> np.ndarray:
    """64-bit integer hash (splitmix64 finalizer) for stable label colors."""
    x = x.astype(np.uint64)
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return x ^ (x >> np.uint64(31))


def colorize_labels(labels: np.ndarray) -> np.ndarray:
    """Deterministic distinct-ish RGB per label, uint8 (H, W, 3)."""
    h = _mix(np.asarray(labels))
    out = np.empty(labels.shape + (3,), dtype=np.uint8)
    out[..., 0] = (h & np.uint64(0xFF)).astype(np.uint8)
    out[..., 1] = ((h >> np.uint64(8)) & np.uint64(0xFF)).astype(np.uint8)
    out[..., 2] = ((h >> np.uint64(16)) & np.uint64(0xFF)).astype(np.uint8)
    return out


def upscale_nearest(img: np.ndarray, factor: int) -> np.ndarray:
    """Repeat pixels ``factor`` times along both spatial axes."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    return np.repeat(np.repeat(img, factor, axis=0), factor, axis=1)


def mark_boundaries(image: np.ndarray, labels: np.ndarray,
                    color: tuple = (255, 255, 255)) -> np.ndarray:
    """Overlay label boundaries on an RGB image."""
    out = np.asarray(image).copy()
    edge = np.zeros(labels.shape, dtype=bool)
    edge[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    edge[:-1, :] |= labels[:-1, :] != labels[1:, :]
    out[edge] = color
    return out
