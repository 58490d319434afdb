"""Graph-based segmentation over the 8-connected pixel grid.

Edges are weighted by Euclidean RGB distance after optional Gaussian
pre-smoothing and processed in non-decreasing weight order; two components
merge when the edge weight does not exceed either side's internal difference
plus the adaptive threshold k/|C|. A final pass fuses components below
``min_size``. Ties in edge weight break on (smaller endpoint, larger
endpoint), which makes the whole procedure deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import EmptyImage, WrongChannelCount
from .tensor_io import relabel

DEFAULT_SIGMA = 1.0
DEFAULT_K = 100.0
DEFAULT_MIN_SIZE = 50


@dataclass
class EgsParams:
    sigma: float = DEFAULT_SIGMA
    k: float = DEFAULT_K
    min_size: int = DEFAULT_MIN_SIZE

    def validate(self) -> None:
        if self.sigma < 0 or self.k <= 0 or self.min_size < 1:
            raise ValueError(f"invalid parameters: {self}")


def gaussian_smooth(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable per-channel Gaussian blur, clamp-to-edge; sigma=0 is identity."""
    img = np.asarray(img, dtype=np.float32)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return img
    radius = max(1, math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2 * sigma * sigma))
    kernel /= kernel.sum()
    out = img.astype(np.float64)
    out = _correlate_axis(out, kernel, axis=0)
    out = _correlate_axis(out, kernel, axis=1)
    return out.astype(np.float32)


def _correlate_axis(a: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0)] * a.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(a, pad, mode="edge")
    out = np.zeros_like(a)
    for i, kv in enumerate(kernel):
        sl = [slice(None)] * a.ndim
        sl[axis] = slice(i, i + a.shape[axis])
        out += kv * padded[tuple(sl)]
    return out


@njit(cache=True)
def _find(parent, x):  # pragma: no cover
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _merge_loop(n, ei, ej, w, k):  # pragma: no cover
    parent = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    thresh = np.full(n, k, dtype=np.float64)
    for idx in range(len(ei)):
        a = _find(parent, ei[idx])
        b = _find(parent, ej[idx])
        if a != b and w[idx] <= thresh[a] and w[idx] <= thresh[b]:
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
            thresh[a] = w[idx] + k / size[a]
    return parent, size


@njit(cache=True)
def _fuse_small(parent, size, ei, ej, min_size):  # pragma: no cover
    for idx in range(len(ei)):
        a = _find(parent, ei[idx])
        b = _find(parent, ej[idx])
        if a != b and (size[a] < min_size or size[b] < min_size):
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]


@njit(cache=True)
def _roots(parent):  # pragma: no cover
    out = np.empty(len(parent), dtype=np.int64)
    for i in range(len(parent)):
        out[i] = _find(parent, i)
    return out


def _grid_edges(sm: np.ndarray):
    """8-connected edges with float64 Euclidean color weights, i < j always."""
    h, w = sm.shape[:2]
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    eis, ejs, ws = [], [], []

    def add(sa, sb):
        d = sm[sa] - sm[sb]
        weight = np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2])
        eis.append(idx[sa].ravel())
        ejs.append(idx[sb].ravel())
        ws.append(weight.ravel())

    add((slice(None), slice(0, w - 1)), (slice(None), slice(1, w)))          # right
    add((slice(0, h - 1), slice(None)), (slice(1, h), slice(None)))          # down
    add((slice(0, h - 1), slice(0, w - 1)), (slice(1, h), slice(1, w)))      # down-right
    if w > 1:
        add((slice(0, h - 1), slice(1, w)), (slice(1, h), slice(0, w - 1)))  # down-left
    if not eis:
        return (np.empty(0, np.int64),) * 2 + (np.empty(0, np.float64),)
    return np.concatenate(eis), np.concatenate(ejs), np.concatenate(ws)


def egs_segment(image: np.ndarray, params: EgsParams | None = None) -> np.ndarray:
    """Segment a uint8 RGB image; returns a contiguous int32 label map."""
    if params is None:
        params = EgsParams()
    params.validate()
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise WrongChannelCount(f"expected an RGB image, got shape {image.shape}")
    h, w = image.shape[:2]
    if h * w == 0:
        raise EmptyImage("image has no pixels")

    smoothed = gaussian_smooth(image.astype(np.float32), params.sigma).astype(np.float64)
    ei, ej, wt = _grid_edges(smoothed)
    order = np.lexsort((ej, ei, wt))
    ei, ej, wt = ei[order], ej[order], wt[order]

    parent, size = _merge_loop(h * w, ei, ej, wt, float(params.k))
    _fuse_small(parent, size, ei, ej, int(params.min_size))
    return relabel(_roots(parent).reshape(h, w)).astype(np.int32)
