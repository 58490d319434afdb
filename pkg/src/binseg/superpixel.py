"""SLIC superpixel extraction and label-map connectivity utilities.

The clustering runs in joint CIELAB + pixel space: seeds start on a regular
grid with spacing S = sqrt(N/k), each seed is nudged to the lowest-gradient
spot in its 3x3 neighborhood, and every iteration assigns pixels within a
2S x 2S window of each center using

    D = sqrt(d_lab^2 + (d_xy / S)^2 * m^2)

followed by recomputing centers as the mean Lab+xy of their members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import EmptyImage, KTooLarge, WrongChannelCount
from .tensor_io import relabel

DEFAULT_COMPACTNESS = 10.0
DEFAULT_ITERS = 10

# sRGB (D65) to XYZ, rows scaled so pure white maps onto the white point
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = np.array([0.95047, 1.0, 1.08883])


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert a uint8 sRGB image (H, W, 3) to CIELAB, float32."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise WrongChannelCount(f"expected 3 channels, got shape {rgb.shape}")
    c = rgb.astype(np.float64) / 255.0
    linear = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB_TO_XYZ.T / _WHITE
    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab.astype(np.float32)


@dataclass
class SuperpixelSet:
    """A total partition into connected superpixels with contiguous labels."""

    labels: np.ndarray            # (H, W) int32
    count: int
    centroids: np.ndarray         # (count, 2) float64, (row, col)
    adjacency: set                # {(a, b)} with a < b, 4-connected neighbors


def build_adjacency(labels: np.ndarray) -> set:
    """Unordered label pairs that share a 4-connected pixel border."""
    labels = np.asarray(labels)
    pairs = []
    for a, b in (
        (labels[:, :-1], labels[:, 1:]),
        (labels[:-1, :], labels[1:, :]),
    ):
        a = a.ravel()
        b = b.ravel()
        keep = a != b
        lo = np.minimum(a[keep], b[keep])
        hi = np.maximum(a[keep], b[keep])
        pairs.append(np.stack([lo, hi], axis=1))
    if not pairs:
        return set()
    allp = np.unique(np.concatenate(pairs, axis=0), axis=0)
    return {(int(a), int(b)) for a, b in allp}


def _centroids(labels: np.ndarray, count: int) -> np.ndarray:
    h, w = labels.shape
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count).astype(np.float64)
    rows = np.repeat(np.arange(h, dtype=np.float64), w)
    cols = np.tile(np.arange(w, dtype=np.float64), h)
    cr = np.bincount(flat, weights=rows, minlength=count) / sizes
    cc = np.bincount(flat, weights=cols, minlength=count) / sizes
    return np.stack([cr, cc], axis=1)


def superpixels_from_labels(labels: np.ndarray) -> SuperpixelSet:
    """Wrap a contiguous label map, deriving count, centroids and adjacency."""
    labels = np.asarray(labels, dtype=np.int32)
    count = int(labels.max()) + 1 if labels.size else 0
    return SuperpixelSet(labels, count, _centroids(labels, count), build_adjacency(labels))


@njit(cache=True)
def _components(labels, h, w):  # pragma: no cover - exercised via wrappers
    """4-connected components of equal-label regions, numbered in scan order."""
    n = h * w
    comp = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    ncomp = 0
    for start in range(n):
        if comp[start] >= 0:
            continue
        lab = labels[start]
        comp[start] = ncomp
        queue[0] = start
        head, tail = 0, 1
        while head < tail:
            p = queue[head]
            head += 1
            r = p // w
            c = p % w
            if r > 0 and comp[p - w] < 0 and labels[p - w] == lab:
                comp[p - w] = ncomp
                queue[tail] = p - w
                tail += 1
            if r + 1 < h and comp[p + w] < 0 and labels[p + w] == lab:
                comp[p + w] = ncomp
                queue[tail] = p + w
                tail += 1
            if c > 0 and comp[p - 1] < 0 and labels[p - 1] == lab:
                comp[p - 1] = ncomp
                queue[tail] = p - 1
                tail += 1
            if c + 1 < w and comp[p + 1] < 0 and labels[p + 1] == lab:
                comp[p + 1] = ncomp
                queue[tail] = p + 1
                tail += 1
        ncomp += 1
    return comp, ncomp


def connected_components(labels: np.ndarray):
    """Component id per pixel plus component count, 4-connectivity."""
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    h, w = labels.shape
    comp, ncomp = _components(labels.ravel(), h, w)
    return comp.reshape(h, w), ncomp


def enforce_connectivity(sp: SuperpixelSet, min_size: int) -> SuperpixelSet:
    """Split disconnected labels, then absorb components below ``min_size``.

    A small component joins the neighbor it shares the longest border with;
    ties go to the smaller original label, then the smaller component id.
    Border lengths are measured once, on the unmerged components.
    """
    labels = _enforce_labels(sp.labels, min_size)
    return superpixels_from_labels(labels)


def _enforce_labels(labels: np.ndarray, min_size: int) -> np.ndarray:
    """Split labels into components, then absorb small ones until none remain.

    Each round measures borders on the current partition, so transitive
    chains of tiny fragments keep merging until every label reaches
    ``min_size`` (or only one label is left).
    """
    current = np.asarray(labels)
    while True:
        comp, ncomp = connected_components(current)
        flatc = comp.ravel()
        sizes = np.bincount(flatc, minlength=ncomp)
        small = np.nonzero(sizes < min_size)[0]
        current = relabel(comp).astype(np.int32)
        if len(small) == 0 or ncomp <= 1:
            return current

        # border length between every adjacent component pair
        ca = np.concatenate([comp[:, :-1].ravel(), comp[:-1, :].ravel()])
        cb = np.concatenate([comp[:, 1:].ravel(), comp[1:, :].ravel()])
        keep = ca != cb
        lo = np.minimum(ca[keep], cb[keep])
        hi = np.maximum(ca[keep], cb[keep])
        pairs, counts = np.unique(lo * ncomp + hi, return_counts=True)

        neighbors: list[list] = [[] for _ in range(ncomp)]
        for key, cnt in zip(pairs.tolist(), counts.tolist()):
            a, b = divmod(key, ncomp)
            neighbors[a].append((b, cnt))
            neighbors[b].append((a, cnt))

        group = list(range(ncomp))

        def find(x):
            while group[x] != x:
                group[x] = group[group[x]]
                x = group[x]
            return x

        merged = False
        for c in small:
            if not neighbors[c]:
                continue
            target = min(neighbors[c], key=lambda t: (-t[1], t[0]))[0]
            if find(c) != find(target):
                group[find(c)] = find(target)
                merged = True
        if not merged:
            return current
        root = np.array([find(c) for c in range(ncomp)], dtype=np.int64)
        current = relabel(root[comp]).astype(np.int32)


def slic(
    image: np.ndarray,
    k: int,
    m: float = DEFAULT_COMPACTNESS,
    iters: int = DEFAULT_ITERS,
    min_size: int | None = None,
) -> SuperpixelSet:
    """Segment a uint8 RGB image into roughly ``k`` connected superpixels."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise WrongChannelCount(f"expected an RGB image, got shape {image.shape}")
    h, w = image.shape[:2]
    n = h * w
    if n == 0:
        raise EmptyImage("image has no pixels")
    if k < 1 or m <= 0 or iters < 1:
        raise ValueError("require k >= 1, m > 0, iters >= 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds pixel count {n}")

    lab = rgb_to_lab(image).astype(np.float64)
    s = math.sqrt(n / k)

    seed_rows = np.arange(s / 2, h, s)
    seed_cols = np.arange(s / 2, w, s)
    rr, cc = np.meshgrid(seed_rows.astype(np.int64), seed_cols.astype(np.int64), indexing="ij")
    seeds = np.stack([rr.ravel(), cc.ravel()], axis=1)
    seeds = _perturb_seeds(lab, seeds)

    centers = np.empty((len(seeds), 5))
    centers[:, :3] = lab[seeds[:, 0], seeds[:, 1]]
    centers[:, 3:] = seeds

    row_idx = np.arange(h, dtype=np.float64)
    col_idx = np.arange(w, dtype=np.float64)
    inv_s2m2 = (m / s) ** 2

    assign = np.full((h, w), -1, dtype=np.int64)
    for _ in range(iters):
        dist = np.full((h, w), np.inf)
        assign.fill(-1)
        for ci in range(len(centers)):
            cl, ca, cb, cr, ccol = centers[ci]
            r0 = max(0, int(cr - s))
            r1 = min(h, int(cr + s) + 1)
            c0 = max(0, int(ccol - s))
            c1 = min(w, int(ccol + s) + 1)
            win = lab[r0:r1, c0:c1]
            dlab2 = (win[..., 0] - cl) ** 2 + (win[..., 1] - ca) ** 2 + (win[..., 2] - cb) ** 2
            dxy2 = (row_idx[r0:r1, None] - cr) ** 2 + (col_idx[None, c0:c1] - ccol) ** 2
            d = np.sqrt(dlab2 + dxy2 * inv_s2m2)
            better = d < dist[r0:r1, c0:c1]
            dist[r0:r1, c0:c1][better] = d[better]
            assign[r0:r1, c0:c1][better] = ci
        _assign_orphans(lab, centers, assign, dist, inv_s2m2)
        centers = _update_centers(lab, assign, len(centers))

    if min_size is None:
        min_size = max(1, int(n / k / 4))
    labels = _enforce_labels(relabel(assign), min_size)
    return superpixels_from_labels(labels)


def _perturb_seeds(lab: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Move each seed to the lowest-gradient pixel in its 3x3 neighborhood."""
    h, w = lab.shape[:2]
    up = np.clip(np.arange(h) - 1, 0, h - 1)
    dn = np.clip(np.arange(h) + 1, 0, h - 1)
    lf = np.clip(np.arange(w) - 1, 0, w - 1)
    rt = np.clip(np.arange(w) + 1, 0, w - 1)
    gh = ((lab[:, rt] - lab[:, lf]) ** 2).sum(axis=2)
    gv = ((lab[dn, :] - lab[up, :]) ** 2).sum(axis=2)
    grad = gh + gv
    out = seeds.copy()
    for i, (r, c) in enumerate(seeds):
        best = grad[r, c]
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and grad[rr, cc] < best:
                    best = grad[rr, cc]
                    out[i] = (rr, cc)
    return out


def _assign_orphans(lab, centers, assign, dist, inv_s2m2):
    """Pixels outside every search window fall back to a full center scan."""
    orphans = np.argwhere(assign < 0)
    for r, c in orphans:
        dlab2 = ((centers[:, :3] - lab[r, c]) ** 2).sum(axis=1)
        dxy2 = (centers[:, 3] - r) ** 2 + (centers[:, 4] - c) ** 2
        d = np.sqrt(dlab2 + dxy2 * inv_s2m2)
        ci = int(np.argmin(d))
        assign[r, c] = ci
        dist[r, c] = d[ci]


def _update_centers(lab: np.ndarray, assign: np.ndarray, k: int) -> np.ndarray:
    """Means of member Lab+xy per cluster; empty clusters are dropped."""
    h, w = assign.shape
    flat = assign.ravel()
    sizes = np.bincount(flat, minlength=k).astype(np.float64)
    keep = sizes > 0
    rows = np.repeat(np.arange(h, dtype=np.float64), w)
    cols = np.tile(np.arange(w, dtype=np.float64), h)
    fields = [lab[..., 0].ravel(), lab[..., 1].ravel(), lab[..., 2].ravel(), rows, cols]
    centers = np.empty((int(keep.sum()), 5))
    for j, f in enumerate(fields):
        centers[:, j] = (np.bincount(flat, weights=f, minlength=k) / np.maximum(sizes, 1))[keep]
    return centers
