"""Deterministic synthetic scenes: image, feature map, and ground truth.

A scene is a Voronoi partition of a small cell grid, rendered at pixel scale.
Each region gets a well-separated Gaussian feature center (cluster sigma is
a twentieth of the minimum center distance) and a distinct flat color with
small uint8 noise, so the full pipeline should recover the regions almost
exactly while remaining a nontrivial input for pixel-level methods.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor_io
from .superpixel import connected_components

# saturated, pairwise well-separated colors; regions beyond the palette are
# rejection-sampled at a minimum RGB distance
_PALETTE = np.array(
    [
        (220, 60, 40),
        (40, 110, 220),
        (60, 200, 80),
        (240, 200, 40),
        (150, 60, 200),
        (40, 210, 210),
        (240, 120, 180),
        (130, 90, 30),
        (200, 230, 220),
        (30, 40, 90),
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class SyntheticScene:
    image: np.ndarray     # (H, W, 3) uint8
    features: np.ndarray  # (h, w, d) float32
    gt: np.ndarray        # (H, W) int32
    regions: int
    seed: int


def make_scene(h: int, w: int, scale: int = 16, d: int = 64, regions: int = 3,
               seed: int = 0) -> SyntheticScene:
    """Build a scene on an ``h x w`` cell grid rendered at ``scale`` px/cell."""
    if regions < 1 or regions > h * w:
        raise ValueError(f"regions must be in [1, {h * w}], got {regions}")
    if d < regions:
        raise ValueError(f"need d >= regions, got d={d}, regions={regions}")
    rng = np.random.default_rng(seed)

    gt_cells, sr, sc = _voronoi_cells(h, w, regions, rng)
    gt_cells = _repair_connectivity(gt_cells, sr, sc)

    centers = rng.standard_normal((regions, d))
    if regions > 1:
        diff = centers[:, None, :] - centers[None, :, :]
        dists = np.sqrt((diff * diff).sum(axis=2))
        min_dist = dists[np.triu_indices(regions, k=1)].min()
    else:
        min_dist = 1.0
    sigma = min_dist / 100.0
    features = (centers[gt_cells] + rng.normal(0.0, sigma, size=(h, w, d))).astype(np.float32)

    colors = _region_colors(regions, rng)
    gt = np.repeat(np.repeat(gt_cells, scale, axis=0), scale, axis=1)
    flat = colors[gt]
    noise = rng.integers(-5, 6, size=flat.shape)
    image = np.clip(flat + noise, 0, 255).astype(np.uint8)

    return SyntheticScene(image=image, features=features, gt=gt.astype(np.int32),
                          regions=regions, seed=seed)


def _voronoi_cells(h: int, w: int, regions: int, rng: np.random.Generator):
    """Voronoi partition of seeded cell-grid points, nearest site by L2.

    Site sets giving extremely lopsided areas are redrawn (up to a fixed
    budget): a region that dwarfs the others drags the feature mean onto its
    own center, which makes its low-variance code bits noise-driven.
    """
    floor = 0.5 / regions
    sr = sc = None
    for attempt in range(64):
        sites = rng.choice(h * w, size=regions, replace=False)
        sr, sc = sites // w, sites % w
        rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        d2 = (rr[..., None] - sr) ** 2 + (cc[..., None] - sc) ** 2
        gt_cells = np.argmin(d2, axis=2).astype(np.int32)
        areas = np.bincount(gt_cells.ravel(), minlength=regions)
        if regions == 1 or areas.min() >= floor * h * w:
            return gt_cells, sr, sc
    return gt_cells, sr, sc


def _region_colors(regions: int, rng: np.random.Generator) -> np.ndarray:
    colors = [tuple(c) for c in _PALETTE[rng.permutation(len(_PALETTE))][:regions]]
    while len(colors) < regions:
        cand = tuple(rng.integers(0, 256, size=3).tolist())
        if all(sum((a - b) ** 2 for a, b in zip(cand, c)) >= 60**2 for c in colors):
            colors.append(cand)
    return np.array(colors, dtype=np.int64)


def _repair_connectivity(gt_cells: np.ndarray, sr: np.ndarray, sc: np.ndarray) -> np.ndarray:
    """Reassign any stray component to its dominant border neighbor.

    Discretized Voronoi regions are connected in all but pathological site
    layouts; this pass guarantees the invariant regardless.
    """
    gt = gt_cells.copy()
    h, w = gt.shape
    for _ in range(h * w):
        comp, ncomp = connected_components(gt)
        keep = np.zeros(ncomp, dtype=bool)
        keep[comp[sr, sc]] = True
        stray = np.nonzero(~keep)[0]
        if len(stray) == 0:
            return gt
        mask = comp == stray[0]
        border: dict[int, int] = {}
        for sa, sb in (((slice(None), slice(0, w - 1)), (slice(None), slice(1, w))),
                       ((slice(0, h - 1), slice(None)), (slice(1, h), slice(None)))):
            ma, mb = mask[sa], mask[sb]
            for lab in gt[sb][ma & ~mb].ravel():
                border[int(lab)] = border.get(int(lab), 0) + 1
            for lab in gt[sa][~ma & mb].ravel():
                border[int(lab)] = border.get(int(lab), 0) + 1
        target = min(border.items(), key=lambda t: (-t[1], t[0]))[0]
        gt[mask] = target
    return gt


def scene_id(scene: SyntheticScene) -> str:
    return f"scene{scene.seed:04d}"


def write_scene(scene: SyntheticScene, directory, image_id: str | None = None) -> str:
    """Persist a scene in the dataset layout: <id>.ppm, <id>.feat.btsr, <id>.gt.btsr."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    image_id = image_id or scene_id(scene)
    tensor_io.write_image(scene.image, directory / f"{image_id}.ppm")
    tensor_io.write_tensor(scene.features, directory / f"{image_id}.feat.btsr")
    tensor_io.write_label_map(scene.gt, directory / f"{image_id}.gt.btsr")
    return image_id
