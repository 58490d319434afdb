"""Batch feature export: images in, one tensor file per image plus a manifest."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from .btsr import write_tensor
from .net import FEATURE_DIM, OFFSET, RECEPTIVE_FIELD, STRIDE, FullyConvFeatures, build_model, expected_grid

IMAGE_SUFFIXES = {".ppm", ".pgm", ".png", ".jpg", ".jpeg", ".bmp"}

_IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], np.float32)
_IMAGENET_STD = np.array([0.229, 0.224, 0.225], np.float32)


class ImageDecodeError(RuntimeError):
    pass


def load_image_rgb(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise ImageDecodeError(f"cannot decode {path}: {e}") from e


def preprocess(rgb: np.ndarray) -> torch.Tensor:
    x = (rgb.astype(np.float32) / 255.0 - _IMAGENET_MEAN) / _IMAGENET_STD
    return torch.from_numpy(np.ascontiguousarray(x.transpose(2, 0, 1)))[None]


@torch.no_grad()
def extract(model: FullyConvFeatures, rgb: np.ndarray) -> np.ndarray:
    """Feature map (h, w, 4096) float32 for one RGB image."""
    out = model(preprocess(rgb))[0]
    return out.permute(1, 2, 0).contiguous().numpy().astype(np.float32)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def export_features(image_dir, model_id: str, out_dir, weights_path=None,
                    seed: int = 0, threads: int | None = None) -> dict:
    """Export every image in ``image_dir``; returns the manifest dict.

    The manifest records model identity, net geometry, and per-image output
    path, shape and content checksum, and is written to out_dir/manifest.json.
    """
    image_dir = Path(image_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.set_num_threads(threads or min(8, torch.get_num_threads()))

    paths = sorted(p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise ImageDecodeError(f"no images found in {image_dir}")

    model = build_model(model_id, weights_path=weights_path, seed=seed)
    manifest: dict = {
        "model": model_id,
        "feature_dim": FEATURE_DIM,
        "stride": STRIDE,
        "receptive_field": RECEPTIVE_FIELD,
        "offset": OFFSET,
        "seed": seed if model_id.endswith("-random") else None,
        "images": [],
    }
    for path in paths:
        rgb = load_image_rgb(path)
        fmap = extract(model, rgb)
        h, w = rgb.shape[:2]
        assert fmap.shape[:2] == expected_grid(h, w)
        out_path = out_dir / f"{path.stem}.feat.btsr"
        write_tensor(fmap, out_path)
        manifest["images"].append(
            {
                "id": path.stem,
                "source": str(path),
                "input_size": [h, w],
                "path": out_path.name,
                "shape": list(fmap.shape),
                "sha256": _sha256(out_path),
            }
        )
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
