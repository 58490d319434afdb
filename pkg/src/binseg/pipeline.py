"""End-to-end wiring: feature pooling, hash training, and per-image segmentation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from . import itq, merge, superpixel, tensor_io
from .binmap import encode_feature_map, superpixel_codes
from .errors import DimMismatch


@dataclass(frozen=True)
class PipelineConfig:
    bits: int = 8
    itq_iters: int = 50
    seed: int = 0
    superpixel_k: int = 200
    compactness: float = 10.0
    slic_iters: int = 10
    max_hamming: int = 0
    merge_scope: str = merge.SCOPE_ADJACENT
    code_assign: str = "majority"
    egs_sigma: float = 1.0
    egs_k: float = 100.0
    egs_min_size: int = 50
    sample_cap: int = 100_000
    l2_normalize: bool = False
    ignore_label: int | None = None

    def with_superpixel_k(self, k: int) -> "PipelineConfig":
        return dataclasses.replace(self, superpixel_k=k)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_sources(cls, json_path=None, overrides: dict | None = None) -> "PipelineConfig":
        """Defaults, then JSON config file, then explicit flag overrides."""
        values: dict = {}
        if json_path is not None:
            loaded = json.loads(open(json_path).read())
            unknown = set(loaded) - {f.name for f in dataclasses.fields(cls)}
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            values.update(loaded)
        for key, val in (overrides or {}).items():
            if val is not None:
                values[key] = val
        return cls(**values)

    def egs_params(self):
        from .egs import EgsParams

        return EgsParams(sigma=self.egs_sigma, k=self.egs_k, min_size=self.egs_min_size)


def pool_training_rows(feature_maps, sample_cap: int = 100_000, seed: int = 0) -> np.ndarray:
    """Stack all cells of all feature maps; subsample to ``sample_cap`` rows."""
    rows = []
    dim = None
    for fmap in feature_maps:
        fmap = np.asarray(fmap)
        if fmap.ndim != 3:
            raise DimMismatch(f"feature map must be (h, w, d), got shape {fmap.shape}")
        if dim is None:
            dim = fmap.shape[2]
        elif fmap.shape[2] != dim:
            raise DimMismatch(f"feature dims disagree: {fmap.shape[2]} vs {dim}")
        rows.append(fmap.reshape(-1, fmap.shape[2]))
    x = np.concatenate(rows, axis=0)
    if sample_cap and len(x) > sample_cap:
        rng = np.random.default_rng(seed)
        x = x[np.sort(rng.choice(len(x), size=sample_cap, replace=False))]
    return x.astype(np.float64)


def train_from_feature_maps(feature_maps, config: PipelineConfig) -> itq.HashModel:
    x = pool_training_rows(feature_maps, config.sample_cap, config.seed)
    model = itq.train_hash(x, config.bits, config.itq_iters, config.seed,
                           normalize=config.l2_normalize)
    model.meta.update({"sample_cap": config.sample_cap, "seed": config.seed,
                       "rows": int(x.shape[0])})
    return model


def segment_image(image: np.ndarray, fmap: np.ndarray, model: itq.HashModel,
                  config: PipelineConfig | None = None, intermediates: dict | None = None) -> np.ndarray:
    """Superpixels -> binary map -> per-superpixel codes -> merge.

    Returns a contiguous int32 label map; pass ``intermediates`` to capture the
    superpixel set, binary map, and codes for visualization.
    """
    config = config or PipelineConfig()
    sp = superpixel.slic(image, config.superpixel_k, config.compactness, config.slic_iters)
    bm = encode_feature_map(model, fmap)
    codes = superpixel_codes(bm, sp, image.shape[:2], assign=config.code_assign)
    policy = merge.MergePolicy(max_hamming=config.max_hamming, scope=config.merge_scope)
    labels = merge.merge_superpixels(sp, codes, policy)
    if intermediates is not None:
        intermediates.update({"superpixels": sp, "binary_map": bm, "codes": codes})
    return tensor_io.relabel(labels).astype(np.int32)
