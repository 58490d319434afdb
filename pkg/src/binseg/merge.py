"""Fuse superpixels whose binary codes agree into final segments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch
from .superpixel import SuperpixelSet
from .tensor_io import relabel

SCOPE_ADJACENT = "adjacent"
SCOPE_GLOBAL = "global"


@dataclass
class MergePolicy:
    max_hamming: int = 0
    scope: str = SCOPE_ADJACENT

    def validate(self, bits: int) -> None:
        if not 0 <= self.max_hamming <= bits:
            raise ValueError(f"max_hamming must be in [0, {bits}], got {self.max_hamming}")
        if self.scope not in (SCOPE_ADJACENT, SCOPE_GLOBAL):
            raise ValueError(f"unknown scope {self.scope!r}")


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    """Number of differing bits between two equal-length codes."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise LengthMismatch(f"code lengths differ: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def merge_superpixels(sp: SuperpixelSet, codes: np.ndarray, policy: MergePolicy | None = None) -> np.ndarray:
    """Union superpixels whose codes are within ``max_hamming`` bits.

    ``adjacent`` scope only unions pairs sharing a border; ``global`` unions
    any pair. Union-find takes the transitive closure, so chains of pairwise
    similar codes land in one segment. Returns a contiguous int32 label map.
    """
    if policy is None:
        policy = MergePolicy()
    codes = np.asarray(codes, dtype=bool)
    if codes.shape[0] != sp.count:
        raise LengthMismatch(f"{codes.shape[0]} codes for {sp.count} superpixels")
    policy.validate(codes.shape[1] if codes.ndim == 2 else 0)

    parent = list(range(sp.count))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    if policy.scope == SCOPE_ADJACENT:
        for a, b in sorted(sp.adjacency):
            if hamming(codes[a], codes[b]) <= policy.max_hamming:
                union(a, b)
    else:
        if policy.max_hamming == 0:
            groups: dict[bytes, int] = {}
            for i in range(sp.count):
                key = codes[i].tobytes()
                if key in groups:
                    union(groups[key], i)
                else:
                    groups[key] = i
        else:
            dist = (codes[:, None, :] != codes[None, :, :]).sum(axis=2)
            for a, b in zip(*np.nonzero(np.triu(dist <= policy.max_hamming, k=1))):
                union(int(a), int(b))

    root = np.array([find(i) for i in range(sp.count)], dtype=np.int64)
    return relabel(root[sp.labels]).astype(np.int32)
