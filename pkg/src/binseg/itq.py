"""Binary hashing of high-dimensional features: PCA plus a learned rotation.

Training centers the data, projects it onto the top-b principal directions,
then alternates two closed-form updates to find an orthogonal b x b rotation
R minimizing the quantization loss

    Q(B, R) = ||B - V R||_F^2,   B = sign(V R)

where V is the projected data. Codes are the signs of the rotated
projections, with sign(0) = +1 throughout.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    BadShape,
    DimMismatch,
    IoFailure,
    RankDeficient,
    TruncatedPayload,
    UnsupportedVersion,
)
from .tensor_io import tensor_bytes, tensor_from_bytes

DEFAULT_ITERS = 50
MODEL_MAGIC = b"BHSH"
MODEL_VERSION = 1

# eigenvalues at or below this fraction of the largest count as zero variance
_RANK_RTOL = 1e-9


@dataclass(frozen=True)
class HashModel:
    """Learned hash: x -> sign((x - mean) @ projection @ rotation)."""

    mean: np.ndarray        # (d,)
    projection: np.ndarray  # (d, b), orthonormal columns
    rotation: np.ndarray    # (b, b), orthogonal
    normalize: bool = False  # L2-normalize inputs before centering
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def bits(self) -> int:
        return self.projection.shape[1]


def fit_pca(x: np.ndarray, b: int):
    """Column means and the top-``b`` orthonormal covariance eigenvectors.

    Columns are ordered by descending eigenvalue and signed so that each
    column's largest-magnitude entry is positive. Uses the n x n Gram matrix
    when d > n so wide data never needs a d x d eigensolve.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise BadShape(f"expected an (n, d) matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 2 or b < 1 or b > min(n - 1, d):
        raise BadShape(f"need n >= 2 and 1 <= b <= min(n-1, d); got n={n}, d={d}, b={b}")
    if not np.isfinite(x).all():
        raise BadShape("training data contains NaN or Inf")
    mean = x.mean(axis=0)
    xc = x - mean
    if d <= n:
        evals, vecs = _pca_direct(xc)
    else:
        evals, vecs = _pca_gram(xc)
    nonzero = evals > max(evals[0], 0.0) * _RANK_RTOL if len(evals) else evals
    if int(nonzero.sum()) < b:
        raise RankDeficient(
            f"only {int(nonzero.sum())} nonzero covariance eigenvalues, need {b}"
        )
    proj = vecs[:, :b]
    return mean, _fix_signs(proj)


def _pca_direct(xc: np.ndarray):
    """Eigendecomposition of the d x d sample covariance, descending order."""
    n = xc.shape[0]
    cov = xc.T @ xc / (n - 1)
    evals, vecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    return evals[order], vecs[:, order]


def _pca_gram(xc: np.ndarray):
    """Same spectrum via the n x n Gram matrix, mapped back to d-space."""
    n = xc.shape[0]
    gram = xc @ xc.T
    gvals, gvecs = np.linalg.eigh(gram)
    order = np.argsort(gvals)[::-1]
    gvals, gvecs = gvals[order], gvecs[:, order]
    evals = gvals / (n - 1)
    safe = np.sqrt(np.maximum(gvals, np.finfo(np.float64).tiny))
    vecs = xc.T @ (gvecs / safe)
    return evals, vecs


def _fix_signs(proj: np.ndarray) -> np.ndarray:
    proj = proj.copy()
    for j in range(proj.shape[1]):
        lead = np.argmax(np.abs(proj[:, j]))
        if proj[lead, j] < 0:
            proj[:, j] = -proj[:, j]
    return proj


def solve_procrustes(m: np.ndarray) -> np.ndarray:
    """Orthogonal R maximizing tr(R^T M), i.e. R = U V^T from M = U S V^T."""
    m = np.asarray(m, dtype=np.float64)
    u, _, vt = np.linalg.svd(m)
    return u @ vt


def _init_rotation(b: int, seed: int) -> np.ndarray:
    """Seeded random orthogonal matrix: QR of a Gaussian, sign-fixed."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((b, b))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def _sign(v: np.ndarray) -> np.ndarray:
    return np.where(v >= 0, 1.0, -1.0)


def fit_itq(v: np.ndarray, iters: int = DEFAULT_ITERS, seed: int = 0) -> np.ndarray:
    """Learn the orthogonal rotation by alternating B and R updates.

    ``iters=0`` returns the seeded random initialization untouched.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
        raise BadShape(f"expected a nonempty (n, b) matrix, got shape {v.shape}")
    if iters < 0:
        raise ValueError("iters must be >= 0")
    r = _init_rotation(v.shape[1], seed)
    for _ in range(iters):
        b = _sign(v @ r)
        r = solve_procrustes(v.T @ b)
    return r


def train_hash(x: np.ndarray, bits: int, iters: int = DEFAULT_ITERS, seed: int = 0,
               normalize: bool = False) -> HashModel:
    """Fit PCA then the rotation; returns the complete hash model."""
    x = np.asarray(x, dtype=np.float64)
    if normalize:
        x = _l2_rows(x)
    mean, proj = fit_pca(x, bits)
    v = (x - mean) @ proj
    rot = fit_itq(v, iters, seed)
    return HashModel(mean=mean, projection=proj, rotation=rot, normalize=normalize)


def _l2_rows(x: np.ndarray) -> np.ndarray:
    norms = np.sqrt((x * x).sum(axis=-1, keepdims=True))
    return np.divide(x, norms, out=x.astype(np.float64).copy(), where=norms > 0)


def project(model: HashModel, x: np.ndarray) -> np.ndarray:
    """Rotated projections for a batch of rows (n, d) -> (n, b)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise DimMismatch(f"vector dim {x.shape[-1]} != model dim {model.dim}")
    if model.normalize:
        x = _l2_rows(x)
    return (x - model.mean) @ model.projection @ model.rotation


def encode(model: HashModel, x: np.ndarray) -> np.ndarray:
    """Binary code of one d-vector as a boolean array of length bits."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise DimMismatch(f"encode takes a single vector, got shape {x.shape}")
    return project(model, x[None, :])[0] >= 0


def encode_rows(model: HashModel, x: np.ndarray) -> np.ndarray:
    """Binary codes for a batch of rows, (n, d) -> (n, bits) bool."""
    return project(model, x) >= 0


def quantization_loss(model: HashModel, x: np.ndarray) -> float:
    """||sign(VR) - VR||_F^2 over the rotated projections of ``x``."""
    v = project(model, np.atleast_2d(x))
    return float(((_sign(v) - v) ** 2).sum())


# --- model file --------------------------------------------------------------


def model_bytes(model: HashModel) -> bytes:
    """Serialize: magic, version, then mean/projection/rotation tensor records
    (float32), plus one trailing uint8 record carrying JSON metadata."""
    d, b = model.dim, model.bits
    meta = dict(model.meta)
    meta["normalize"] = model.normalize
    meta_raw = json.dumps(meta, sort_keys=True).encode()
    out = MODEL_MAGIC + struct.pack("<I", MODEL_VERSION)
    out += tensor_bytes(model.mean.astype(np.float32).reshape(1, d, 1))
    out += tensor_bytes(model.projection.astype(np.float32).reshape(d, b, 1))
    out += tensor_bytes(model.rotation.astype(np.float32).reshape(b, b, 1))
    out += tensor_bytes(np.frombuffer(meta_raw, dtype=np.uint8).reshape(1, len(meta_raw), 1))
    return out


def write_model(model: HashModel, path) -> None:
    try:
        Path(path).write_bytes(model_bytes(model))
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_model(path) -> HashModel:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if data[:4] != MODEL_MAGIC:
        raise BadMagic("not a hash model file")
    if len(data) < 8:
        raise TruncatedPayload("model header cut short")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != MODEL_VERSION:
        raise UnsupportedVersion(f"model version {version} not supported")
    mean, off = tensor_from_bytes(data, 8, allow_trailing=True)
    proj, off = tensor_from_bytes(data, off, allow_trailing=True)
    rot, off = tensor_from_bytes(data, off, allow_trailing=True)
    meta: dict = {}
    if off < len(data):
        raw, off = tensor_from_bytes(data, off, allow_trailing=True)
        meta = json.loads(raw.tobytes().decode())
    d = mean.shape[1]
    b = proj.shape[1]
    if proj.shape[0] != d or rot.shape[:2] != (b, b):
        raise BadShape(
            f"inconsistent model records: mean d={d}, projection {proj.shape[:2]}, rotation {rot.shape[:2]}"
        )
    normalize = bool(meta.pop("normalize", False))
    return HashModel(
        mean=mean.reshape(d).astype(np.float64),
        projection=proj.reshape(d, b).astype(np.float64),
        rotation=rot.reshape(b, b).astype(np.float64),
        normalize=normalize,
        meta=meta,
    )
