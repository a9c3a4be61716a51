"""Frechet distance between Gaussians fitted to deep-feature embeddings.

Includes the binary embedding file format (`EMB1`), Gaussian fitting with
an unbiased covariance, a PSD matrix square root via symmetric
eigendecomposition, and the fraction-of-baseline normalization used to
compare scores across network depths.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEPTHS = (64, 192, 768, 2048)

MAGIC = b"EMB1"


@dataclass(frozen=True)
class EmbeddingSet:
    """N x D matrix of deep-feature activations at a named network depth."""

    depth_label: int
    data: np.ndarray  # (n, dim) float64 in memory; float32 on disk

    def __post_init__(self):
        if self.depth_label not in DEPTHS:
            raise ValueError(f"depth_label must be one of {DEPTHS}")
        if self.data.ndim != 2:
            raise ValueError("embedding data must be 2-D")
        if self.data.shape[1] != self.depth_label:
            raise ValueError(
                f"dim {self.data.shape[1]} does not match depth {self.depth_label}")
        if self.data.shape[0] < 2:
            raise ValueError("need at least 2 embedding rows")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("embedding data contains non-finite values")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GaussianFit:
    mean: np.ndarray  # (dim,)
    cov: np.ndarray  # (dim, dim), symmetric

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class FrechetResult:
    value: float
    regularized: bool  # True when the eps fallback was applied

    def __float__(self) -> float:
        return self.value


def write_embeddings(
    path: str | Path,
    data: np.ndarray,
    depth_label: int,
    source_collection: str = "",
    extractor_id: str = "",
) -> None:
    """Write the EMB1 binary format plus its JSON sidecar.

    Layout: magic `EMB1`, little-endian u32 n, u32 dim, then n*dim IEEE-754
    float32 little-endian values, row-major.
    """
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("embedding data must be 2-D")
    n, dim = arr.shape
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, dim))
        fh.write(arr.tobytes())
    sidecar = {
        "depth_label": depth_label,
        "source_collection": source_collection,
        "extractor_id": extractor_id,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n")


def read_embeddings(path: str | Path) -> tuple[np.ndarray, dict]:
    """Read an EMB1 file; returns (float32 array, sidecar metadata).

    Rejects wrong magic bytes and truncated payloads. A missing sidecar
    yields empty metadata.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise ValueError(f"{path}: not an EMB1 embedding file")
    n, dim = struct.unpack_from("<II", blob, 4)
    expected = 12 + 4 * n * dim
    if len(blob) != expected:
        raise ValueError(f"{path}: truncated or oversized payload "
                         f"({len(blob)} bytes, expected {expected})")
    data = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=12).reshape(n, dim)
    sidecar_path = path.with_suffix(path.suffix + ".json")
    meta = json.loads(sidecar_path.read_text()) if sidecar_path.exists() else {}
    return data.copy(), meta


def load_embedding_set(path: str | Path) -> EmbeddingSet:
    data, meta = read_embeddings(path)
    depth = int(meta.get("depth_label", data.shape[1]))
    return EmbeddingSet(depth_label=depth, data=data.astype(np.float64))


def fit_gaussian(data: np.ndarray | EmbeddingSet) -> GaussianFit:
    """Column means and unbiased (n-1) sample covariance, symmetrized."""
    if isinstance(data, EmbeddingSet):
        data = data.data
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a 2-D array with at least 2 rows")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in embedding data")
    n, dim = x.shape
    if n < dim:
        warnings.warn(f"n={n} < dim={dim}: covariance is singular", stacklevel=2)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianFit(mean=mean, cov=cov)


def sqrtm_psd(m: np.ndarray, sym_tol: float = 1e-8) -> np.ndarray:
    """Square root of a (numerically) PSD symmetric matrix.

    Symmetric eigendecomposition with negative eigenvalues clamped to 0;
    the result is exactly symmetric.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(float(np.abs(m).max()), 1.0)
    if float(np.abs(m - m.T).max()) > sym_tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    vals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    root = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return (root + root.T) / 2.0


def _frechet_once(a: GaussianFit, b: GaussianFit) -> float:
    ra = sqrtm_psd(a.cov)
    inner = sqrtm_psd(ra @ b.cov @ ra)
    diff = a.mean - b.mean
    return float(diff @ diff + np.trace(a.cov) + np.trace(b.cov)
                 - 2.0 * np.trace(inner))


def frechet_distance(a: GaussianFit, b: GaussianFit, eps: float = 1e-6) -> FrechetResult:
    """Frechet distance via the symmetric-product form.

    ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2). If the inner
    square root misbehaves numerically, both covariances are regularized
    once with eps*I and the retry is flagged in the result. Tiny negative
    outputs in [-1e-6, 0) are clamped to 0.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    regularized = False
    try:
        value = _frechet_once(a, b)
    except (np.linalg.LinAlgError, ValueError):
        value = float("nan")
    if not np.isfinite(value) or value < -1e-6:
        regularized = True
        eye = eps * np.eye(a.dim)
        value = _frechet_once(
            GaussianFit(a.mean, a.cov + eye), GaussianFit(b.mean, b.cov + eye))
    if not np.isfinite(value):
        raise ArithmeticError("Frechet distance non-finite after regularization")
    if -1e-6 <= value < 0.0:
        value = 0.0
    if value < 0.0:
        raise ArithmeticError(f"Frechet distance significantly negative: {value}")
    return FrechetResult(value=value, regularized=regularized)


def normalized_fid(fid_translated_vs_target: float, fid_baseline_vs_target: float) -> float:
    """Express a score as a fraction of the untranslated baseline's score.

    The baseline is 1.0 by construction at every depth.
    """
    if fid_baseline_vs_target <= 0.0:
        raise ValueError("baseline distance must be positive")
    return fid_translated_vs_target / fid_baseline_vs_target
