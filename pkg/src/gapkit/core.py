"""Embedding containers and vector/matrix primitives.

Embeddings are plain numpy arrays of shape (n, d), one embedding per row,
held as float64 internally regardless of how files store them. All
distances are squared Euclidean; after a translation moves points off the
unit sphere, cosine similarity is no longer equivalent and is never used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DimMismatch, LabelOutOfRange, NotBijective, ZeroRow

ZERO_ROW_TOL = 1e-12
UNIT_NORM_TOL = 1e-9


def as_matrix(values, name: str = "embeddings", unit_sphere: bool = False) -> np.ndarray:
    """Validate and return an (n, d) float64 embedding matrix.

    Enforces the container invariants: 2-D shape with n >= 1 and d >= 1,
    all values finite, and (optionally) unit-norm rows within 1e-9.
    """
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise DimMismatch(f"{name}: expected a 2-D matrix, got shape {m.shape}")
    n, d = m.shape
    if n < 1 or d < 1:
        raise DimMismatch(f"{name}: need n >= 1 and d >= 1, got {n}x{d}")
    if not np.isfinite(m).all():
        raise DimMismatch(f"{name}: values must be finite (no NaN/Inf)")
    if unit_sphere:
        norms = np.linalg.norm(m, axis=1)
        if np.abs(norms - 1.0).max() > UNIT_NORM_TOL:
            raise ZeroRow(f"{name}: rows are not unit-norm within {UNIT_NORM_TOL}")
    return m


def as_vector(values, d: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimMismatch(f"{name}: expected a 1-D vector, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise DimMismatch(f"{name}: expected dimension {d}, got {v.shape[0]}")
    if not np.isfinite(v).all():
        raise DimMismatch(f"{name}: values must be finite")
    return v


@dataclass(frozen=True)
class PairedEmbeddings:
    """Two embedding sets sharing one space; rows correspond when bijective."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_matrix(self.x, "x"))
        object.__setattr__(self, "y", as_matrix(self.y, "y"))
        if self.x.shape[1] != self.y.shape[1]:
            raise DimMismatch(
                f"paired sets disagree on dimension: {self.x.shape[1]} vs {self.y.shape[1]}"
            )

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def bijective(self) -> bool:
        return self.x.shape[0] == self.y.shape[0]

    def require_bijective(self) -> "PairedEmbeddings":
        if not self.bijective:
            raise NotBijective(
                f"operation needs a bijective pairing, got {self.x.shape[0]} vs {self.y.shape[0]} rows"
            )
        return self


@dataclass(frozen=True)
class LabeledEmbeddings:
    """Embeddings with a 0-based integer class label per row."""

    embeddings: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "embeddings", as_matrix(self.embeddings))
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] != self.embeddings.shape[0]:
            raise DimMismatch("labels length must equal the number of rows")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise LabelOutOfRange(
                f"labels must lie in [0, {self.num_classes}), got range "
                f"[{labels.min()}, {labels.max()}]"
            )
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class PrincipalBasis:
    """Orthonormal principal directions of a centered embedding set.

    components is d x r (columns are directions), variances the matching
    covariance eigenvalues in descending order, total_variance the trace of
    the covariance (sum over all d eigenvalues), mean the row mean that was
    subtracted before decomposition.
    """

    components: np.ndarray
    variances: np.ndarray
    total_variance: float
    mean: np.ndarray

    @property
    def rank(self) -> int:
        return self.components.shape[1]


def normalize_rows(m: np.ndarray) -> np.ndarray:
    """Scale every row to unit norm, preserving direction."""
    m = as_matrix(m)
    norms = np.linalg.norm(m, axis=1)
    if norms.min() <= ZERO_ROW_TOL:
        bad = int(np.argmin(norms))
        raise ZeroRow(f"row {bad} has norm {norms[bad]:.3e} <= {ZERO_ROW_TOL}")
    return m / norms[:, None]


def modality_mean(m: np.ndarray) -> np.ndarray:
    """Arithmetic mean of the rows."""
    return as_matrix(m).mean(axis=0)


def pairwise_sq_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All squared Euclidean distances; entry (i, j) = ||a_i - b_j||^2.

    Computed as ||a||^2 + ||b||^2 - 2 a.b with a clamp at zero, which is
    accurate enough at desk scale and one matmul instead of an n^2 loop.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise DimMismatch(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.maximum(sq, 0.0)


def nearest_neighbor(query: np.ndarray, candidates: np.ndarray) -> int:
    """Index of the row closest to query in squared Euclidean distance.

    Ties break to the lowest index so repeated evaluations are reproducible.
    """
    candidates = as_matrix(candidates, "candidates")
    query = as_vector(query, candidates.shape[1], "query")
    diff = candidates - query[None, :]
    return int(np.argmin((diff * diff).sum(axis=1)))


def nearest_neighbors(queries: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Vectorized nearest_neighbor over many queries; same tie rule."""
    return np.argmin(pairwise_sq_dist(queries, candidates), axis=1)


def principal_components(
    m: np.ndarray, rank_tol: float = 0.0, min_rank: int = 0
) -> PrincipalBasis:
    """Principal directions of the rows via SVD of the centered matrix.

    Eigenvalues are those of the empirical covariance (1/n)* X_c^T X_c.
    Components whose variance fraction is <= rank_tol of the total are
    dropped. Sign convention: the largest-magnitude coordinate of each
    component is positive.
    """
    m = as_matrix(m)
    n, d = m.shape
    if n < 2:
        raise DegenerateInput("principal_components needs at least 2 rows")
    mean = m.mean(axis=0)
    centered = m - mean
    # thin SVD: centered = U diag(s) Vt, covariance eigenvalues s^2 / n
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variances = (s * s) / n
    total = float(variances.sum())
    if total > 0.0:
        keep = variances > rank_tol * total
    else:
        keep = np.zeros_like(variances, dtype=bool)
    keep &= np.arange(len(variances)) < min(n - 1, d)
    comps = vt[keep].T
    variances = variances[keep]
    # fix signs deterministically
    if comps.size:
        lead = np.argmax(np.abs(comps), axis=0)
        signs = np.sign(comps[lead, np.arange(comps.shape[1])])
        signs[signs == 0] = 1.0
        comps = comps * signs[None, :]
    if comps.shape[1] < min_rank:
        raise DegenerateInput(
            f"requested rank >= {min_rank} but input supports only {comps.shape[1]}"
        )
    return PrincipalBasis(components=comps, variances=variances, total_variance=total, mean=mean)


def project_out_subspace(v: np.ndarray, basis: PrincipalBasis) -> np.ndarray:
    """Remove from v its component inside the basis span: v - V V^T v."""
    comps = basis.components
    v = as_vector(v, comps.shape[0], "v")
    if basis.rank == 0:
        return v.copy()
    return v - comps @ (comps.T @ v)
