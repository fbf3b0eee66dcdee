"""Gap vectors, orthogonality diagnostics, and the noise-correlation score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PairedEmbeddings, as_matrix
from .errors import DimMismatch, ZeroCovariance, ZeroGap

ZERO_GAP_TOL = 1e-12
ZERO_DEV_TOL = 1e-12


@dataclass(frozen=True)
class GapReport:
    """Everything needed to judge how separated and how orthogonal two sets are.

    Cosines of zero-deviation rows are 0 by convention rather than NaN, so
    degenerate fixtures do not poison aggregate statistics. local_gap_norms
    is None unless the pairing is bijective.
    """

    global_gap: np.ndarray
    gap_norm: float
    local_gap_norms: np.ndarray | None
    cos_x: np.ndarray
    cos_y: np.ndarray
    within_x: np.ndarray
    within_y: np.ndarray
    cross_mean_dist: float

    @property
    def mean_abs_cos(self) -> float:
        return float(np.concatenate([np.abs(self.cos_x), np.abs(self.cos_y)]).mean())


@dataclass(frozen=True)
class NoiseCorrelationScore:
    """Off-diagonal mass of the noise covariance relative to its total."""

    d_c: float
    c_frobenius: float


def global_gap(pairs: PairedEmbeddings) -> np.ndarray:
    """The vector between the modality means, mu_y - mu_x.

    Defined for any two sets sharing a space; no pairing required.
    """
    return pairs.y.mean(axis=0) - pairs.x.mean(axis=0)


def local_gaps(pairs: PairedEmbeddings) -> np.ndarray:
    """Per-pair difference x_i - y_i; rows average to -global_gap."""
    pairs.require_bijective()
    return pairs.x - pairs.y


def _gap_cosines(deviations: np.ndarray, unit_gap: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(deviations, axis=1)
    cos = np.zeros(deviations.shape[0])
    ok = norms > ZERO_DEV_TOL
    cos[ok] = (deviations[ok] @ unit_gap) / norms[ok]
    return np.clip(cos, -1.0, 1.0)


def orthogonality_report(pairs: PairedEmbeddings) -> GapReport:
    """Per-row angles against the gap plus within/cross distance summaries."""
    gap = global_gap(pairs)
    gap_norm = float(np.linalg.norm(gap))
    if gap_norm <= ZERO_GAP_TOL:
        raise ZeroGap(f"gap norm {gap_norm:.3e} is too small for cosines")
    unit = gap / gap_norm
    dev_x = pairs.x - pairs.x.mean(axis=0)
    dev_y = pairs.y - pairs.y.mean(axis=0)
    local_norms = None
    if pairs.bijective:
        local_norms = np.linalg.norm(pairs.x - pairs.y, axis=1)
    return GapReport(
        global_gap=gap,
        gap_norm=gap_norm,
        local_gap_norms=local_norms,
        cos_x=_gap_cosines(dev_x, unit),
        cos_y=_gap_cosines(dev_y, unit),
        within_x=np.linalg.norm(dev_x, axis=1),
        within_y=np.linalg.norm(dev_y, axis=1),
        cross_mean_dist=gap_norm,
    )


def noise_correlation_score(clean: np.ndarray, noisy: np.ndarray) -> NoiseCorrelationScore:
    """How correlated across dimensions a perturbation is, in [0, 1].

    With M = noisy - clean and C the (population) covariance of M's rows,
    the score is ||C - diag(C)||_F / ||C||_F: 0 for dimension-wise
    independent noise, approaching 1 for fully correlated (rank-1) noise.
    """
    clean = as_matrix(clean, "clean")
    noisy = as_matrix(noisy, "noisy")
    if clean.shape != noisy.shape:
        raise DimMismatch(f"shape mismatch: {clean.shape} vs {noisy.shape}")
    m = noisy - clean
    centered = m - m.mean(axis=0, keepdims=True)
    # rounding in noisy - clean leaves ~1 ulp residue on a constant shift;
    # treat anything that small, relative to the raw noise, as identically zero
    if np.linalg.norm(centered) <= 1e-12 * max(1.0, float(np.linalg.norm(m))):
        raise ZeroCovariance("centered noise matrix is identically zero")
    c = centered.T @ centered
    c_fro = float(np.linalg.norm(c))
    off = c - np.diag(np.diag(c))
    return NoiseCorrelationScore(d_c=float(np.linalg.norm(off) / c_fro), c_frobenius=c_fro)
