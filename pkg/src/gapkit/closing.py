"""Post-processing gap closure by translation along an orthogonal direction.

The closing direction is the global gap projected onto the orthogonal
complement of the retrieved modality's principal subspace. Translating the
retrieved set along that direction shifts every query-to-candidate distance
by the same constant, so exact nearest neighbors are preserved while the
gap, and with it the noise sensitivity, shrinks.

Translated embeddings are deliberately not re-normalized to the sphere:
renormalizing would undo the translation, and all downstream retrieval here
is squared-Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PairedEmbeddings, as_matrix, as_vector, principal_components
from .errors import BadEpsilon, BadModel, ConfigError
from .gap import global_gap

# variance fractions at or below this are numerical noise, never projected
RANK_FLOOR = 1e-12

DEFAULT_EPSILON = 0.05
DEFAULT_LAMBDA_GRID = np.round(np.arange(0.0, 1.5001, 0.05), 10)


@dataclass(frozen=True)
class ClosingPlan:
    """A gap-closing prescription.

    direction is the projected gap g'; lam the closing fraction (1 means
    the moved modality's mean matches the other mean along g'); moved the
    modality that is translated (the retrieved one); epsilon the
    variance-fraction threshold used to build direction (0 = exact
    algorithm); residual_in_subspace_norm = ||g - g'||, the part of the gap
    that lives inside the retrieved subspace and is left alone.
    """

    direction: np.ndarray
    lam: float
    moved: str
    epsilon: float
    residual_in_subspace_norm: float

    def __post_init__(self):
        if self.moved not in ("x", "y"):
            raise ConfigError(f"moved must be 'x' or 'y', got {self.moved!r}")


def exact_orthogonal_direction(gap: np.ndarray, retrieved: np.ndarray) -> np.ndarray:
    """Project the gap onto the orthogonal complement of the retrieved set.

    g' = g - V V^T g with V all principal components carrying more than a
    numerical-noise fraction of the variance. The result is orthogonal to
    every centered row of retrieved.
    """
    retrieved = as_matrix(retrieved, "retrieved")
    gap = as_vector(gap, retrieved.shape[1], "gap")
    basis = principal_components(retrieved, rank_tol=RANK_FLOOR)
    comps = basis.components
    if basis.rank == 0:
        return gap.copy()
    return gap - comps @ (comps.T @ gap)


def approx_orthogonal_direction(
    gap: np.ndarray, retrieved: np.ndarray, epsilon: float
) -> np.ndarray:
    """Project the gap out of only the high-variance components.

    Components whose explained-variance fraction exceeds epsilon are
    projected away; low-variance directions are kept, trading a little
    retrieval drift for a larger closable gap. epsilon = 0 reproduces the
    exact algorithm; epsilon >= the largest variance fraction returns the
    gap unchanged.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise BadEpsilon(f"epsilon must lie in [0, 1], got {epsilon}")
    retrieved = as_matrix(retrieved, "retrieved")
    gap = as_vector(gap, retrieved.shape[1], "gap")
    basis = principal_components(retrieved, rank_tol=RANK_FLOOR)
    if basis.rank == 0 or basis.total_variance == 0.0:
        return gap.copy()
    fractions = basis.variances / basis.total_variance
    keep = fractions > max(epsilon, RANK_FLOOR)
    comps = basis.components[:, keep]
    if comps.shape[1] == 0:
        return gap.copy()
    return gap - comps @ (comps.T @ gap)


def make_closing_plan(
    pairs: PairedEmbeddings,
    moved: str = "x",
    epsilon: float = DEFAULT_EPSILON,
    lam: float = 1.0,
) -> ClosingPlan:
    """Build the plan for these pairs: direction from the moved modality's PCA.

    The default epsilon keeps components explaining under 5% of the variance
    out of the projection, the usual robustness/accuracy tradeoff point; pass
    epsilon=0 for the exact algorithm.
    """
    gap = global_gap(pairs)
    retrieved = pairs.x if moved == "x" else pairs.y
    if retrieved.shape[0] >= 2:
        direction = approx_orthogonal_direction(gap, retrieved, epsilon)
    else:
        # single row spans nothing, the whole gap is already orthogonal
        direction = gap.copy()
    return ClosingPlan(
        direction=direction,
        lam=float(lam),
        moved=moved,
        epsilon=float(epsilon),
        residual_in_subspace_norm=float(np.linalg.norm(gap - direction)),
    )


def apply_plan(pairs: PairedEmbeddings, plan: ClosingPlan) -> PairedEmbeddings:
    """Translate the moved modality toward the other along the plan direction.

    The translation closes fraction lam of the gap's component along the
    plan direction: at lam = 1 the translated mean matches the other mean
    along that direction. The other modality is untouched; nothing is
    re-normalized.
    """
    direction = as_vector(plan.direction, pairs.d, "direction")
    norm = np.linalg.norm(direction)
    if norm == 0.0 or plan.lam == 0.0:
        return PairedEmbeddings(pairs.x.copy(), pairs.y.copy())
    unit = direction / norm
    step = plan.lam * float(global_gap(pairs) @ unit) * unit
    if plan.moved == "x":
        return PairedEmbeddings(pairs.x + step, pairs.y.copy())
    return PairedEmbeddings(pairs.x.copy(), pairs.y - step)


def quantization_aware_lambda(
    pairs: PairedEmbeddings,
    plan_direction: np.ndarray,
    quantizer,
    grid=DEFAULT_LAMBDA_GRID,
    moved: str = "x",
) -> float:
    """Pick the grid lambda whose *quantized* means end up closest.

    Quantization noise need not have zero mean, so the gap minimized in the
    raw space is not necessarily minimal after quantization; this searches
    the grid directly on the quantized gap norm. Ties go to the smallest
    lambda.
    """
    from .robustness import quantize_matrix  # local import, avoids a cycle

    if quantizer.kind != "quantize":
        raise BadModel(f"expected a quantize noise model, got {quantizer.kind!r}")
    grid = [float(g) for g in grid]
    if not grid:
        raise ConfigError("lambda grid must be non-empty")
    best_lam = grid[0]
    best_gap = None
    for lam in grid:
        plan = ClosingPlan(
            direction=plan_direction,
            lam=lam,
            moved=moved,
            epsilon=0.0,
            residual_in_subspace_norm=0.0,
        )
        closed = apply_plan(pairs, plan)
        qx = quantize_matrix(closed.x, quantizer.levels, quantizer.lo, quantizer.hi)
        qy = quantize_matrix(closed.y, quantizer.levels, quantizer.lo, quantizer.hi)
        gap_norm = float(np.linalg.norm(qy.mean(axis=0) - qx.mean(axis=0)))
        if best_gap is None or gap_norm < best_gap:
            best_gap = gap_norm
            best_lam = lam
    return best_lam
