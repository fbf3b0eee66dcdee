"""Noise models, the empirical robustness estimator, and lambda sweeps.

Robustness is the fraction of (query, noise-sample) pairs whose cross-modal
nearest neighbor survives perturbing the retrieved modality. Noise streams
are keyed by (seed, sample_index) so that the same realizations can be
reused across every lambda in a sweep (common random numbers), which is
what makes small paired comparisons statistically sharp.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .closing import ClosingPlan, apply_plan
from .core import LabeledEmbeddings, PairedEmbeddings, as_matrix, as_vector, nearest_neighbors
from .errors import BadModel, BadRange, ConfigError, DimMismatch, LabelOutOfRange
from .gap import global_gap

# SeedSequence stream tag for noise draws; modality init uses streams 0 and 1
NOISE_STREAM = 2


@dataclass(frozen=True)
class NoiseModel:
    """Tagged description of a perturbation of the retrieved modality.

    For the zero-mean i.i.d. kinds the per-coordinate variance is sigma^2
    exactly: uniform half-width sigma*sqrt(3), Laplace scale sigma/sqrt(2),
    Rademacher magnitude sigma. rank1_shift draws one unit direction per
    sample and a N(0, sigma^2) scale per row, giving fully correlated
    dimensions. quantize is a deterministic map, handled by quantize_matrix.
    """

    kind: str
    sigma: float = 0.0
    levels: int = 0
    lo: float = -3.0
    hi: float = 3.0

    _IID_KINDS = ("gaussian", "uniform", "laplace", "rademacher")

    def __post_init__(self):
        if self.kind in self._IID_KINDS or self.kind == "rank1_shift":
            if self.sigma < 0:
                raise BadModel(f"sigma must be >= 0, got {self.sigma}")
        elif self.kind == "quantize":
            if self.levels < 2:
                raise BadRange(f"levels must be >= 2, got {self.levels}")
            if not self.lo < self.hi:
                raise BadRange(f"need lo < hi, got [{self.lo}, {self.hi}]")
        else:
            raise BadModel(f"unknown noise model {self.kind!r}")

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseModel":
        return cls(kind="gaussian", sigma=sigma)

    @classmethod
    def uniform(cls, sigma: float) -> "NoiseModel":
        return cls(kind="uniform", sigma=sigma)

    @classmethod
    def laplace(cls, sigma: float) -> "NoiseModel":
        return cls(kind="laplace", sigma=sigma)

    @classmethod
    def rademacher(cls, sigma: float) -> "NoiseModel":
        return cls(kind="rademacher", sigma=sigma)

    @classmethod
    def rank1_shift(cls, sigma: float) -> "NoiseModel":
        return cls(kind="rank1_shift", sigma=sigma)

    @classmethod
    def quantize(cls, levels: int, lo: float = -3.0, hi: float = 3.0) -> "NoiseModel":
        return cls(kind="quantize", levels=levels, lo=lo, hi=hi)


@dataclass(frozen=True)
class RobustnessCurve:
    """One row per closing fraction; accuracy columns only when labels exist."""

    lambdas: np.ndarray
    gap_norm_after: np.ndarray
    robustness: np.ndarray
    clean_accuracy: np.ndarray | None
    noisy_accuracy: np.ndarray | None


def _rng(seed: int, sample_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(NOISE_STREAM, sample_index))
    return np.random.Generator(np.random.PCG64(ss))


def sample_noise(model: NoiseModel, shape: tuple, seed: int, sample_index: int) -> np.ndarray:
    """One deterministic noise realization for the given (seed, sample_index)."""
    if model.kind == "quantize":
        raise BadModel("quantize is a deterministic map; use quantize_matrix")
    n, d = shape
    rng = _rng(seed, sample_index)
    sigma = model.sigma
    if model.kind == "gaussian":
        return rng.normal(0.0, sigma, size=(n, d)) if sigma > 0 else np.zeros((n, d))
    if model.kind == "uniform":
        half = sigma * np.sqrt(3.0)
        return rng.uniform(-half, half, size=(n, d))
    if model.kind == "laplace":
        scale = sigma / np.sqrt(2.0)
        return rng.laplace(0.0, scale, size=(n, d)) if sigma > 0 else np.zeros((n, d))
    if model.kind == "rademacher":
        return sigma * (2.0 * rng.integers(0, 2, size=(n, d)) - 1.0)
    if model.kind == "rank1_shift":
        direction = rng.normal(size=d)
        norm = np.linalg.norm(direction)
        if norm == 0.0:  # astronomically unlikely, but keep the draw defined
            direction = np.zeros(d)
            direction[0] = 1.0
        else:
            direction = direction / norm
        scales = rng.normal(0.0, sigma, size=n) if sigma > 0 else np.zeros(n)
        return scales[:, None] * direction[None, :]
    raise BadModel(f"unknown noise model {model.kind!r}")


def quantize_matrix(m: np.ndarray, levels: int, lo: float, hi: float) -> np.ndarray:
    """Clamp to [lo, hi] and snap to the nearest of `levels` uniform levels.

    Endpoints are included among the levels; exact midpoints snap to the
    lower level so the map is deterministic.
    """
    if levels < 2:
        raise BadRange(f"levels must be >= 2, got {levels}")
    if not lo < hi:
        raise BadRange(f"need lo < hi, got [{lo}, {hi}]")
    m = as_matrix(m)
    step = (hi - lo) / (levels - 1)
    clipped = np.clip(m, lo, hi)
    idx = np.ceil((clipped - lo) / step - 0.5)
    idx = np.clip(idx, 0, levels - 1)
    return lo + idx * step


def _perturbed_nn(
    retrieved: np.ndarray,
    queries: np.ndarray,
    model: NoiseModel,
    k_samples: int,
    seed: int,
    noise: Sequence[np.ndarray] | None = None,
):
    """Yield NN index arrays for each perturbed copy of the retrieved set."""
    if model.kind == "quantize":
        qr = quantize_matrix(retrieved, model.levels, model.lo, model.hi)
        qq = quantize_matrix(queries, model.levels, model.lo, model.hi)
        yield nearest_neighbors(qq, qr)
        return
    for k in range(k_samples):
        eps = noise[k] if noise is not None else sample_noise(model, retrieved.shape, seed, k)
        yield nearest_neighbors(queries, retrieved + eps)


def empirical_robustness(
    retrieved: np.ndarray,
    queries: np.ndarray,
    model: NoiseModel,
    k_samples: int = 1,
    seed: int = 0,
) -> float:
    """Fraction of (query, sample) pairs whose nearest neighbor is unchanged.

    For quantize the comparison is NN(quantized query, quantized set)
    against the clean NN, with a single deterministic sample.
    """
    retrieved = as_matrix(retrieved, "retrieved")
    queries = as_matrix(queries, "queries")
    if retrieved.shape[1] != queries.shape[1]:
        raise DimMismatch(f"dimension mismatch: {retrieved.shape[1]} vs {queries.shape[1]}")
    if k_samples < 1:
        raise ConfigError(f"k_samples must be >= 1, got {k_samples}")
    baseline = nearest_neighbors(queries, retrieved)
    hits = 0
    total = 0
    for nn in _perturbed_nn(retrieved, queries, model, k_samples, seed):
        hits += int((nn == baseline).sum())
        total += baseline.size
    return hits / total


def zero_shot_accuracy(data: LabeledEmbeddings, class_embeddings: np.ndarray) -> float:
    """Fraction of rows whose nearest class embedding matches their label."""
    class_embeddings = as_matrix(class_embeddings, "class_embeddings")
    if class_embeddings.shape[0] != data.num_classes:
        raise LabelOutOfRange(
            f"{data.num_classes} classes declared but {class_embeddings.shape[0]} class rows given"
        )
    pred = nearest_neighbors(data.embeddings, class_embeddings)
    return float((pred == data.labels).mean())


def recall_at_1(pairs: PairedEmbeddings) -> float:
    """Fraction of queries y_i whose nearest row in X is their own pair x_i."""
    pairs.require_bijective()
    pred = nearest_neighbors(pairs.y, pairs.x)
    return float((pred == np.arange(pairs.y.shape[0])).mean())


def robustness_curve(
    pairs: PairedEmbeddings,
    plan_direction: np.ndarray,
    lambdas: Sequence[float],
    model: NoiseModel,
    k_samples: int = 1,
    seed: int = 0,
    labels: np.ndarray | None = None,
) -> RobustnessCurve:
    """Sweep the closing fraction and measure robustness at each point.

    pairs.x is the retrieved (and moved) modality, pairs.y the queries.
    The identical noise realizations are reused at every lambda; with
    labels given, pairs.x rows are class embeddings and clean/noisy
    accuracy columns are filled in (clean accuracy never sees noise).
    """
    plan_direction = as_vector(plan_direction, pairs.d, "plan_direction")
    lambdas = [float(l) for l in lambdas]
    if not lambdas:
        raise ConfigError("lambda grid must be non-empty")
    if model.kind == "quantize":
        k_samples = 1
        noise = None
    else:
        if k_samples < 1:
            raise ConfigError(f"k_samples must be >= 1, got {k_samples}")
        noise = [sample_noise(model, pairs.x.shape, seed, k) for k in range(k_samples)]

    labeled = None
    if labels is not None:
        labeled = LabeledEmbeddings(pairs.y, labels, num_classes=pairs.x.shape[0])

    gap_after = np.empty(len(lambdas))
    robustness = np.empty(len(lambdas))
    clean_acc = np.empty(len(lambdas)) if labeled is not None else None
    noisy_acc = np.empty(len(lambdas)) if labeled is not None else None

    for j, lam in enumerate(lambdas):
        plan = ClosingPlan(
            direction=plan_direction,
            lam=lam,
            moved="x",
            epsilon=0.0,
            residual_in_subspace_norm=0.0,
        )
        closed = apply_plan(pairs, plan)
        gap_after[j] = np.linalg.norm(global_gap(closed))
        baseline = nearest_neighbors(closed.y, closed.x)
        hits = 0
        total = 0
        acc_hits = 0
        for nn in _perturbed_nn(closed.x, closed.y, model, k_samples, seed, noise):
            hits += int((nn == baseline).sum())
            total += baseline.size
            if labeled is not None:
                acc_hits += int((nn == labeled.labels).sum())
        robustness[j] = hits / total
        if labeled is not None:
            clean_acc[j] = float((baseline == labeled.labels).mean())
            noisy_acc[j] = acc_hits / total

    return RobustnessCurve(
        lambdas=np.asarray(lambdas),
        gap_norm_after=gap_after,
        robustness=robustness,
        clean_accuracy=clean_acc,
        noisy_accuracy=noisy_acc,
    )
