"""Deterministic full-batch gradient descent on raw embedding coordinates.

Reproduces the toy dynamics behind the theory: tight-cluster inits first
lose their variance along the gap, then align only in the orthogonal
directions, leaving a constant orthogonal gap; dimension-collapsed and
information-imbalanced inits instead converge fully aligned.

Determinism contract: initialization uses numpy's PCG64 bit generator
seeded by SeedSequence(entropy=seed, spawn_key=(stream,)) with stream 0
for modality X and stream 1 for modality Y. Identical configs produce
bit-identical trajectories on a given platform.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .contrastive import contrastive_loss, loss_gradient, soft_assignments, stochasticity_stats
from .core import PairedEmbeddings, normalize_rows
from .errors import BadConfig
from .gap import ZERO_GAP_TOL, global_gap, orthogonality_report


@dataclass(frozen=True)
class GaussianClusters:
    """Two isotropic Gaussian clusters, one per modality."""

    mu_x: tuple
    mu_y: tuple
    sigma: float

    kind = "gaussian_clusters"


@dataclass(frozen=True)
class DimCollapse:
    """Complete dimensional collapse: all variance in one coordinate.

    Both modalities are spread N(0, spread^2) along `axis` only, separated
    by a unit gap along coordinate (axis + 1) mod d, centered at +/- 0.5.
    Despite starting with zero variance along the gap, points near the
    center are pushed away from the other modality, the collapse breaks,
    and training converges fully aligned.
    """

    axis: int
    spread: float

    kind = "dim_collapse"


@dataclass(frozen=True)
class InfoImbalance:
    """Two x points sharing a single caption y.

    The shared caption is one parameter: init produces X with 2 rows and Y
    with a single row, and the dynamics descend the two-images-one-caption
    loss whose only minimum is full coincidence x1 = x2 = y.
    """

    kind = "info_imbalance"


@dataclass(frozen=True)
class Explicit:
    """Caller-supplied initial matrices."""

    x0: np.ndarray
    y0: np.ndarray

    kind = "explicit"


Scenario = Union[GaussianClusters, DimCollapse, InfoImbalance, Explicit]


@dataclass(frozen=True)
class SimulationConfig:
    n_per_modality: int
    d: int
    init: Scenario
    tau: float
    lr: float
    iterations: int
    sphere_constrained: bool = False
    log_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise BadConfig(f"lr must be > 0, got {self.lr}")
        if self.tau <= 0:
            raise BadConfig(f"tau must be > 0, got {self.tau}")
        if self.iterations < 1:
            raise BadConfig(f"iterations must be >= 1, got {self.iterations}")
        if self.log_every < 1:
            raise BadConfig(f"log_every must be >= 1, got {self.log_every}")
        if self.n_per_modality < 1 or self.d < 1:
            raise BadConfig("n_per_modality and d must be >= 1")
        if isinstance(self.init, InfoImbalance) and self.n_per_modality != 2:
            raise BadConfig("info_imbalance requires n_per_modality = 2")
        if isinstance(self.init, DimCollapse):
            if not 0 <= self.init.axis < self.d:
                raise BadConfig(f"dim_collapse axis {self.init.axis} outside 0..{self.d - 1}")
            if self.d < 2:
                raise BadConfig("dim_collapse needs d >= 2 to host a gap")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-logged-iteration snapshot of the quantities the theory tracks."""

    iter: int
    loss: float
    gap_norm: float
    mean_abs_cos: float
    var_along_gap_x: float
    var_along_gap_y: float
    var_along_init_gap_x: float
    var_along_init_gap_y: float
    var_s: float
    alignment_err: float


def _stream_rng(seed: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))


def init_scenario(cfg: SimulationConfig) -> PairedEmbeddings:
    """Deterministically sample the initial paired embeddings for a config.

    info_imbalance returns X with 2 rows and Y with a single shared row;
    everything else is bijective with n_per_modality rows per side.
    """
    sc = cfg.init
    rng_x = _stream_rng(cfg.seed, 0)
    rng_y = _stream_rng(cfg.seed, 1)
    n, d = cfg.n_per_modality, cfg.d

    if isinstance(sc, GaussianClusters):
        mu_x = np.asarray(sc.mu_x, dtype=np.float64)
        mu_y = np.asarray(sc.mu_y, dtype=np.float64)
        if mu_x.shape != (d,) or mu_y.shape != (d,):
            raise BadConfig(f"cluster means must have dimension {d}")
        if sc.sigma < 0:
            raise BadConfig("sigma must be >= 0")
        x = mu_x + sc.sigma * rng_x.standard_normal((n, d))
        y = mu_y + sc.sigma * rng_y.standard_normal((n, d))
    elif isinstance(sc, DimCollapse):
        gap_axis = (sc.axis + 1) % d
        x = np.zeros((n, d))
        y = np.zeros((n, d))
        x[:, sc.axis] = sc.spread * rng_x.standard_normal(n)
        y[:, sc.axis] = sc.spread * rng_y.standard_normal(n)
        x[:, gap_axis] = 0.5
        y[:, gap_axis] = -0.5
    elif isinstance(sc, InfoImbalance):
        x = 0.5 * rng_x.standard_normal((2, d))
        y = 0.5 * rng_y.standard_normal((1, d))
    elif isinstance(sc, Explicit):
        x = np.array(sc.x0, dtype=np.float64)
        y = np.array(sc.y0, dtype=np.float64)
        if x.shape != (n, d) or y.shape != (n, d):
            raise BadConfig(
                f"explicit matrices must be {n}x{d}, got {x.shape} and {y.shape}"
            )
    else:
        raise BadConfig(f"unknown scenario {sc!r}")

    pairs = PairedEmbeddings(x, y)
    if cfg.sphere_constrained:
        pairs = PairedEmbeddings(normalize_rows(pairs.x), normalize_rows(pairs.y))
    return pairs


def gd_step(
    pairs: PairedEmbeddings,
    tau: float,
    lr: float,
    sphere_constrained: bool = False,
) -> PairedEmbeddings:
    """One full-batch step: X <- X - lr dX, Y <- Y - lr dY.

    Sphere mode renormalizes rows after the plain step rather than
    projecting the gradient to the tangent space.
    """
    grad = loss_gradient(pairs, tau)
    x = pairs.x - lr * grad.dx
    y = pairs.y - lr * grad.dy
    if sphere_constrained:
        x = normalize_rows(x)
        y = normalize_rows(y)
    return PairedEmbeddings(x, y)


def _imbalance_loss_grad(x: np.ndarray, y_row: np.ndarray, tau: float):
    """Two-images-one-caption loss and gradient.

    With d_i = ||x_i - y||^2 / tau and q = softmax(-d):

        L = log 2 + d_1 + d_2 + log(e^{-d_1} + e^{-d_2})
        dL/dx_i = (1 - q_i) (2/tau) (x_i - y)
        dL/dy   = sum_i (1 - q_i) (2/tau) (y - x_i)

    Every coefficient (1 - q_i) is positive, so the only stationary point
    is x_1 = x_2 = y: information imbalance alone leaves no gap.
    """
    diff = x - y_row[None, :]
    d = (diff * diff).sum(axis=1) / tau
    m = -d.max()
    w = np.exp(-d + m)
    q = w / w.sum()
    loss = float(np.log(2.0) + d.sum() + (np.log(w.sum()) - m))
    coeff = (1.0 - q)[:, None] * (2.0 / tau)
    dx = coeff * diff
    dy = -(coeff * diff).sum(axis=0)
    return loss, dx, dy


def _imbalance_step(x, y_row, tau, lr, sphere_constrained):
    _, dx, dy = _imbalance_loss_grad(x, y_row, tau)
    x = x - lr * dx
    y_row = y_row - lr * dy
    if sphere_constrained:
        x = normalize_rows(x)
        y_row = y_row / np.linalg.norm(y_row)
    return x, y_row


def _projection_var(m: np.ndarray, unit: np.ndarray | None) -> float:
    if unit is None:
        return 0.0
    return float((m @ unit).var())


def _record(
    pairs: PairedEmbeddings,
    it: int,
    tau: float,
    init_unit: np.ndarray | None,
    loss: float,
) -> TrajectoryRecord:
    gap = global_gap(pairs)
    gap_norm = float(np.linalg.norm(gap))
    if gap_norm > ZERO_GAP_TOL:
        mean_abs_cos = orthogonality_report(pairs).mean_abs_cos
        unit = gap / gap_norm
    else:
        mean_abs_cos = 0.0
        unit = None
    stats = stochasticity_stats(soft_assignments(pairs, tau))
    return TrajectoryRecord(
        iter=it,
        loss=loss,
        gap_norm=gap_norm,
        mean_abs_cos=mean_abs_cos,
        var_along_gap_x=_projection_var(pairs.x, unit),
        var_along_gap_y=_projection_var(pairs.y, unit),
        var_along_init_gap_x=_projection_var(pairs.x, init_unit),
        var_along_init_gap_y=_projection_var(pairs.y, init_unit),
        var_s=max(stats.var_sx, stats.var_sy),
        alignment_err=float(np.linalg.norm(pairs.x - pairs.y, axis=1).mean()),
    )


def run_to_final(cfg: SimulationConfig) -> tuple[list[TrajectoryRecord], PairedEmbeddings]:
    """run_simulation plus the final embedding state."""
    pairs = init_scenario(cfg)
    imbalance = isinstance(cfg.init, InfoImbalance)
    if imbalance:
        x, y_row = pairs.x, pairs.y[0]
        view = PairedEmbeddings(x, np.vstack([y_row, y_row]))
        loss = _imbalance_loss_grad(x, y_row, cfg.tau)[0]
    else:
        view = pairs
        loss = contrastive_loss(pairs, cfg.tau)

    init_gap = global_gap(view)
    init_norm = np.linalg.norm(init_gap)
    init_unit = init_gap / init_norm if init_norm > ZERO_GAP_TOL else None

    records = [_record(view, 0, cfg.tau, init_unit, loss)]
    for it in range(1, cfg.iterations + 1):
        if imbalance:
            x, y_row = _imbalance_step(x, y_row, cfg.tau, cfg.lr, cfg.sphere_constrained)
        else:
            pairs = gd_step(pairs, cfg.tau, cfg.lr, cfg.sphere_constrained)
        if it % cfg.log_every == 0 or it == cfg.iterations:
            if imbalance:
                view = PairedEmbeddings(x, np.vstack([y_row, y_row]))
                loss = _imbalance_loss_grad(x, y_row, cfg.tau)[0]
            else:
                view = pairs
                loss = contrastive_loss(pairs, cfg.tau)
            records.append(_record(view, it, cfg.tau, init_unit, loss))
    final = PairedEmbeddings(x, y_row[None, :]) if imbalance else pairs
    return records, final


def run_simulation(cfg: SimulationConfig) -> list[TrajectoryRecord]:
    """Run the configured dynamics, logging at 0, log_every, ... and the end."""
    return run_to_final(cfg)[0]


def temperature_sweep(
    base_cfg: SimulationConfig, taus: list[float]
) -> list[tuple[float, TrajectoryRecord]]:
    """One full run per temperature from the identical (shared-seed) init."""
    out = []
    for tau in taus:
        records = run_simulation(replace(base_cfg, tau=tau))
        out.append((float(tau), records[-1]))
    return out
