"""Bundled synthetic fixtures and frozen desk-scale simulation budgets.

Everything here is deterministic given its seed. The simulation configs
replace the original 1e7-iteration budgets with desk-scale ones that were
derived once by running the dynamics and are frozen; tests and the
acceptance suite consume these instead of re-deriving them.
"""

from __future__ import annotations

import numpy as np

from .core import PairedEmbeddings
from .simulate import DimCollapse, GaussianClusters, InfoImbalance, SimulationConfig


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def standard_robustness_fixture(
    seed: int = 0,
    n_queries: int = 500,
    d: int = 32,
    gap: float = 1.0,
    within_std: float = 0.1,
    class_sep: float = 0.4,
) -> tuple[PairedEmbeddings, np.ndarray]:
    """Two class embeddings and labeled queries with an exactly orthogonal gap.

    The classes sit at +/- class_sep/2 along a random unit direction inside
    the span (first d-1 coordinates), on top of a random off-grid base
    point; queries scatter around their class with isotropic within_std.
    The gap lives entirely in the last coordinate, exactly orthogonal to
    both modalities' spans by construction. Returns (pairs, labels) with
    pairs.x the class/retrieved side and pairs.y the queries.
    """
    rng = _rng(seed)
    u = rng.standard_normal(d - 1)
    u /= np.linalg.norm(u)
    base = rng.uniform(-1.2, 1.2, size=d - 1)
    x = np.zeros((2, d))
    x[0, : d - 1] = base + (class_sep / 2) * u
    x[1, : d - 1] = base - (class_sep / 2) * u
    labels = np.repeat([0, 1], n_queries // 2)
    sign = np.where(labels == 0, 1.0, -1.0)
    y = np.zeros((len(labels), d))
    y[:, : d - 1] = base + sign[:, None] * (class_sep / 2) * u
    y[:, : d - 1] += within_std * rng.standard_normal((len(labels), d - 1))
    y[:, d - 1] = gap
    return PairedEmbeddings(x, y), labels


def orthogonal_gap_fixture(
    seed, n_retrieved: int = 6, n_queries: int = 40, d: int = 8, gap: float = 1.0
) -> PairedEmbeddings:
    """Random data in a shared span with the gap orthogonal to it."""
    rng = _rng(seed)
    x = np.zeros((n_retrieved, d))
    y = np.zeros((n_queries, d))
    x[:, : d - 1] = rng.standard_normal((n_retrieved, d - 1))
    y[:, : d - 1] = rng.standard_normal((n_queries, d - 1))
    y[:, d - 1] = gap
    return PairedEmbeddings(x, y)


def doubly_stochastic_fixture(n: int = 8, radius: float = 1.0, offset: float = 1.0) -> PairedEmbeddings:
    """Regular n-gon with Y a pure out-of-plane copy of X.

    The cyclic symmetry gives the kernel matrix equal row sums, so both
    soft-assignment matrices are doubly stochastic exactly; e3 has zero
    variance in both modalities. Gradient descent preserves both facts,
    which is what pins the gap (gap-preservation fixture).
    """
    theta = 2.0 * np.pi * np.arange(n) / n
    x = np.stack([radius * np.cos(theta), radius * np.sin(theta), np.zeros(n)], axis=1)
    y = x.copy()
    y[:, 2] = offset
    return PairedEmbeddings(x, y)


def _e1_means(d: int, scale: float = 1.0) -> tuple[tuple, tuple]:
    mu = [0.0] * d
    mu[0] = scale
    mu2 = [0.0] * d
    mu2[0] = -scale
    return tuple(mu), tuple(mu2)


def variance_shrinkage_config() -> SimulationConfig:
    """Tight clusters, unit gap, unconstrained; variance along the initial
    gap collapses within 100 iterations."""
    return SimulationConfig(
        n_per_modality=100,
        d=3,
        init=GaussianClusters((0.0, 0.5, 0.0), (0.0, -0.5, 0.0), 0.01),
        tau=0.07,
        lr=0.01,
        iterations=100,
        sphere_constrained=False,
        log_every=100,
        seed=7,
    )


def sphere_endpoint_config(iterations: int = 50000) -> SimulationConfig:
    """Sphere-constrained clusters that converge to a persistent orthogonal gap."""
    mu_x, mu_y = _e1_means(8)
    return SimulationConfig(
        n_per_modality=100,
        d=8,
        init=GaussianClusters(mu_x, mu_y, 0.01),
        tau=0.07,
        lr=0.01,
        iterations=iterations,
        sphere_constrained=True,
        log_every=10000,
        seed=11,
    )


def info_imbalance_config(iterations: int = 50000) -> SimulationConfig:
    return SimulationConfig(
        n_per_modality=2,
        d=2,
        init=InfoImbalance(),
        tau=1.0,
        lr=0.01,
        iterations=iterations,
        sphere_constrained=False,
        log_every=10000,
        seed=3,
    )


def dim_collapse_config(iterations: int = 15000) -> SimulationConfig:
    return SimulationConfig(
        n_per_modality=40,
        d=2,
        init=DimCollapse(axis=0, spread=2.0),
        tau=0.5,
        lr=0.05,
        iterations=iterations,
        sphere_constrained=False,
        log_every=5000,
        seed=5,
    )


def temperature_contrast_config(iterations: int = 30000) -> SimulationConfig:
    """Shared-init sphere clusters for the high-vs-low temperature contrast.

    tau is a placeholder; temperature_sweep replaces it per run.
    """
    mu_x, mu_y = _e1_means(8)
    return SimulationConfig(
        n_per_modality=32,
        d=8,
        init=GaussianClusters(mu_x, mu_y, 0.01),
        tau=1.0,
        lr=0.05,
        iterations=iterations,
        sphere_constrained=True,
        log_every=10000,
        seed=21,
    )


def soft_assignment_trend_config(iterations: int = 2000) -> SimulationConfig:
    """Wide isotropic clusters whose S_i dispersion collapses during training."""
    return SimulationConfig(
        n_per_modality=100,
        d=2,
        init=GaussianClusters((0.0, 0.5), (0.0, -0.5), 0.1),
        tau=0.07,
        lr=0.01,
        iterations=iterations,
        sphere_constrained=False,
        log_every=200,
        seed=4,
    )
