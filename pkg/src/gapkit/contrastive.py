"""Multi-modal contrastive loss, soft assignments, and analytic gradient.

The affinity kernel is exp(-||x - y||^2 / tau) throughout (squared
distance, single temperature). Q^x row-normalizes the kernel matrix over
the second modality, Q^y column-normalizes it over the first; the diagonal
entries are the matched pairs. Everything here is a pure function of the
inputs, so calls are safe from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PairedEmbeddings, pairwise_sq_dist
from .errors import NonPositiveTau


@dataclass(frozen=True)
class SoftAssignment:
    """The pair of softmax matrices Q^x (row-stochastic) and Q^y (column-stochastic)."""

    qx: np.ndarray
    qy: np.ndarray
    tau: float


@dataclass(frozen=True)
class StochasticityStats:
    """Column sums of Q^x and row sums of Q^y with their dispersion.

    s_y[i] is the total soft-assignment mass y_i receives from the other
    modality; s_x[i] likewise for x_i. Both average to exactly 1 because
    each Q matrix is singly stochastic; the Q pair is doubly stochastic
    precisely when every entry of s_x and s_y equals 1.
    """

    s_x: np.ndarray
    s_y: np.ndarray
    mean_sx: float
    mean_sy: float
    var_sx: float
    var_sy: float


@dataclass(frozen=True)
class GradientPair:
    """Partial derivatives of the loss with respect to each embedding row."""

    dx: np.ndarray
    dy: np.ndarray


def _check_tau(tau: float) -> float:
    if not tau > 0:
        raise NonPositiveTau(f"temperature must be > 0, got {tau}")
    return float(tau)


def _neg_logits(pairs: PairedEmbeddings, tau: float) -> np.ndarray:
    return -pairwise_sq_dist(pairs.x, pairs.y) / tau


def soft_assignments(pairs: PairedEmbeddings, tau: float) -> SoftAssignment:
    """Compute Q^x and Q^y with max-subtraction for numerical stability.

    qx(i, j) = exp(-||x_i - y_j||^2 / tau) normalized over j;
    qy(i, j) the same normalized over i. Stable down to tau = 0.07 and
    beyond, where the raw kernel underflows.
    """
    tau = _check_tau(tau)
    pairs.require_bijective()
    logits = _neg_logits(pairs, tau)
    ex = np.exp(logits - logits.max(axis=1, keepdims=True))
    qx = ex / ex.sum(axis=1, keepdims=True)
    ey = np.exp(logits - logits.max(axis=0, keepdims=True))
    qy = ey / ey.sum(axis=0, keepdims=True)
    return SoftAssignment(qx=qx, qy=qy, tau=tau)


def contrastive_loss(pairs: PairedEmbeddings, tau: float) -> float:
    """L = -(1/N) sum_i [log qx(i,i) + log qy(i,i)], via log-softmax."""
    tau = _check_tau(tau)
    pairs.require_bijective()
    logits = _neg_logits(pairs, tau)
    mx = logits.max(axis=1, keepdims=True)
    log_qx = logits - mx - np.log(np.exp(logits - mx).sum(axis=1, keepdims=True))
    my = logits.max(axis=0, keepdims=True)
    log_qy = logits - my - np.log(np.exp(logits - my).sum(axis=0, keepdims=True))
    n = logits.shape[0]
    return float(-(np.trace(log_qx) + np.trace(log_qy)) / n)


def loss_gradient(pairs: PairedEmbeddings, tau: float) -> GradientPair:
    """Analytic gradient of contrastive_loss, all constants included.

    With A = Q^x + Q^y:

        dL/dx_i = -(2 / (N tau)) [ 2(y_i - x_i) - sum_k A(i,k) (y_k - x_i) ]
        dL/dy_i = -(2 / (N tau)) [ 2(x_i - y_i) - sum_k A(k,i) (x_k - y_i) ]

    The bracketed terms are the attraction toward the matched partner and
    the Q-weighted repulsion from the whole other modality. Validated
    against central finite differences in the test suite.
    """
    tau = _check_tau(tau)
    sa = soft_assignments(pairs, tau)
    x, y = pairs.x, pairs.y
    n = x.shape[0]
    a = sa.qx + sa.qy
    row = a.sum(axis=1)
    col = a.sum(axis=0)
    scale = -2.0 / (n * tau)
    dx = scale * (2.0 * (y - x) - a @ y + row[:, None] * x)
    dy = scale * (2.0 * (x - y) - a.T @ x + col[:, None] * y)
    return GradientPair(dx=dx, dy=dy)


def stochasticity_stats(sa: SoftAssignment) -> StochasticityStats:
    """Per-index assignment-mass sums and their dispersion."""
    s_y = sa.qx.sum(axis=0)
    s_x = sa.qy.sum(axis=1)
    return StochasticityStats(
        s_x=s_x,
        s_y=s_y,
        mean_sx=float(s_x.mean()),
        mean_sy=float(s_y.mean()),
        var_sx=float(s_x.var()),
        var_sy=float(s_y.var()),
    )


def s_linear_approx(pairs: PairedEmbeddings, tau: float) -> np.ndarray:
    """First-order prediction of S_i^y for tight clusters.

    Returns 1 + (2/tau) (mu_x - mu_y) . (y_i - mu_y) per row, the linearized
    kernel expansion around the modality means. Exact S_i^y values come from
    stochasticity_stats; the difference shrinks linearly with cluster radius.
    """
    tau = _check_tau(tau)
    pairs.require_bijective()
    mu_x = pairs.x.mean(axis=0)
    mu_y = pairs.y.mean(axis=0)
    return 1.0 + (2.0 / tau) * ((pairs.y - mu_y) @ (mu_x - mu_y))
