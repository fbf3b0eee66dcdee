import numpy as np
import pytest

from gapkit import (
    ClosingPlan,
    apply_plan,
    approx_orthogonal_direction,
    exact_orthogonal_direction,
    global_gap,
    make_closing_plan,
    nearest_neighbors,
    pairwise_sq_dist,
    quantization_aware_lambda,
    quantize_matrix,
    NoiseModel,
)
from gapkit.errors import BadEpsilon, DegenerateInput
from gapkit.fixtures import orthogonal_gap_fixture


def plan_with(direction, lam=1.0, moved="x"):
    return ClosingPlan(
        direction=np.asarray(direction, dtype=float),
        lam=lam,
        moved=moved,
        epsilon=0.0,
        residual_in_subspace_norm=0.0,
    )


# --- exact_orthogonal_direction -------------------------------------------

def test_exact_direction_gap_already_orthogonal():
    retrieved = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    g = np.array([0.0, 0.0, 2.5])
    assert np.allclose(exact_orthogonal_direction(g, retrieved), g)


def test_exact_direction_gap_in_span_is_zero():
    rng = np.random.default_rng(0)
    retrieved = rng.normal(size=(10, 4))
    basisvec = retrieved[2] - retrieved.mean(axis=0)
    got = exact_orthogonal_direction(basisvec, retrieved)
    assert np.linalg.norm(got) < 1e-9 * np.linalg.norm(basisvec)


def test_exact_direction_plane_example():
    # retrieved spread in the z = 4 plane; only the z-component survives
    rng = np.random.default_rng(1)
    retrieved = np.c_[rng.normal(size=(12, 2)), np.full(12, 4.0)]
    got = exact_orthogonal_direction(np.array([1.0, 1.0, 1.0]), retrieved)
    assert np.allclose(got, [0.0, 0.0, 1.0], atol=1e-9)


def test_exact_direction_orthogonal_to_centered_rows():
    rng = np.random.default_rng(2)
    retrieved = rng.normal(size=(20, 6))
    g = rng.normal(size=6)
    out = exact_orthogonal_direction(g, retrieved)
    centered = retrieved - retrieved.mean(axis=0)
    assert np.abs(centered @ out).max() < 1e-9 * np.linalg.norm(g)


def test_exact_direction_idempotent():
    rng = np.random.default_rng(3)
    retrieved = rng.normal(size=(9, 5))
    g = rng.normal(size=5)
    once = exact_orthogonal_direction(g, retrieved)
    twice = exact_orthogonal_direction(once, retrieved)
    assert np.allclose(once, twice, atol=1e-12)


def test_exact_direction_single_row_raises():
    with pytest.raises(DegenerateInput):
        exact_orthogonal_direction(np.array([1.0, 0.0]), np.array([[1.0, 2.0]]))


# --- approx_orthogonal_direction ------------------------------------------

def _two_axis_retrieved():
    # sign-symmetric points: covariance exactly diag(9, 1, 0),
    # so the variance fractions are exactly 0.9 / 0.1 on e1 / e2
    return np.array(
        [
            [3.0, 1.0, 0.0],
            [3.0, -1.0, 0.0],
            [-3.0, 1.0, 0.0],
            [-3.0, -1.0, 0.0],
        ]
    )


def test_approx_epsilon_one_returns_gap():
    m = _two_axis_retrieved()
    g = np.array([1.0, 1.0, 0.0])
    assert np.allclose(approx_orthogonal_direction(g, m, 1.0), g)


def test_approx_epsilon_zero_equals_exact():
    m = _two_axis_retrieved()
    g = np.array([0.3, -0.8, 0.5])
    assert np.allclose(
        approx_orthogonal_direction(g, m, 0.0),
        exact_orthogonal_direction(g, m),
        atol=1e-12,
    )


def test_approx_mid_epsilon_projects_only_dominant():
    m = _two_axis_retrieved()
    g = np.array([1.0, 1.0, 0.0])
    got = approx_orthogonal_direction(g, m, 0.5)
    assert abs(got[0]) < 1e-9     # dominant axis projected out
    assert abs(got[1] - 1.0) < 1e-9  # weak axis kept


def test_approx_norm_monotone_in_epsilon():
    rng = np.random.default_rng(5)
    m = rng.normal(size=(60, 6)) * np.array([5.0, 3.0, 2.0, 1.0, 0.5, 0.1])
    g = rng.normal(size=6)
    norms = [
        np.linalg.norm(approx_orthogonal_direction(g, m, eps))
        for eps in (0.0, 0.001, 0.01, 0.05, 0.2, 0.5, 1.0)
    ]
    assert all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))
    assert norms[-1] <= np.linalg.norm(g) + 1e-9


def test_approx_bad_epsilon():
    with pytest.raises(BadEpsilon):
        approx_orthogonal_direction(np.zeros(2), np.eye(2), 1.5)
    with pytest.raises(BadEpsilon):
        approx_orthogonal_direction(np.zeros(2), np.eye(2), -0.1)


# --- make_closing_plan / apply_plan ---------------------------------------

def test_plan_records_residual():
    pairs = orthogonal_gap_fixture(0)
    plan = make_closing_plan(pairs, moved="x", epsilon=0.0, lam=1.0)
    g = global_gap(pairs)
    assert np.isclose(
        plan.residual_in_subspace_norm, np.linalg.norm(g - plan.direction), atol=1e-12
    )
    assert np.linalg.norm(plan.direction) <= np.linalg.norm(g) + 1e-9


def test_apply_plan_lambda_zero_identity():
    pairs = orthogonal_gap_fixture(1)
    plan = make_closing_plan(pairs, moved="x", epsilon=0.0, lam=0.0)
    out = apply_plan(pairs, plan)
    assert np.array_equal(out.x, pairs.x)
    assert np.array_equal(out.y, pairs.y)


def test_apply_plan_closes_gap_component():
    pairs = orthogonal_gap_fixture(2)
    plan = make_closing_plan(pairs, moved="x", epsilon=0.0, lam=1.0)
    closed = apply_plan(pairs, plan)
    unit = plan.direction / np.linalg.norm(plan.direction)
    assert abs(global_gap(closed) @ unit) < 1e-9
    # the other modality untouched
    assert np.array_equal(closed.y, pairs.y)


def test_apply_plan_moved_y_symmetric():
    pairs = orthogonal_gap_fixture(3)
    plan = make_closing_plan(pairs, moved="y", epsilon=0.0, lam=1.0)
    closed = apply_plan(pairs, plan)
    unit = plan.direction / np.linalg.norm(plan.direction)
    assert abs(global_gap(closed) @ unit) < 1e-9
    assert np.array_equal(closed.x, pairs.x)


def test_apply_plan_preserves_nn_at_any_lambda():
    pairs = orthogonal_gap_fixture(4)
    plan = make_closing_plan(pairs, moved="x", epsilon=0.0, lam=1.0)
    base = nearest_neighbors(pairs.y, pairs.x)
    for lam in (-1.0, 0.5, 1.0, 2.0):
        moved = apply_plan(pairs, plan_with(plan.direction, lam=lam))
        assert np.array_equal(nearest_neighbors(moved.y, moved.x), base)


def test_nn_invariance_over_100_fixtures():
    changed = 0
    for s in range(100):
        pairs = orthogonal_gap_fixture((70, s))
        dist = np.sort(pairwise_sq_dist(pairs.y, pairs.x), axis=1)
        if (dist[:, 1] - dist[:, 0]).min() <= 1e-6:
            continue
        direction = exact_orthogonal_direction(global_gap(pairs), pairs.x)
        base = nearest_neighbors(pairs.y, pairs.x)
        for lam in (-1.0, 0.5, 1.0, 2.0):
            moved = apply_plan(pairs, plan_with(direction, lam=lam))
            if not np.array_equal(nearest_neighbors(moved.y, moved.x), base):
                changed += 1
    assert changed == 0


# --- quantization_aware_lambda --------------------------------------------

def test_quant_lambda_identity_quantizer_picks_one():
    pairs = orthogonal_gap_fixture(11)
    direction = exact_orthogonal_direction(global_gap(pairs), pairs.x)
    # 2^20 levels over [-8, 8]: spacing tiny relative to the data
    fine = NoiseModel.quantize(2**20, -8.0, 8.0)
    lam = quantization_aware_lambda(pairs, direction, fine, [0.0, 0.5, 1.0, 1.5])
    assert lam == 1.0


def test_quant_lambda_singleton_grid():
    pairs = orthogonal_gap_fixture(12)
    direction = exact_orthogonal_direction(global_gap(pairs), pairs.x)
    model = NoiseModel.quantize(4, -3.0, 3.0)
    assert quantization_aware_lambda(pairs, direction, model, [0.0]) == 0.0


def test_quant_lambda_matches_exhaustive_oracle():
    pairs = orthogonal_gap_fixture(11)
    direction = exact_orthogonal_direction(global_gap(pairs), pairs.x)
    model = NoiseModel.quantize(4, -3.0, 3.0)
    grid = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5]
    got = quantization_aware_lambda(pairs, direction, model, grid)

    # oracle: evaluate the quantized-gap objective at every grid point
    objective = []
    for lam in grid:
        moved = apply_plan(pairs, plan_with(direction, lam=lam))
        qx = quantize_matrix(moved.x, 4, -3.0, 3.0)
        qy = quantize_matrix(moved.y, 4, -3.0, 3.0)
        objective.append(np.linalg.norm(qy.mean(axis=0) - qx.mean(axis=0)))
    want = grid[int(np.argmin(objective))]
    assert got == want
