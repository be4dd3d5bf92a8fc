import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinreg.moment import (
    SolverConfig,
    first_moment_residual,
    newton_step_1d,
    solve_dense,
    solve_first_moment,
    solve_first_moment_batch,
)
from oracles import bisect_root_1d


def test_symmetric_pair_needs_no_shift(backend):
    for theta in (0.01, 1.0, 50.0):
        c = solve_first_moment([0.0], [-1.0, 1.0], theta)
        assert c.converged and c.iterations == 0
        assert c.delta[0] == 0.0 and c.residual_norm == 0.0


def test_three_centers_against_bisection(backend):
    c = solve_first_moment([0.3], [0.0, 1.0, 2.0], 0.25)
    root = bisect_root_1d(0.3, [0.0, 1.0, 2.0], 0.25, -1.0, 2.0, tol=1e-12)
    assert c.converged
    assert c.delta[0] + 0.3 == pytest.approx(root, abs=1e-12)
    # frozen after the bisection check above
    assert c.delta[0] == pytest.approx(-0.016459490, abs=1e-8)


def test_grid_points_get_small_shifts(backend):
    grid = np.linspace(0, 1, 11)
    for x in grid[1:-1]:
        c = solve_first_moment([x], grid, 0.01)
        assert c.converged and abs(c.delta[0]) < 0.05 and c.residual_norm <= 1e-10
        root = bisect_root_1d(x, grid, 0.01, x - 0.5, x + 0.5)
        assert c.delta[0] + x == pytest.approx(root, abs=1e-8)


def test_converged_residual_matches_independent_evaluation(backend):
    rng = np.random.default_rng(5)
    C = rng.random((60, 3))
    q = np.array([0.4, 0.55, 0.5])
    c = solve_first_moment(q, C, 0.02)
    assert c.converged and c.residual_norm <= 1e-10
    r = first_moment_residual(q, q + c.delta, C, 0.02)
    assert np.linalg.norm(r) <= 1e-10


def test_query_outside_hull_is_flagged(backend):
    c = solve_first_moment([2.0], [0.0, 0.5, 1.0], 0.05)
    assert not c.converged
    assert c.status in ("max_iter", "diverged", "stalled", "singular")
    assert c.iterations <= SolverConfig().max_iter


def test_newton_step_1d_agrees_with_solver():
    centers = [0.0, 1.0, 2.0]
    xt = 0.3
    for _ in range(30):
        xt = newton_step_1d(0.3, xt, centers, 0.25)
    c = solve_first_moment([0.3], centers, 0.25)
    assert xt == pytest.approx(0.3 + c.delta[0], abs=1e-12)


def test_single_center_rejected():
    with pytest.raises(ValueError):
        solve_first_moment([0.0], [[1.0], [1.0]], 1.0)


def test_batch_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        solve_first_moment_batch(np.zeros((2, 2)), np.zeros((3, 3)), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.sampled_from([0.005, 0.05, 0.5]))
def test_invariants(seed, dim, theta):
    rng = np.random.default_rng(seed)
    C = rng.random((30, dim))
    Q = rng.random((10, dim))
    cfg = SolverConfig(max_iter=20)
    b = solve_first_moment_batch(Q, C, theta, cfg)
    assert (b.iterations <= 20).all()
    assert (b.residual_norm[b.converged] <= cfg.tol_resid).all()
    assert np.isfinite(b.delta).all()


def test_solve_dense_examples():
    np.testing.assert_array_equal(solve_dense(np.eye(2), [3, 4]), [3, 4])
    np.testing.assert_allclose(solve_dense([[2, 0], [0, 4]], [2, 8]), [1, 2])
    rng = np.random.default_rng(1)
    A = rng.normal(size=(6, 6)) + 6 * np.eye(6)
    y = rng.normal(size=6)
    np.testing.assert_allclose(solve_dense(A, A @ y), y, atol=1e-8)


def test_solve_dense_singular():
    with pytest.raises(np.linalg.LinAlgError):
        solve_dense([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


@pytest.mark.parametrize("kw", [dict(tol_resid=0), dict(max_iter=0), dict(ridge=-1)])
def test_solver_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)
