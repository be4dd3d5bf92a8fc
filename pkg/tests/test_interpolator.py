import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinreg.dataset import RawDataset
from kinreg.interpolator import CorrectionLevel, KineticInterpolator, fit, fit_report, predict


def test_level_parse():
    assert CorrectionLevel.parse("second") is CorrectionLevel.SECOND
    assert CorrectionLevel.parse("1") is CorrectionLevel.FIRST
    assert CorrectionLevel.parse(0) is CorrectionLevel.NONE
    with pytest.raises(KeyError):
        CorrectionLevel.parse("third")


@pytest.mark.parametrize("level", list(CorrectionLevel))
def test_constant_data(level, backend):
    rng = np.random.default_rng(0)
    m = fit(RawDataset(rng.random((25, 2)), np.full(25, 0.7)), 0.03, level)
    np.testing.assert_allclose(m.psi, 0.7, atol=1e-14)
    np.testing.assert_allclose(predict(m, rng.random((5, 2))), 0.7, atol=1e-14)


def test_psi_equals_values_below_second():
    rng = np.random.default_rng(1)
    train = RawDataset(rng.random(20), rng.random(20))
    for level in (CorrectionLevel.NONE, CorrectionLevel.FIRST):
        m = fit(train, 0.05, level)
        np.testing.assert_array_equal(m.psi, m.train_values)


def test_linear_psi_close_to_values(backend):
    x = np.linspace(0, 1, 21)
    m = fit(RawDataset(x, 2 * x - 1), 0.02, CorrectionLevel.SECOND)
    interior = (x > 0.2) & (x < 0.8)
    np.testing.assert_allclose(m.psi[interior], m.train_values[interior], atol=1e-6)


def test_quadratic_psi_below_values(backend):
    x = np.linspace(0, 1, 41)
    m = fit(RawDataset(x, x**2), 0.002, CorrectionLevel.SECOND)
    interior = (x > 0.25) & (x < 0.75)
    assert (m.psi[interior] < m.train_values[interior]).all()


def test_linear_target_first_moment(backend):
    rng = np.random.default_rng(7)
    c = rng.random(30)
    m = fit(RawDataset(c, 0.3 - 1.2 * c), 0.05, CorrectionLevel.FIRST)
    y, rep = predict(m, [0.37], return_report=True)
    assert rep.n_failed_corrections == 0
    assert y[0] == pytest.approx(-0.144, abs=1e-6)


def test_cold_and_hot_limits(backend):
    rng = np.random.default_rng(2)
    X, v = rng.random((30, 2)), rng.normal(size=30)
    cold = fit(RawDataset(X, v), 1e-12, CorrectionLevel.NONE)
    np.testing.assert_allclose(predict(cold, X), v, atol=1e-9)
    hot = fit(RawDataset(X, v), 1e12, CorrectionLevel.NONE)
    np.testing.assert_allclose(predict(hot, rng.random((10, 2))), v.mean(), atol=1e-6)


def test_model_is_immutable():
    m = fit(RawDataset([0.0, 0.5, 1.0], [0.0, 1.0, 0.0]), 0.1)
    with pytest.raises(dataclasses.FrozenInstanceError):
        m.theta = 2.0
    with pytest.raises(ValueError):
        m.psi[0] = 1.0


def test_fit_report_cases():
    x = np.linspace(0, 1, 11)
    m = fit(RawDataset(x, 3 * x), 1e-3, CorrectionLevel.SECOND)
    assert fit_report(m)["n_failed_corrections"] == 0
    # the endpoint roots run off toward infinity as theta grows; at 0.01 they
    # are still reached (the residual decays exponentially in the shift)
    m = fit(RawDataset(x, 3 * x), 0.01, CorrectionLevel.SECOND)
    assert fit_report(m)["n_failed_corrections"] == 0
    # hotter: the two hull endpoints need a shift past the divergence guard and
    # fall back to psi = phi, which keeps the linear fit exact
    m = fit(RawDataset(x, 3 * x), 0.1, CorrectionLevel.SECOND)
    assert fit_report(m)["n_failed_corrections"] == 2
    np.testing.assert_allclose(m.psi, 3 * x, atol=1e-9)
    m2 = fit(RawDataset([0.0, 1.0], [5.0, 5.0]), 0.1, CorrectionLevel.SECOND)
    assert fit_report(m2)["n_failed_corrections"] == 0
    rng = np.random.default_rng(0)
    X = rng.random((40, 2))
    m3 = fit(RawDataset(X, X[:, 0]), 1e-14, CorrectionLevel.SECOND)
    rep = fit_report(m3)
    assert 0 <= rep["n_failed_corrections"] <= 40
    assert fit_report(fit(RawDataset(X, X[:, 0]), 0.1, CorrectionLevel.NONE))["n_failed_corrections"] == 0


def test_first_level_self_corrections_are_lazy():
    x = np.linspace(0, 1, 11)
    m = fit(RawDataset(x, x), 0.01, CorrectionLevel.FIRST)
    assert m._corrections is None
    assert len(m.self_corrections) == 11


def test_predict_checks_dimension():
    m = fit(RawDataset(np.random.default_rng(0).random((5, 2)), np.arange(5.0)), 0.1)
    with pytest.raises(ValueError, match="dimension 2"):
        predict(m, np.zeros((3, 3)))
    assert predict(m, np.empty((0, 2))).shape == (0,)


def test_fit_needs_two_points():
    with pytest.raises(ValueError):
        fit(RawDataset([0.0], [1.0]), 0.1)


def test_batch_equals_sequential(backend):
    rng = np.random.default_rng(4)
    m = fit(RawDataset(rng.random((50, 2)), rng.normal(size=50)), 0.01)
    Q = rng.random((20, 2))
    whole = predict(m, Q)
    parts = np.concatenate([predict(m, Q[i:i + 3]) for i in range(0, 20, 3)])
    np.testing.assert_array_equal(whole, parts)


def test_estimator_wrapper():
    x = np.linspace(0, 1, 15)
    est = KineticInterpolator(0.01, "first").fit(x, 1 - x)
    assert est.predict([0.5])[0] == pytest.approx(0.5, abs=1e-8)
    with pytest.raises(RuntimeError):
        KineticInterpolator(0.1).predict([0.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.sampled_from([0.01, 0.05, 0.2]),
       st.sampled_from([CorrectionLevel.FIRST, CorrectionLevel.SECOND]))
def test_affine_exactness_property(seed, dim, theta, level):
    rng = np.random.default_rng(seed)
    X = rng.random((50, dim))
    a, b = rng.normal(), rng.normal(size=dim)
    m = fit(RawDataset(X, a + X @ b), theta, level)
    Q = rng.random((20, dim))
    y, _ = predict(m, Q, return_report=True)
    from kinreg.moment import solve_first_moment_batch

    ok = solve_first_moment_batch(Q, X, theta).converged
    np.testing.assert_allclose(y[ok], (a + Q @ b)[ok], atol=1e-6)
