import math

import numpy as np
import pytest

from kinreg.benchfn import NoiseSpec, add_noise, get_function, grid_points, sample
from kinreg.dataset import RawDataset
from oracles import franke_ref


def test_known_values():
    assert get_function("ackley6d")(np.zeros(6))[0] == pytest.approx(0.0, abs=1e-14)
    for d in (1, 3, 7):
        assert get_function("rastrigin", d)(np.zeros(d))[0] == 0.0
    assert get_function("weierstrass", terms=3)([0.0])[0] == 2.3125
    # frozen after independent evaluation with the math module
    assert get_function("franke2d")([0.0, 0.0])[0] == pytest.approx(0.7664205912849231, abs=1e-10)
    assert get_function("camel", 6)(np.full(6, 1 / 3))[0] == pytest.approx(251.96512731728166, rel=1e-12)


def test_franke_against_reference():
    pts = np.random.default_rng(0).random((50, 2))
    got = get_function("franke")(pts)
    np.testing.assert_allclose(got, [franke_ref(x, y) for x, y in pts], rtol=1e-14)


def test_camel_symmetric_humps():
    f = get_function("camel", 2)
    assert f([1 / 3, 1 / 3])[0] == pytest.approx(f([2 / 3, 2 / 3])[0], rel=1e-14)


def test_lookup():
    assert get_function("franke2d").dim == 2
    assert get_function("camel3d").dim == 3
    assert get_function("weierstrass", terms=5).label == "weierstrass5"
    with pytest.raises(ValueError):
        get_function("nope")
    with pytest.raises(ValueError):
        get_function("franke", 3)


def test_grids():
    np.testing.assert_array_equal(grid_points(3, 1)[:, 0], [0, 0.5, 1])
    g = grid_points(9, 2)
    assert g.shape == (9, 2) and set(g[:, 0]) == {0, 0.5, 1} and len({tuple(p) for p in g}) == 9


def test_sampling_deterministic():
    f = get_function("franke")
    a, b = sample(f, 100, seed=3), sample(f, 100, seed=3)
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, sample(f, 100, seed=4).points)


def test_noise_identity_and_zero_rows():
    data = RawDataset(np.linspace(0, 1, 5), [0.0, 1.0, 2.0, 0.0, 3.0])
    assert add_noise(data, NoiseSpec(s=0)) is data
    noisy = add_noise(data, NoiseSpec(s=0.2, seed=1))
    assert noisy.values[0] == 0.0 and noisy.values[3] == 0.0


def test_noise_statistics():
    n = 100_000
    data = RawDataset(np.zeros(n), np.full(n, 2.0))
    noisy = add_noise(data, NoiseSpec(s=0.05, seed=0))
    rel = noisy.values / data.values - 1.0
    assert np.std(rel) == pytest.approx(0.05 / 3, rel=0.05)


def test_negative_noise_rejected():
    with pytest.raises(ValueError):
        NoiseSpec(s=-0.1)


def test_weierstrass_terms_reference():
    x = 0.3
    ref = sum(0.75**i * math.cos(5**i * math.pi * x) for i in range(4))
    assert get_function("weierstrass", terms=4)([x])[0] == pytest.approx(ref, rel=1e-14)
