import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kinreg.dataset import (
    DatasetError,
    NormalizationTransform,
    RawDataset,
    load_csv,
    normalize,
    prepare,
    read_csv,
    save_csv,
    split,
)


def test_normalize_1d_affine():
    data, tf = normalize(RawDataset([0.0, 5.0, 10.0], [-2.0, 0.0, 2.0]))
    np.testing.assert_allclose(data.points[:, 0], [0, 0.5, 1])
    np.testing.assert_allclose(data.values, [-1, 0, 1])


def test_normalize_degenerate_axis():
    data, _ = normalize(RawDataset([3.0, 3.0, 3.0], [1.0, 2.0, 3.0]))
    assert (data.points == 0.5).all()


def test_normalize_2d_per_axis():
    data, _ = normalize(RawDataset([[0.0, 1.0], [2.0, 3.0]], [0.0, 1.0]))
    np.testing.assert_array_equal(data.points, [[0, 0], [1, 1]])


def test_constant_values_are_shifted_only():
    data, tf = normalize(RawDataset([0.0, 1.0], [4.0, 4.0]))
    np.testing.assert_array_equal(data.values, [0, 0])
    np.testing.assert_array_equal(tf.inverse_values(data.values), [4, 4])


def test_mixed_degenerate_axis_round_trip():
    raw = RawDataset([[1.0, 7.0], [2.0, 7.0], [4.0, 7.0]], [1.0, 2.0, 3.0])
    data, tf = normalize(raw)
    np.testing.assert_array_equal(data.points[:, 1], 0.5)
    np.testing.assert_allclose(tf.inverse_points(data.points), raw.points, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 4)),
           elements=st.floats(-1e6, 1e6, allow_nan=False)),
    st.data(),
)
def test_round_trip_property(pts, data):
    vals = data.draw(arrays(np.float64, pts.shape[0], elements=st.floats(-1e6, 1e6)))
    raw = RawDataset(pts, vals)
    norm, tf = normalize(raw)
    assert norm.points.min() >= 0.0 and norm.points.max() <= 1.0
    flat = raw.points.max(axis=0) == raw.points.min(axis=0)
    back = tf.inverse_points(norm.points)
    scale = np.maximum(1.0, np.abs(raw.points).max(axis=0))
    assert (np.abs(back - raw.points)[:, ~flat] <= 1e-12 * scale[~flat]).all()
    vscale = max(1.0, np.abs(vals).max())
    np.testing.assert_allclose(tf.inverse_values(norm.values), vals, atol=1e-12 * vscale)


def test_transform_dict_round_trip():
    _, tf = normalize(RawDataset([[0.0, 1.0], [2.0, 5.0]], [3.0, -1.0]))
    tf2 = NormalizationTransform.from_dict(tf.to_dict())
    q = np.array([[0.5, 2.0]])
    np.testing.assert_array_equal(tf.points(q), tf2.points(q))
    assert tf2.out_min == tf.out_min and tf2.out_max == tf.out_max


def test_split_sizes_and_determinism():
    raw = RawDataset(np.arange(10.0), np.arange(10.0))
    a, b = split(raw, 0.8, 42), split(raw, 0.8, 42)
    assert (a.train.n, a.validation.n) == (8, 2)
    np.testing.assert_array_equal(a.train_idx, b.train_idx)
    assert not set(a.train_idx) & set(a.val_idx)
    assert split(RawDataset(np.arange(2000.0), np.zeros(2000)), 0.8).train.n == 1600
    assert split(RawDataset(np.arange(5.0), np.zeros(5)), 0.8).train.n == 4


def test_split_rejects_empty_part():
    with pytest.raises(DatasetError):
        split(RawDataset([0.0, 1.0], [0.0, 1.0]), 0.4)
    with pytest.raises(DatasetError):
        split(RawDataset(np.arange(5.0), np.zeros(5)), 1.0)


def test_prepare_normalizes_before_split():
    raw = RawDataset(np.linspace(10, 20, 50), np.linspace(-3, 3, 50))
    sp = prepare(raw, 0.8, 1)
    joined = np.concatenate([sp.train.points[:, 0], sp.validation.points[:, 0]])
    assert joined.min() == 0.0 and joined.max() == 1.0


def test_validation_errors():
    with pytest.raises(DatasetError, match="index 1"):
        RawDataset([0.0, np.nan], [1.0, 2.0])
    with pytest.raises(DatasetError, match="index 0"):
        RawDataset([0.0, 1.0], [np.inf, 2.0])
    with pytest.raises(DatasetError):
        RawDataset([0.0, 1.0], [1.0])


def test_arrays_are_read_only():
    raw = RawDataset([0.0, 1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        raw.values[0] = 5.0


def test_load_csv_basic(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x0,phi\n0,1\n1,2\n")
    d = load_csv(p)
    assert (d.n, d.dim) == (2, 1)
    np.testing.assert_array_equal(d.values, [1, 2])


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    raw = RawDataset(rng.random((20, 3)), rng.normal(size=20))
    p = tmp_path / "a.csv"
    save_csv(raw, p)
    back = load_csv(p)
    np.testing.assert_array_equal(back.points, raw.points)
    np.testing.assert_array_equal(back.values, raw.values)
    q = tmp_path / "b.csv"
    save_csv(back, q)
    assert p.read_bytes() == q.read_bytes()


@pytest.mark.parametrize("body,match", [
    ("x0,phi\n0,1\n0,abc\n", "line 3"),
    ("x0,phi\n0,abc\n", "line 2"),
    ("x0,phi\n0,1,2\n1,1\n", "line 2"),
    ("x1,phi\n0,1\n1,1\n", "line 1"),
    ("x0,phi\n0,1\n", "at least 2"),
    ("", "header"),
    ("x0,phi\n0,1\nnan,2\n", "line 3"),
])
def test_csv_errors(tmp_path, body, match):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DatasetError, match=match):
        load_csv(p)


def test_read_csv_without_values(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("x0,x1\n0.1,0.2\n")
    pts, vals = read_csv(p, require_values=False, min_rows=0)
    assert pts.shape == (1, 2) and vals is None
    with pytest.raises(DatasetError, match="phi"):
        read_csv(p)
