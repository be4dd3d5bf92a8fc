import json

import numpy as np
import pytest

from kinreg import experiments as ex
from kinreg.benchfn import get_function, sample
from kinreg.dataset import save_csv


def _cfg(**kw):
    base = dict(function="camel", dim=1, n=(60,), seeds=(0,), levels=(0, 2), test_n=500)
    base.update(kw)
    return ex.ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        ex.ExperimentConfig()
    with pytest.raises(ValueError):
        ex.ExperimentConfig(function="franke", csv_path="a.csv")
    with pytest.raises(ValueError):
        _cfg(seeds=())
    with pytest.raises(ValueError):
        _cfg(methods=("svm",))


def test_rows_are_reproducible_and_sorted():
    cfg = _cfg(seeds=(1, 0), methods=("rbf", "kinetic"))
    a = ex.run_benchmark(cfg)
    b = ex.run_benchmark(cfg)
    drop = ("search_seconds", "fit_seconds", "predict_seconds")
    assert [{k: v for k, v in r.items() if k not in drop} for r in a] == \
           [{k: v for k, v in r.items() if k not in drop} for r in b]
    keys = [(r["method"], r["level"], r["seed"]) for r in a]
    assert keys == [("kinetic", 0, 0), ("kinetic", 0, 1), ("kinetic", 2, 0), ("kinetic", 2, 1),
                    ("rbf", "", 0), ("rbf", "", 1)]
    for r in a:
        assert r["schema_version"] == ex.SCHEMA_VERSION and not r["error"]
        assert np.isfinite([r["rmse"], r["l1_mean"], r["linf"], r["theta_opt"]]).all()
    lvl2 = [r for r in a if r["level"] == 2]
    assert all(r["ratio_vs_level0"] > 0 for r in lvl2)


def test_test_set_never_in_training(tmp_path):
    data = sample(get_function("franke"), 200, seed=0)
    p = tmp_path / "d.csv"
    save_csv(data, p)
    cfg = ex.ExperimentConfig(csv_path=str(p), n=(None,), levels=(0,))
    sd = ex.make_seed_data(cfg, None, 0)
    assert not set(sd.test_idx) & set(sd.pool_idx)
    assert len(sd.test_idx) + len(sd.pool_idx) == 200
    assert not set(sd.split.train_idx) & set(sd.split.val_idx)
    used = {tuple(p) for p in data.points[sd.pool_idx]}
    test_pts = sd.split.transform.inverse_points(sd.test_points)
    assert not any(tuple(np.round(p, 12)) in {tuple(np.round(u, 12)) for u in used} for p in test_pts)


def test_function_streams_are_independent():
    cfg = _cfg(noise=0.1)
    sd = ex.make_seed_data(cfg, 60, 0)
    assert sd.test_points.shape == (500, 1)
    # validation truth is noiseless, validation values are noisy
    assert not np.allclose(sd.val_truth_clean, sd.split.validation.values)


def test_partial_failure_is_recorded(monkeypatch):
    def boom(*a, **k):
        raise ValueError("synthetic")

    monkeypatch.setattr(ex, "search_theta", boom)
    rows = ex.run_benchmark(_cfg(methods=("kinetic", "rbf")))
    assert all(r["error"] for r in rows if r["method"] == "kinetic")
    assert all(not r["error"] for r in rows if r["method"] == "rbf")


def test_writers(tmp_path):
    rows = ex.run_benchmark(_cfg(seeds=(0, 1)))
    ex.write_rows(tmp_path / "r.csv", rows)
    head = (tmp_path / "r.csv").read_text().splitlines()
    assert head[0].split(",") == ex.RESULT_COLUMNS and len(head) == 5
    ex.write_summary(tmp_path / "s.json", rows, {"k": 1})
    doc = json.loads((tmp_path / "s.json").read_text())
    g = {(e["method"], e["level"]): e for e in doc["groups"]}
    assert g[("kinetic", 0)]["n_seeds"] == 2
    assert g[("kinetic", 2)]["mean_ratio_vs_level0"] > 0


def test_sweep_rows():
    rows = ex.sweep_theta(_cfg(levels=(0, 1)), 60, 0, n_grid=4)
    assert len(rows) == 8 and {r["level"] for r in rows} == {0, 1}
    assert len(ex.sweep_theta(_cfg(levels=(2,)), 60, 0, n_grid=1)) == 1


def test_presets_construct():
    for name, kw in ex.PRESETS.items():
        ex.ExperimentConfig(**kw)
        assert name in ex.PRESET_HELP
