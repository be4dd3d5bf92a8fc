"""Benchmark pipeline shared by the CLI and the acceptance tests.

One run = for every (N, seed): sample, optionally add noise, normalize, split,
tune the temperature per method and correction level, then score on a fresh
test set. Independent random streams are derived from the seed:
``default_rng([seed, 0])`` for training points, ``[seed, 1]`` for the test
set and ``[seed, 2]`` for noise.
"""
import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import benchfn, dataset
from .interpolator import CorrectionLevel, fit, fit_report, predict
from .metrics import compute_metrics
from .rbf import RbfFitError, rbf_fit, rbf_predict, rbf_tune
from .temperature import (
    CGConfig,
    ThetaSearchConfig,
    candidate_sequence,
    d_typ,
    search_theta,
    search_theta_mle,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
METHODS = ("kinetic", "kinetic-mle", "rbf")

RESULT_COLUMNS = [
    "schema_version", "function", "method", "level", "D", "N", "seed", "s",
    "theta_opt", "theta_over_dtyp2", "val_rmse", "rmse", "l1_mean", "linf", "r2",
    "ratio_vs_level0", "search_seconds", "fit_seconds", "predict_seconds",
    "n_failed_corrections", "n_failed_predictions", "error",
]
SWEEP_COLUMNS = ["schema_version", "level", "theta", "theta_over_dtyp2", "val_rmse", "val_rmse_clean"]


@dataclass
class ExperimentConfig:
    function: str = None
    csv_path: str = None
    dim: int = None
    n: tuple = (2000,)
    sampling: str = "random"
    seeds: tuple = (0,)
    noise: float = 0.0
    levels: tuple = (0, 1, 2)
    methods: tuple = ("kinetic",)
    terms: int = 3
    ratio: float = 0.8
    test_n: int = 10000
    test_frac: float = 0.2
    search: ThetaSearchConfig = field(default_factory=ThetaSearchConfig)
    cg: CGConfig = field(default_factory=CGConfig)

    def __post_init__(self):
        if (self.function is None) == (self.csv_path is None):
            raise ValueError("set exactly one of function / csv_path")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        self.levels = tuple(int(CorrectionLevel.parse(v)) for v in self.levels)
        ns = self.n if isinstance(self.n, (tuple, list)) else (self.n,)
        self.n = tuple(None if v is None else int(v) for v in ns)

    def benchmark_function(self):
        return benchfn.get_function(self.function, self.dim, self.terms)


@dataclass
class SeedData:
    split: dataset.SplitDataset
    test_points: np.ndarray  # normalized frame
    test_truth: np.ndarray  # normalized frame, noiseless where known
    val_truth_clean: np.ndarray = None
    label: str = ""
    n_total: int = 0
    # CSV input only: row indices of the held-out test rows and of the pool
    # the split was drawn from (disjoint by construction)
    test_idx: np.ndarray = None
    pool_idx: np.ndarray = None


def _rng(seed, stream):
    return np.random.default_rng([int(seed), stream])


def make_seed_data(cfg, n, seed):
    """Build the split and the held-out test set for one (N, seed)."""
    if cfg.function is not None:
        fn = cfg.benchmark_function()
        if cfg.sampling == "random":
            pts = _rng(seed, 0).random((n, fn.dim))
        else:
            pts = benchfn.grid_points(n, fn.dim)
        clean = dataset.RawDataset(pts, fn(pts))
        noisy = benchfn.add_noise(clean, benchfn.NoiseSpec(s=cfg.noise, seed=int(_rng(seed, 2).integers(2**63))))
        sp = dataset.prepare(noisy, cfg.ratio, seed)
        test_pts = _rng(seed, 1).random((cfg.test_n, fn.dim))
        tf = sp.transform
        return SeedData(
            split=sp,
            test_points=tf.points(test_pts),
            test_truth=tf.values(fn(test_pts)),
            val_truth_clean=tf.values(clean.values[sp.val_idx]),
            label=fn.label,
            n_total=n,
        )
    raw = dataset.load_csv(cfg.csv_path)
    perm = _rng(seed, 1).permutation(raw.n)
    n_test = int(math.floor(raw.n * cfg.test_frac))
    test_idx, keep_idx = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    if n is not None and n < keep_idx.size:
        keep_idx = np.sort(keep_idx[_rng(seed, 0).permutation(keep_idx.size)[:n]])
    pool = raw.subset(keep_idx)
    pool = benchfn.add_noise(pool, benchfn.NoiseSpec(s=cfg.noise, seed=int(_rng(seed, 2).integers(2**63))))
    sp = dataset.prepare(pool, cfg.ratio, seed)
    tf = sp.transform
    test = raw.subset(test_idx)
    return SeedData(
        split=sp,
        test_points=tf.points(test.points),
        test_truth=tf.values(test.values),
        label=cfg.csv_path,
        n_total=keep_idx.size,
        test_idx=test_idx,
        pool_idx=keep_idx,
    )


def _row(cfg, data, method, level, seed):
    return {
        "schema_version": SCHEMA_VERSION,
        "function": data.label,
        "method": method,
        "level": level,
        "D": data.split.train.dim,
        "N": data.n_total,
        "seed": seed,
        "s": cfg.noise,
        "error": "",
    }


def _metrics_into(row, pred, truth):
    m = compute_metrics(pred, truth)
    row.update(rmse=m.rmse, l1_mean=m.l1_mean, linf=m.linf, r2=m.r2)


def run_kinetic(cfg, data, level, seed, optimizer="present"):
    method = "kinetic" if optimizer == "present" else "kinetic-mle"
    row = _row(cfg, data, method, level, seed)
    sp = data.split
    try:
        t0 = time.perf_counter()
        if optimizer == "present":
            res = search_theta(sp, replace(cfg.search, level=level))
        else:
            res = search_theta_mle(sp, level, cfg.cg, cfg.search.solver, cfg.search.knn_k)
        t1 = time.perf_counter()
        model = fit(sp.train, res.theta_opt, level, cfg.search.solver)
        rep = fit_report(model) if level == CorrectionLevel.SECOND else {"n_failed_corrections": 0}
        t2 = time.perf_counter()
        pred, prep = predict(model, data.test_points, return_report=True)
        t3 = time.perf_counter()
        row.update(
            theta_opt=res.theta_opt,
            theta_over_dtyp2=res.theta_over_dtyp2,
            val_rmse=res.rmse_opt,
            search_seconds=t1 - t0,
            fit_seconds=t2 - t1,
            predict_seconds=t3 - t2,
            n_failed_corrections=rep["n_failed_corrections"],
            n_failed_predictions=prep.n_failed_corrections,
        )
        _metrics_into(row, pred, data.test_truth)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.warning("kinetic level %s seed %s failed: %s", level, seed, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_rbf(cfg, data, seed):
    row = _row(cfg, data, "rbf", "", seed)
    sp = data.split
    try:
        t0 = time.perf_counter()
        theta, val, _ = rbf_tune(sp, candidate_sequence(sp.train, cfg.search))
        t1 = time.perf_counter()
        model = rbf_fit(sp.train, theta)
        t2 = time.perf_counter()
        pred = rbf_predict(model, data.test_points)
        t3 = time.perf_counter()
        row.update(
            theta_opt=theta,
            theta_over_dtyp2=theta / d_typ(sp.train, min(cfg.search.knn_k, sp.train.n - 1)) ** 2,
            val_rmse=val,
            search_seconds=t1 - t0,
            fit_seconds=t2 - t1,
            predict_seconds=t3 - t2,
            n_failed_corrections=0,
            n_failed_predictions=0,
        )
        _metrics_into(row, pred, data.test_truth)
    except (ValueError, RbfFitError, np.linalg.LinAlgError) as exc:
        log.warning("rbf seed %s failed: %s", seed, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _sort_key(row):
    lvl = row["level"]
    return (row["N"], row["method"], -1 if lvl == "" else lvl, row["seed"])


def run_benchmark(cfg, progress=None):
    """Run the full grid and return the rows, sorted by (N, method, level, seed)."""
    rows = []
    for n in cfg.n:
        for seed in cfg.seeds:
            data = make_seed_data(cfg, n, seed)
            for method in cfg.methods:
                if method == "rbf":
                    rows.append(run_rbf(cfg, data, seed))
                    continue
                opt = "present" if method == "kinetic" else "mle"
                for level in cfg.levels:
                    rows.append(run_kinetic(cfg, data, level, seed, opt))
                    if progress:
                        progress(rows[-1])
    _add_ratios(rows)
    rows.sort(key=_sort_key)
    return rows


def _add_ratios(rows):
    base = {
        (r["N"], r["method"], r["seed"]): r.get("rmse")
        for r in rows
        if r["level"] == 0 and r.get("rmse") is not None
    }
    for r in rows:
        b = base.get((r["N"], r["method"], r["seed"]))
        if b is not None and r.get("rmse"):
            r["ratio_vs_level0"] = b / r["rmse"]


def summarize(rows):
    """Mean/std of the metrics per (N, method, level) group."""
    groups = {}
    for r in rows:
        groups.setdefault((r["N"], r["method"], r["level"]), []).append(r)
    out = []
    for (n, method, level), rs in sorted(groups.items(), key=lambda kv: _sort_key(kv[1][0])):
        ok = [r for r in rs if not r["error"]]
        entry = {"N": n, "method": method, "level": level, "n_seeds": len(rs), "n_errors": len(rs) - len(ok)}
        for col in ("rmse", "l1_mean", "linf", "r2", "theta_opt", "theta_over_dtyp2", "val_rmse",
                    "ratio_vs_level0", "search_seconds", "fit_seconds", "predict_seconds"):
            vals = np.array([r[col] for r in ok if r.get(col) not in (None, "")], dtype=float)
            entry[f"{col}_mean"] = float(vals.mean()) if vals.size else None
            entry[f"{col}_std"] = float(vals.std()) if vals.size else None
        out.append(entry)
    # ratio of seed-mean RMSEs against the level-0 group of the same method
    base = {(e["N"], e["method"]): e["rmse_mean"] for e in out if e["level"] == 0}
    for e in out:
        b = base.get((e["N"], e["method"]))
        e["mean_ratio_vs_level0"] = b / e["rmse_mean"] if b and e["rmse_mean"] else None
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path, rows, columns=RESULT_COLUMNS):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def write_summary(path, rows, config_meta=None):
    doc = {"schema_version": SCHEMA_VERSION, "config": config_meta or {}, "groups": summarize(rows)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, default=str)


def sweep_theta(cfg, n, seed, thetas=None, n_grid=30, theta_min=1e-4, theta_max=None):
    """Validation RMSE on a log-spaced temperature grid for each correction level."""
    from .temperature import theta_initial

    data = make_seed_data(cfg, n, seed)
    sp = data.split
    if thetas is None:
        hi = theta_max if theta_max is not None else theta_initial(sp.train)
        thetas = np.geomspace(theta_min, hi, n_grid) if n_grid > 1 else np.array([hi])
    dt = d_typ(sp.train, min(cfg.search.knn_k, sp.train.n - 1))
    rows = []
    for level in cfg.levels:
        for th in thetas:
            model = fit(sp.train, th, level, cfg.search.solver)
            pred = predict(model, sp.validation.points)
            row = {
                "schema_version": SCHEMA_VERSION,
                "level": level,
                "theta": float(th),
                "theta_over_dtyp2": float(th) / dt**2,
                "val_rmse": compute_metrics(pred, sp.validation.values).rmse,
            }
            if data.val_truth_clean is not None:
                row["val_rmse_clean"] = compute_metrics(pred, data.val_truth_clean).rmse
            rows.append(row)
    return rows


PRESETS = {
    "franke-levels": dict(function="franke", n=(2000,), seeds=(0, 1, 2, 3, 4), levels=(0, 1, 2)),
    "franke-convergence": dict(function="franke", n=(500, 1000, 2000, 4000), seeds=(0, 1, 2), levels=(0, 1, 2)),
    "camel-d1": dict(function="camel", dim=1, n=(100, 200, 400, 800), seeds=(0, 1, 2, 3, 4), levels=(0, 2)),
    "camel-d3": dict(function="camel", dim=3, n=(1000, 2000, 4000), seeds=(0, 1, 2), levels=(0, 2)),
    "camel-d6": dict(function="camel", dim=6, n=(1000, 8000), seeds=(0, 1), levels=(0, 2)),
    "ackley-6d": dict(function="ackley", dim=6, n=(2000, 4000, 8000), seeds=(0, 1), levels=(0, 2)),
    "weierstrass-grid": dict(function="weierstrass", terms=3, n=(20, 40, 80), sampling="grid",
                             methods=("kinetic", "rbf"), levels=(2,), seeds=(0,)),
    "weierstrass-random": dict(function="weierstrass", terms=3, n=(20, 40, 80), methods=("kinetic", "rbf"),
                               levels=(2,), seeds=(0, 1, 2)),
    "noisy-franke-005": dict(function="franke", n=(1000,), noise=0.05, methods=("kinetic", "rbf"),
                             levels=(0, 1, 2), seeds=(0, 1, 2, 3, 4)),
    "noisy-franke-02": dict(function="franke", n=(1000,), noise=0.2, methods=("kinetic", "rbf"),
                            levels=(0, 1, 2), seeds=(0, 1, 2, 3, 4)),
    "search-compare": dict(function="franke", n=(500, 1000), methods=("kinetic", "kinetic-mle"),
                           levels=(0, 2), seeds=(0,)),
}

PRESET_HELP = {
    "franke-levels": "Franke 2D, N=2000, levels 0/1/2 over 5 seeds (correction gain)",
    "franke-convergence": "Franke 2D test RMSE versus N",
    "camel-d1": "two-humped camel, D=1, N=100..800",
    "camel-d3": "two-humped camel, D=3, N=1000..4000",
    "camel-d6": "two-humped camel, D=6, N=1000 and 8000",
    "ackley-6d": "Ackley 6D, N=2000..8000",
    "weierstrass-grid": "Weierstrass (I=3) on a regular grid, kinetic vs RBF",
    "weierstrass-random": "Weierstrass (I=3) on random samples, kinetic vs RBF",
    "noisy-franke-005": "noisy Franke (s=0.05, N=1000), kinetic vs RBF",
    "noisy-franke-02": "noisy Franke (s=0.2, N=1000), kinetic vs RBF",
    "search-compare": "Franke, candidate-sequence search vs conjugate-gradient on log(theta)",
}
