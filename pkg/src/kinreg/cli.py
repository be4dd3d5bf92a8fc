"""Command line entry point: ``kinreg {generate,fit,predict,benchmark,sweep-theta}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import csv
import json
import logging
import os
import sys
import numpy as np

from . import __version__, benchfn, dataset, experiments
from .interpolator import CorrectionLevel, fit, fit_report, predict
from .persist import ModelFileError, load_model, save_model
from .rbf import RbfFitError, RbfModel, rbf_fit, rbf_predict, rbf_tune
from .temperature import ThetaSearchConfig, candidate_sequence, d_typ, search_theta, search_theta_mle

log = logging.getLogger("kinreg")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _level_list(s):
    return [int(CorrectionLevel.parse(v)) for v in s.split(",") if v.strip()]


def _add_search_flags(p):
    g = p.add_argument_group("temperature search")
    g.add_argument("--alpha", type=float, default=0.5, help="relaxation of the temperature update (default 0.5)")
    g.add_argument("--max-iters", type=int, default=50, help="maximum number of candidate temperatures")
    g.add_argument("--rel-tol", type=float, default=1e-3, help="relative tolerance for both stopping rules")
    g.add_argument("--knn-k", type=int, default=5, help="neighbours used for d_typ (default 5)")


def _search_cfg(args, level=CorrectionLevel.SECOND):
    return ThetaSearchConfig(alpha=args.alpha, max_iters=args.max_iters, rel_tol=args.rel_tol,
                             knn_k=args.knn_k, level=level)


def build_parser():
    p = _Parser(prog="kinreg", description="Kinetic-regularized Gaussian interpolation and its benchmarks.")
    p.add_argument("--version", action="version", version=f"kinreg {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", help="sample a benchmark function into CSV files")
    g.add_argument("--function", required=True, help="franke2d, camel, ackley6d, weierstrass, rastrigin")
    g.add_argument("--dim", type=int, default=None)
    g.add_argument("--terms", type=int, default=3, help="Weierstrass complexity I")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--sampling", choices=["random", "grid"], default="random")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise", type=float, default=0.0, help="multiplicative noise scale s")
    g.add_argument("--test-n", type=int, default=0, help="also write a noiseless random test set")
    g.add_argument("--out", default=None, help="training CSV path (default <function>_n<N>_s<seed>.csv)")
    g.add_argument("--test-out", default=None)

    f = sub.add_parser("fit", help="fit a model on a dataset CSV")
    f.add_argument("train_csv")
    f.add_argument("--out", required=True, help="model file to write")
    f.add_argument("--method", choices=["kinetic", "rbf"], default="kinetic")
    f.add_argument("--level", type=CorrectionLevel.parse, default=CorrectionLevel.SECOND)
    f.add_argument("--theta", type=float, default=None, help="fixed temperature; fits on all rows without a search")
    f.add_argument("--no-search", action="store_true", help="explicitly skip the search; requires --theta")
    f.add_argument("--optimizer", choices=["present", "mle"], default="present")
    f.add_argument("--ratio", type=float, default=0.8)
    f.add_argument("--seed", type=int, default=0)
    _add_search_flags(f)

    pr = sub.add_parser("predict", help="predict with a saved model")
    pr.add_argument("model")
    pr.add_argument("query_csv")
    pr.add_argument("--out", default="-", help="output CSV (default stdout)")

    b = sub.add_parser("benchmark", help="run a benchmark experiment",
                       epilog="presets:\n" + "\n".join(f"  {k:18s} {v}" for k, v in experiments.PRESET_HELP.items()),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_experiment_flags(b)
    b.add_argument("--methods", default=None, help="comma list of kinetic, kinetic-mle, rbf")
    b.add_argument("--out", default="results.csv")
    b.add_argument("--json", default=None, help="also write a JSON summary")

    s = sub.add_parser("sweep-theta", help="validation RMSE on a log-spaced temperature grid")
    _add_experiment_flags(s)
    s.add_argument("--theta-min", type=float, default=1e-4)
    s.add_argument("--theta-max", type=float, default=None, help="default: the variance-based initial guess")
    s.add_argument("--grid", type=int, default=30, help="number of grid points")
    s.add_argument("--out", default="sweep.csv")
    return p


def _add_experiment_flags(p):
    p.add_argument("--preset", choices=sorted(experiments.PRESETS), default=None)
    p.add_argument("--function", default=None)
    p.add_argument("--csv", dest="csv_path", default=None, help="dataset CSV instead of a function")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--terms", type=int, default=None)
    p.add_argument("--n", type=_int_list, default=None, help="comma list of sample sizes")
    p.add_argument("--sampling", choices=["random", "grid"], default=None)
    p.add_argument("--seeds", type=_int_list, default=None, help="comma list (default 0)")
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--levels", type=_level_list, default=None, help="comma list of 0,1,2")
    p.add_argument("--test-n", type=int, default=None, help="test points (default 10000)")
    p.add_argument("--ratio", type=float, default=None)
    _add_search_flags(p)


def _experiment_config(args):
    kw = dict(experiments.PRESETS[args.preset]) if args.preset else {}
    for name in ("function", "csv_path", "dim", "terms", "sampling", "noise", "test_n", "ratio"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if args.csv_path is not None:
        kw.pop("function", None)
        kw.setdefault("n", (None,))
    for name in ("n", "seeds", "levels"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = tuple(v)
    methods = getattr(args, "methods", None)
    if methods:
        kw["methods"] = tuple(m.strip() for m in methods.split(",") if m.strip())
    if "function" not in kw and "csv_path" not in kw:
        raise UsageError("one of --function, --csv or --preset is required")
    kw["search"] = _search_cfg(args)
    try:
        return experiments.ExperimentConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_generate(args):
    fn = benchfn.get_function(args.function, args.dim, args.terms)
    data = benchfn.sample(fn, args.n, args.sampling, args.seed)
    data = benchfn.add_noise(data, benchfn.NoiseSpec(s=args.noise, seed=args.seed + 1))
    out = args.out or f"{fn.label}_n{args.n}_s{args.seed}.csv"
    dataset.save_csv(data, out)
    log.info("wrote %s (%d rows)", out, data.n)
    if args.test_n:
        test = benchfn.sample(fn, args.test_n, "random", args.seed + 10_000)
        tout = args.test_out or out.replace(".csv", "_test.csv")
        dataset.save_csv(test, tout)
        log.info("wrote %s (%d rows)", tout, test.n)
    return EXIT_OK


def cmd_fit(args):
    if args.no_search and args.theta is None:
        raise UsageError("--no-search requires --theta")
    raw = dataset.load_csv(args.train_csv)
    data, tf = dataset.normalize(raw)
    meta = {"transform": tf.to_dict(), "method": args.method, "source": os.path.abspath(args.train_csv)}
    if args.no_search or args.theta is not None:
        train, theta, trace = data, args.theta, []
    else:
        sp = dataset.split(data, args.ratio, args.seed, transform=tf)
        train = sp.train
        cfg = _search_cfg(args, args.level)
        if args.method == "rbf":
            theta, _, trace = rbf_tune(sp, candidate_sequence(sp.train, cfg))
        elif args.optimizer == "mle":
            res = search_theta_mle(sp, args.level, knn_k=args.knn_k)
            theta, trace = res.theta_opt, res.theta_trace
        else:
            res = search_theta(sp, cfg)
            theta, trace = res.theta_opt, res.theta_trace
            meta["stop_reason"] = res.stop_reason.value
    k = min(args.knn_k, train.n - 1)
    meta.update(theta=theta, d_typ=d_typ(train, k) if k >= 1 else None, trace=[list(t) for t in trace])
    if args.method == "rbf":
        model = rbf_fit(train, theta)
        meta["ridge"] = model.ridge
        report = {"ridge": model.ridge}
    else:
        model = fit(train, theta, args.level)
        report = fit_report(model) if args.level > CorrectionLevel.NONE else {"n_failed_corrections": 0}
        meta["fit_report"] = report
    save_model(args.out, model, meta)
    print(json.dumps({"model": args.out, "theta": theta, **report}))
    return EXIT_OK


def cmd_predict(args):
    model, meta = load_model(args.model)
    pts, _ = dataset.read_csv(args.query_csv, require_values=False, min_rows=0)
    dim = model.dim
    if pts.shape[1] != dim:
        raise dataset.DatasetError(f"model expects {dim} input dimensions, query file has {pts.shape[1]}")
    tf = dataset.NormalizationTransform.from_dict(meta["transform"]) if "transform" in meta else \
        dataset.NormalizationTransform.identity(dim)
    q = tf.points(pts)
    pred = rbf_predict(model, q) if isinstance(model, RbfModel) else predict(model, q)
    values = tf.inverse_values(pred)
    if args.out == "-":
        _write_predictions(sys.stdout, pts, values)
    else:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            _write_predictions(fh, pts, values)
    return EXIT_OK


def _write_predictions(fh, pts, values):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"x{i}" for i in range(pts.shape[1])] + ["phi"])
    for p, v in zip(pts, values):
        w.writerow([repr(float(c)) for c in p] + [repr(float(v))])


def cmd_benchmark(args):
    cfg = _experiment_config(args)

    def progress(row):
        log.info("N=%s %s level=%s seed=%s rmse=%s %s", row["N"], row["method"], row["level"],
                 row["seed"], row.get("rmse"), row["error"])

    rows = experiments.run_benchmark(cfg, progress)
    experiments.write_rows(args.out, rows)
    if args.json:
        meta = {k: v for k, v in vars(args).items() if k not in ("func",)}
        experiments.write_summary(args.json, rows, meta)
    for g in experiments.summarize(rows):
        ratio = g["mean_ratio_vs_level0"]
        print(f"N={g['N']} {g['method']:<11} level={g['level']!s:<2} rmse={g['rmse_mean']!s:<24}"
              f" ratio={'' if ratio is None else f'{ratio:.3f}'}")
    # per-row failures are recorded in the CSV; only a run with no usable row is an error
    return EXIT_DATA if rows and all(r["error"] for r in rows) else EXIT_OK


def cmd_sweep_theta(args):
    cfg = _experiment_config(args)
    rows = []
    for n in cfg.n:
        for seed in cfg.seeds:
            for r in experiments.sweep_theta(cfg, n, seed, n_grid=args.grid,
                                             theta_min=args.theta_min, theta_max=args.theta_max):
                rows.append({"N": n, "seed": seed, **r})
    experiments.write_rows(args.out, rows, ["N", "seed"] + experiments.SWEEP_COLUMNS)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "benchmark": cmd_benchmark,
    "sweep-theta": cmd_sweep_theta,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"kinreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RbfFitError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"kinreg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (dataset.DatasetError, ModelFileError, ValueError) as exc:
        print(f"kinreg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"kinreg: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
