"""Kinetic-regularized Gaussian interpolation.

Quick start::

    from kinreg import RawDataset, prepare, search_theta, fit, predict

    sp = prepare(RawDataset(X, y))
    theta = search_theta(sp).theta_opt
    model = fit(sp.train, theta)
    yq = predict(model, sp.transform.points(Xq))
"""
__version__ = "0.1.0"

from ._accel import HAS_NUMBA, get_backend, set_backend
from .benchfn import BenchmarkFunction, NoiseSpec, add_noise, get_function, sample
from .dataset import (
    DatasetError,
    NormalizationTransform,
    RawDataset,
    SplitDataset,
    load_csv,
    normalize,
    prepare,
    save_csv,
    split,
)
from .interpolator import CorrectionLevel, FittedModel, KineticInterpolator, fit, predict
from .kernel import kernel_average, normalized_distribution
from .metrics import MetricReport, compute_metrics, rmse
from .moment import SolverConfig, solve_first_moment, solve_first_moment_batch
from .persist import load_model, save_model
from .rbf import RbfFitError, RbfModel, rbf_fit, rbf_predict, rbf_tune
from .temperature import (
    StopReason,
    ThetaSearchConfig,
    ThetaSearchResult,
    d_typ,
    search_theta,
    search_theta_mle,
    theta_initial,
    theta_next,
)

__all__ = [
    "HAS_NUMBA", "get_backend", "set_backend",
    "BenchmarkFunction", "NoiseSpec", "add_noise", "get_function", "sample",
    "DatasetError", "NormalizationTransform", "RawDataset", "SplitDataset",
    "load_csv", "normalize", "prepare", "save_csv", "split",
    "CorrectionLevel", "FittedModel", "KineticInterpolator", "fit", "predict",
    "kernel_average", "normalized_distribution",
    "MetricReport", "compute_metrics", "rmse",
    "SolverConfig", "solve_first_moment", "solve_first_moment_batch",
    "load_model", "save_model",
    "RbfFitError", "RbfModel", "rbf_fit", "rbf_predict", "rbf_tune",
    "StopReason", "ThetaSearchConfig", "ThetaSearchResult", "d_typ",
    "search_theta", "search_theta_mle", "theta_initial", "theta_next",
]
