"""Kinetic-regularized Gaussian interpolator.

Three correction levels:

* ``NONE``: plain normalized-Gaussian average of the training values.
* ``FIRST``: the kernel center is shifted per query so that the weighted mean
  of the training points equals the query (exact on affine targets).
* ``SECOND``: additionally replaces each training value by
  ``psi_i = 2 phi_i - phi_hat(x_i)``, where ``phi_hat(x_i)`` is the
  first-moment prediction at the training point itself. This cancels the
  curvature bias of the kernel average at the training points.
"""
import enum
from dataclasses import dataclass, field

import numpy as np

from .kernel import check_theta, kernel_average
from .moment import BatchCorrection, SolverConfig, solve_first_moment_batch


class CorrectionLevel(enum.IntEnum):
    NONE = 0
    FIRST = 1
    SECOND = 2

    @classmethod
    def parse(cls, v):
        if isinstance(v, cls):
            return v
        if isinstance(v, str):
            key = v.strip().upper()
            aliases = {"0": "NONE", "1": "FIRST", "2": "SECOND",
                       "FIRSTMOMENT": "FIRST", "SECONDMOMENT": "SECOND"}
            return cls[aliases.get(key, key)]
        return cls(int(v))


@dataclass(frozen=True)
class PredictionReport:
    n_queries: int
    n_failed_corrections: int
    max_residual: float


@dataclass(frozen=True, eq=False)
class FittedModel:
    train_points: np.ndarray
    train_values: np.ndarray
    psi: np.ndarray
    theta: float
    level: CorrectionLevel
    solver_cfg: SolverConfig = field(default_factory=SolverConfig)
    _corrections: BatchCorrection = field(default=None, repr=False)

    @property
    def self_corrections(self):
        """Per-training-point first-moment solves (``None`` at level ``NONE``).

        Level ``FIRST`` never reads them during prediction, so they are
        computed on first access.
        """
        if self.level == CorrectionLevel.NONE:
            return None
        if self._corrections is None:
            corr = solve_first_moment_batch(
                self.train_points, self.train_points, self.theta, self.solver_cfg
            )
            object.__setattr__(self, "_corrections", corr)
        return self._corrections

    @property
    def dim(self):
        return self.train_points.shape[1]

    @property
    def n(self):
        return self.train_points.shape[0]


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _shifted(points, corr):
    """Apply converged shifts; failed solves fall back to the unshifted point."""
    delta = np.where(corr.converged[:, None], corr.delta, 0.0)
    return points + delta


def fit(train, theta, level=CorrectionLevel.SECOND, cfg=None):
    """Fit on a (normalized) :class:`~kinreg.dataset.RawDataset`.

    At ``SECOND`` a training point whose first-moment solve does not converge
    keeps ``psi_i = phi_i``: it drops to first-order treatment rather than
    injecting an uncorrected self-prediction into its neighbours.
    """
    theta = check_theta(theta)
    level = CorrectionLevel.parse(level)
    cfg = cfg or SolverConfig()
    X, phi = train.points, train.values
    if X.shape[0] < 2:
        raise ValueError("need at least two training points")
    corr = None
    psi = phi
    if level == CorrectionLevel.SECOND:
        corr = solve_first_moment_batch(X, X, theta, cfg)
        phi_hat = kernel_average(_shifted(X, corr), X, phi, theta)
        psi = np.where(corr.converged, 2.0 * phi - phi_hat, phi)
    return FittedModel(
        train_points=_readonly(X),
        train_values=_readonly(phi),
        psi=_readonly(psi),
        theta=theta,
        level=level,
        solver_cfg=cfg,
        _corrections=corr,
    )


def predict(model, queries, return_report=False):
    """Predict at each row of ``queries`` (same normalized frame as the training data)."""
    Q = np.asarray(queries, dtype=np.float64)
    if Q.ndim == 1:
        Q = Q.reshape(-1, model.dim) if model.dim > 1 else Q[:, None]
    if Q.ndim != 2 or Q.shape[1] != model.dim:
        raise ValueError(f"expected queries of dimension {model.dim}, found {Q.shape[-1]}")
    n_failed, max_res = 0, 0.0
    if Q.shape[0] == 0:
        out = np.empty(0)
    elif model.level == CorrectionLevel.NONE:
        out = kernel_average(Q, model.train_points, model.psi, model.theta)
    else:
        corr = solve_first_moment_batch(Q, model.train_points, model.theta, model.solver_cfg)
        out = kernel_average(_shifted(Q, corr), model.train_points, model.psi, model.theta)
        n_failed = int((~corr.converged).sum())
        max_res = float(corr.residual_norm.max())
    if return_report:
        return out, PredictionReport(Q.shape[0], n_failed, max_res)
    return out


def fit_report(model):
    """Fallback count and largest residual of the per-training-point solves."""
    corr = model.self_corrections
    if corr is None:
        return {"n_failed_corrections": 0, "max_residual": 0.0}
    return {
        "n_failed_corrections": int((~corr.converged).sum()),
        "max_residual": float(corr.residual_norm.max()),
    }


class KineticInterpolator:
    """Estimator-style wrapper: ``KineticInterpolator(theta, level).fit(X, y).predict(Xq)``."""

    def __init__(self, theta, level=CorrectionLevel.SECOND, cfg=None):
        self.theta = theta
        self.level = CorrectionLevel.parse(level)
        self.cfg = cfg
        self.model_ = None

    def fit(self, X, y):
        from .dataset import RawDataset

        self.model_ = fit(RawDataset(X, y), self.theta, self.level, self.cfg)
        return self

    def predict(self, X):
        if self.model_ is None:
            raise RuntimeError("call fit() first")
        return predict(self.model_, X)
