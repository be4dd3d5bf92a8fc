"""Temperature (kernel width) selection.

The default search walks a deterministic candidate sequence that starts at the
positional variance of the training points and repeatedly applies the relaxed
update

    theta <- alpha * mean_i(|x_i - xbar|^2 P_i(theta)) + (1 - alpha) * theta,

where ``P_i`` is the normalized Gaussian distribution centered at the data
mean. Each candidate is scored by validation RMSE and the best one wins.

:func:`search_theta_mle` is the gradient-based alternative: nonlinear
conjugate gradient on ``z = log(theta)`` with finite-difference gradients.
"""
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .interpolator import CorrectionLevel, fit, predict
from .kernel import check_theta, normalized_distribution
from .metrics import rmse
from .moment import SolverConfig

log = logging.getLogger(__name__)

THETA_FLOOR_FACTOR = 1e-3


class StopReason(str, enum.Enum):
    CONVERGED = "Converged"
    SMALL_STEP = "SmallStep"
    MAX_ITERS = "MaxIters"


@dataclass(frozen=True)
class ThetaSearchConfig:
    alpha: float = 0.5
    max_iters: int = 50
    rel_tol: float = 1e-3
    knn_k: int = 5
    level: CorrectionLevel = CorrectionLevel.SECOND
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.max_iters < 1 or self.knn_k < 1 or not self.rel_tol > 0:
            raise ValueError("max_iters, knn_k and rel_tol must be positive")
        object.__setattr__(self, "level", CorrectionLevel.parse(self.level))


@dataclass(frozen=True)
class ThetaSearchResult:
    theta_opt: float
    theta_trace: list
    d_typ: float
    stop_reason: StopReason
    n_evals: int = 0

    @property
    def rmse_opt(self):
        return min(e for _, e in self.theta_trace)

    @property
    def theta_over_dtyp2(self):
        return self.theta_opt / self.d_typ**2 if self.d_typ > 0 else math.nan


def _points(train):
    return train.points if hasattr(train, "points") else np.atleast_2d(np.asarray(train, float))


def theta_initial(train):
    """Mean squared distance of the training points from their centroid."""
    X = _points(train)
    if X.shape[0] < 2:
        raise ValueError("need at least two training points")
    theta = float(((X - X.mean(axis=0)) ** 2).sum(axis=1).mean())
    if theta <= 0:
        raise ValueError("training points have zero variance")
    return theta


def d_typ(train, k=5):
    """Mean over points of the mean distance to their ``k`` nearest neighbours."""
    X = _points(train)
    if X.shape[0] <= k:
        raise ValueError(f"need more than k={k} points, got {X.shape[0]}")
    dist, _ = cKDTree(X).query(X, k=k + 1)
    # column 0 is the point itself (or a duplicate at distance 0, which is equivalent)
    return float(dist[:, 1:].mean())


def theta_next(train, theta_prev, alpha=0.5):
    """One relaxed maximum-entropy update of the temperature."""
    theta_prev = check_theta(theta_prev)
    X = _points(train)
    xbar = X.mean(axis=0)
    sq = ((X - xbar) ** 2).sum(axis=1)
    P = normalized_distribution(xbar, X, theta_prev)
    return alpha * float((sq * P).sum() / X.shape[0]) + (1.0 - alpha) * theta_prev


def _floor(train, k):
    n = _points(train).shape[0]
    k = min(k, n - 1)
    return THETA_FLOOR_FACTOR * d_typ(train, k) ** 2, d_typ(train, k)


def candidate_sequence(train, cfg=None):
    """Temperatures visited by the search when no validation-based stop applies."""
    cfg = cfg or ThetaSearchConfig()
    floor, _ = _floor(train, cfg.knn_k)
    theta = max(theta_initial(train), floor)
    seq = [theta]
    while len(seq) < cfg.max_iters:
        nxt = max(theta_next(train, theta, cfg.alpha), floor)
        if abs(nxt - theta) < cfg.rel_tol * theta:
            break
        seq.append(nxt)
        theta = nxt
    return seq


def validation_rmse(split, theta, level=CorrectionLevel.SECOND, cfg=None):
    """Fit on the training part at ``theta`` and score RMSE on the validation part."""
    model = fit(split.train, theta, level, cfg)
    return rmse(predict(model, split.validation.points), split.validation.values)


class _Memo:
    """Caches objective values for temperatures equal to within 1e-12 relative."""

    def __init__(self, fn):
        self.fn = fn
        self.keys = []
        self.vals = []
        self.calls = 0

    def __call__(self, theta):
        for k, v in zip(self.keys, self.vals):
            if abs(k - theta) <= 1e-12 * abs(k):
                return v
        v = self.fn(theta)
        self.calls += 1
        self.keys.append(theta)
        self.vals.append(v)
        return v


def search_theta(split, cfg=None, objective=None):
    """Walk the candidate sequence, scoring each temperature on the validation set.

    Stops when the validation error changes by less than ``rel_tol`` (relative),
    when the update step falls below ``rel_tol * theta``, or after
    ``max_iters`` candidates. ``objective(theta) -> error`` overrides the
    default validation RMSE at ``cfg.level`` (used by the RBF baseline).
    """
    cfg = cfg or ThetaSearchConfig()
    if objective is None:
        def objective(th):
            return validation_rmse(split, th, cfg.level, cfg.solver)
    evaluate = _Memo(objective)
    floor, dt = _floor(split.train, cfg.knn_k)
    theta = max(theta_initial(split.train), floor)
    trace = [(theta, evaluate(theta))]
    reason = StopReason.MAX_ITERS
    while len(trace) < cfg.max_iters:
        nxt = max(theta_next(split.train, theta, cfg.alpha), floor)
        if abs(nxt - theta) < cfg.rel_tol * theta:
            reason = StopReason.SMALL_STEP
            break
        err = evaluate(nxt)
        prev = trace[-1][1]
        trace.append((nxt, err))
        theta = nxt
        if math.isfinite(prev) and abs(err - prev) < cfg.rel_tol * abs(prev):
            reason = StopReason.CONVERGED
            break
    best = min(range(len(trace)), key=lambda i: trace[i][1])
    return ThetaSearchResult(trace[best][0], trace, dt, reason, evaluate.calls)


# ---------------------------------------------------------------------------
# conjugate-gradient alternative


@dataclass(frozen=True)
class CGConfig:
    max_iters: int = 50
    fd_step: float = 1e-4
    xtol: float = 1e-6
    gtol: float = 1e-12
    initial_step: float = 1.0
    max_halvings: int = 30
    max_restarts: int = 3
    c1: float = 1e-4


@dataclass
class CGResult:
    x: np.ndarray
    fun: float
    n_iter: int
    n_restarts: int
    reason: StopReason
    history: list


def nonlinear_cg(f, x0, cfg=None):
    """Polak-Ribiere (PR+) nonlinear CG with central-difference gradients.

    The line search is Armijo backtracking from a step whose length tracks
    the previous accepted step. A failed line search restarts along the
    steepest-descent direction; after ``max_restarts`` failures the best
    point seen is returned.
    """
    cfg = cfg or CGConfig()
    x = np.atleast_1d(np.asarray(x0, dtype=np.float64)).copy()
    h = cfg.fd_step

    def grad(x):
        g = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            g[i] = (f(x + e) - f(x - e)) / (2 * h)
        return g

    fx = f(x)
    history = [(x.copy(), fx)]
    best_x, best_f = x.copy(), fx
    if cfg.max_iters == 0:
        return CGResult(best_x, best_f, 0, 0, StopReason.MAX_ITERS, history)
    g = grad(x)
    d = -g
    length = cfg.initial_step
    restarts = 0
    reason = StopReason.MAX_ITERS
    it = 0
    while it < cfg.max_iters:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.gtol:
            reason = StopReason.CONVERGED
            break
        slope = float(g @ d)
        if slope >= 0:
            d, slope = -g, -gnorm**2
        dnorm = float(np.linalg.norm(d))
        step = length / dnorm
        accepted = False
        for _ in range(cfg.max_halvings):
            xn = x + step * d
            fn = f(xn)
            history.append((xn.copy(), fn))
            if fn < best_f:
                best_x, best_f = xn.copy(), fn
            if fn <= fx + cfg.c1 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            restarts += 1
            if restarts > cfg.max_restarts:
                reason = StopReason.SMALL_STEP
                break
            d = -g
            length = cfg.initial_step
            continue
        it += 1
        moved = step * dnorm
        x, fx = xn, fn
        g_new = grad(x)
        beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        d = -g_new + beta * d
        g = g_new
        length = 2.0 * moved
        if moved < cfg.xtol:
            reason = StopReason.SMALL_STEP
            break
    return CGResult(best_x, best_f, it, restarts, reason, history)


def search_theta_mle(split, level=CorrectionLevel.SECOND, cg_cfg=None, solver=None, knn_k=5):
    """Minimize validation RMSE over ``z = log(theta)`` by nonlinear CG."""
    cg_cfg = cg_cfg or CGConfig()
    level = CorrectionLevel.parse(level)
    evaluate = _Memo(lambda th: validation_rmse(split, th, level, solver))
    _, dt = _floor(split.train, knn_k)
    z0 = math.log(theta_initial(split.train))
    res = nonlinear_cg(lambda z: evaluate(math.exp(float(z[0]))), [z0], cg_cfg)
    trace = [(math.exp(float(z[0])), fz) for z, fz in res.history]
    theta_opt = math.exp(float(res.x[0]))
    return ThetaSearchResult(theta_opt, trace, dt, res.reason, evaluate.calls)
