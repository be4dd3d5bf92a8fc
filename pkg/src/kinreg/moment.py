"""First-moment correction: shift the kernel center so the weighted mean of the
centers reproduces the query point.

For a query ``x`` we look for ``xt = x + delta`` with

    sum_i (x - x_i) exp(-|xt - x_i|^2 / (2 theta)) = 0

and solve it by Newton's method, starting at ``xt = x``. The Jacobian of the
residual is ``-A`` with ``A[a, k] = sum_i (x_a - x_ia)(xt_k - x_ik) w_i / theta``,
so each step solves ``A @ step = r``. In 1D this is the familiar update
``xt += theta * r / sum_i (xt - x_i)(x - x_i) w_i``.

Unnormalized weights suffice for the root; convergence is nevertheless judged
on the normalized residual ``|x - sum_i x_i P_i|``, which is scale free and
does not vanish spuriously when every weight underflows.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kernel import check_theta

DIVERGENCE_FACTOR = 10.0

_STATUS_NAMES = {
    _kernels.CONVERGED: "converged",
    _kernels.MAX_ITER: "max_iter",
    _kernels.SINGULAR: "singular",
    _kernels.DIVERGED: "diverged",
    _kernels.STALLED: "stalled",
}


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and conditioning aid for the Newton iteration."""

    tol_resid: float = 1e-10
    max_iter: int = 50
    ridge: float = 1e-12

    def __post_init__(self):
        if not self.tol_resid > 0:
            raise ValueError("tol_resid must be > 0")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")


@dataclass(frozen=True)
class MomentCorrection:
    delta: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    status: str = "converged"


@dataclass(frozen=True)
class BatchCorrection:
    """Per-query results of :func:`solve_first_moment_batch`, as parallel arrays."""

    delta: np.ndarray
    residual_norm: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    status: np.ndarray

    def __len__(self):
        return self.delta.shape[0]

    def __getitem__(self, i):
        return MomentCorrection(
            delta=self.delta[i].copy(),
            residual_norm=float(self.residual_norm[i]),
            iterations=int(self.iterations[i]),
            converged=bool(self.converged[i]),
            status=_STATUS_NAMES[int(self.status[i])],
        )


def domain_diameter(points):
    """Diagonal of the bounding box of ``points``."""
    span = points.max(axis=0) - points.min(axis=0)
    return float(np.sqrt((span**2).sum()))


def _as_points(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of points")
    return a


def solve_first_moment_batch(queries, centers, theta, cfg=None):
    """Solve the first-moment condition for each row of ``queries``.

    Queries whose solve fails keep the ``delta`` of their last accepted
    iterate and are flagged ``converged=False``; callers decide the fallback.
    """
    cfg = cfg or SolverConfig()
    theta = check_theta(theta)
    centers = _as_points(centers, "centers")
    queries = _as_points(queries, "queries")
    if queries.shape[1] != centers.shape[1]:
        raise ValueError(
            f"queries have dimension {queries.shape[1]}, centers have {centers.shape[1]}"
        )
    if centers.shape[0] < 2:
        raise ValueError("need at least two centers")
    max_shift = DIVERGENCE_FACTOR * max(domain_diameter(centers), np.finfo(float).tiny)
    xt, res, iters, status = _kernels.first_moment_batch(
        queries, centers, theta, cfg.tol_resid, cfg.max_iter, cfg.ridge, max_shift
    )
    return BatchCorrection(
        delta=xt - queries,
        residual_norm=res,
        iterations=iters,
        converged=status == _kernels.CONVERGED,
        status=status,
    )


def solve_first_moment(query, centers, theta, cfg=None):
    """Single-query form of :func:`solve_first_moment_batch`."""
    centers = _as_points(centers, "centers")
    query = np.asarray(query, dtype=np.float64).reshape(1, -1)
    if len(np.unique(centers, axis=0)) < 2:
        raise ValueError("need at least two distinct centers")
    return solve_first_moment_batch(query, centers, theta, cfg)[0]


def first_moment_residual(query, xt, centers, theta, normalized=True):
    """``sum_i (x - x_i) P_i`` with weights evaluated at the shifted center ``xt``."""
    theta = check_theta(theta)
    centers = _as_points(centers, "centers")
    x = np.asarray(query, dtype=np.float64).reshape(-1)
    xt = np.asarray(xt, dtype=np.float64).reshape(-1)
    d2 = ((centers - xt) ** 2).sum(axis=1)
    if normalized:
        w = np.exp(-(d2 - d2.min()) / (2 * theta))
        w /= w.sum()
    else:
        w = np.exp(-d2 / (2 * theta))
    return ((x - centers) * w[:, None]).sum(axis=0)


def newton_step_1d(query, xt, centers, theta):
    """One closed-form 1D update of the shifted center (unnormalized weights)."""
    centers = np.asarray(centers, dtype=np.float64).reshape(-1)
    x, xt = float(query), float(xt)
    w = np.exp(-((xt - centers) ** 2) / (2 * theta))
    num = ((x - centers) * w).sum()
    den = ((xt - centers) * (x - centers) * w).sum()
    return xt + theta * num / den


def solve_dense(A, b):
    """Solve a small dense system ``A y = b``.

    Raises ``numpy.linalg.LinAlgError`` when ``A`` is rank deficient.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    if not np.isfinite(A).all():
        raise ValueError("A must be finite")
    ok, y = _kernels.solve_small(A, b)
    if not ok:
        raise np.linalg.LinAlgError("matrix is singular to working precision")
    return y
