"""Plain Gaussian RBF interpolation, the global dense-solve baseline.

No polynomial tail and no preconditioner. The only conditioning aid is a
diagonal ridge that escalates ``0 -> 1e-10 -> 1e-8`` when the Cholesky
factorization of the Gram matrix breaks down.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .kernel import check_theta

log = logging.getLogger(__name__)

RIDGE_LADDER = (1e-10, 1e-8)


class RbfFitError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class RbfModel:
    centers: np.ndarray
    weights: np.ndarray
    theta: float
    ridge: float

    @property
    def dim(self):
        return self.centers.shape[1]


def _sqdist(a, b):
    # direct differences; the expansion trick loses the exact zero on the diagonal
    out = np.empty((a.shape[0], b.shape[0]))
    step = max(1, (1 << 20) // max(b.shape[0] * a.shape[1], 1))
    for s in range(0, a.shape[0], step):
        diff = a[s:s + step, None, :] - b[None, :, :]
        out[s:s + step] = np.einsum("bnd,bnd->bn", diff, diff)
    return out


def gram(points, theta):
    return np.exp(-_sqdist(points, points) / (2.0 * theta))


def rbf_fit(train, theta, ridge=0.0):
    """Solve ``(G + ridge I) w = phi`` by Cholesky, escalating the ridge on failure."""
    theta = check_theta(theta)
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    X, phi = train.points, train.values
    G = gram(X, theta)
    ladder = [ridge] + [r for r in RIDGE_LADDER if r > ridge]
    for r in ladder:
        A = G + r * np.eye(G.shape[0]) if r > 0 else G
        try:
            c = linalg.cho_factor(A, lower=True, check_finite=False)
            w = linalg.cho_solve(c, phi, check_finite=False)
        except linalg.LinAlgError:
            log.info("rbf Cholesky failed at ridge=%g (theta=%g), escalating", r, theta)
            continue
        if np.isfinite(w).all():
            if r != ridge:
                log.info("rbf fit used ridge=%g (theta=%g)", r, theta)
            return RbfModel(X.copy(), w, theta, r)
    cond = np.linalg.cond(G)
    raise RbfFitError(f"Gram matrix not factorizable up to ridge {ladder[-1]:g} (cond ~ {cond:.3g})")


def rbf_predict(model, queries):
    Q = np.asarray(queries, dtype=np.float64)
    if Q.ndim == 1:
        Q = Q[:, None] if model.dim == 1 else Q[None, :]
    if Q.shape[1] != model.dim:
        raise ValueError(f"expected dimension {model.dim}, found {Q.shape[1]}")
    out = np.empty(Q.shape[0])
    step = max(1, (1 << 18) // max(model.centers.shape[0], 1))
    for s in range(0, Q.shape[0], step):
        K = np.exp(-_sqdist(Q[s:s + step], model.centers) / (2.0 * model.theta))
        out[s:s + step] = K @ model.weights
    return out


def rbf_tune(split, candidates=None, cfg=None):
    """Pick the RBF shape parameter from the kinetic temperature-search candidates.

    Returns ``(theta, validation_rmse, trace)``. Candidates whose fit fails
    outright are recorded with ``inf`` RMSE.
    """
    from .metrics import rmse
    from .temperature import ThetaSearchConfig, candidate_sequence

    if candidates is None:
        candidates = candidate_sequence(split.train, cfg or ThetaSearchConfig())
    trace = []
    for th in candidates:
        try:
            m = rbf_fit(split.train, th)
            e = rmse(rbf_predict(m, split.validation.points), split.validation.values)
        except RbfFitError:
            e = math.inf
        trace.append((float(th), e))
    if not trace:
        raise ValueError("no candidate temperatures")
    best = min(range(len(trace)), key=lambda i: trace[i][1])
    return trace[best][0], trace[best][1], trace
