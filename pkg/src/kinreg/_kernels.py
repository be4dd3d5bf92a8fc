"""Hot loops: first-moment Newton solve and normalized Gaussian averages.

Each routine exists twice, a numba version (``_nb_*``) that walks one query
at a time with O(N) scratch, and a blocked numpy version (``_np_*``) whose
temporaries are capped at ``_BLOCK_ELEMS`` doubles per (query, center) slab.
Neither ever materializes a queries-by-centers matrix for the full batch.

Queries on which the Newton iteration fails get a second attempt with the
convex formulation of the same condition. Writing ``xt = theta * lam``, the
weights form an exponential family in ``lam`` and the root minimizes

    G(xt) = log sum_i exp(-|xt - x_i|^2 / (2 theta)) + |xt - x|^2 / (2 theta),

whose gradient is ``(E_P[x_i] - x) / theta`` and whose Hessian is the weighted
covariance of the centers over ``theta^2``. A minimum exists exactly when the
query is inside the convex hull of the centers. Damped Newton with an Armijo
search on ``G`` keeps making progress in the exponential tails, where the
residual itself is flat to double precision.

The Gaussian weights are shifted by the smallest squared distance before
exponentiation. The first-moment residual and its Jacobian are homogeneous
in the weights, so the shift does not move the root; it only keeps the sums
finite in the cold regime.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

_BLOCK_ELEMS = 1 << 18
_MAX_HALVINGS = 30
# exp(-745) underflows to zero in double precision
_EXP_CUTOFF = 745.0
_PIVOT_RTOL = 1e-15
_ARMIJO_C1 = 1e-4
_G_RTOL = 1e-9

# status codes returned per query
CONVERGED = 0
MAX_ITER = 1
SINGULAR = 2
DIVERGED = 3
STALLED = 4


@njit
def _gauss_solve(A, b, out):
    """Solve ``A @ out = b`` by partial-pivot elimination. Returns False if singular.

    ``A`` and ``b`` are overwritten.
    """
    n = A.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(A[i, j])
            if v > scale:
                scale = v
    if not (scale > 0.0) or not math.isfinite(scale):
        return False
    for k in range(n):
        p = k
        best = abs(A[k, k])
        for i in range(k + 1, n):
            v = abs(A[i, k])
            if v > best:
                best = v
                p = i
        if best <= _PIVOT_RTOL * scale:
            return False
        if p != k:
            for j in range(n):
                t = A[k, j]
                A[k, j] = A[p, j]
                A[p, j] = t
            t = b[k]
            b[k] = b[p]
            b[p] = t
        for i in range(k + 1, n):
            f = A[i, k] / A[k, k]
            if f != 0.0:
                for j in range(k, n):
                    A[i, j] -= f * A[k, j]
                b[i] -= f * b[k]
    for i in range(n - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, n):
            s -= A[i, j] * out[j]
        out[i] = s / A[i, i]
    return True


@njit(fastmath=True)
def _nb_residual(x, xt, centers, inv2t, d2, r, A):
    """Residual ``r = sum_i (x - x_i) w_i`` and ``A = sum_i (x - x_i)(xt - x_i)^T w_i``
    with shifted weights ``w_i``; returns ``|r| / sum_i w_i``.
    """
    n, d = centers.shape
    dmin = np.inf
    for i in range(n):
        s = 0.0
        for a in range(d):
            t = xt[a] - centers[i, a]
            s += t * t
        d2[i] = s
        if s < dmin:
            dmin = s
    total = 0.0
    for a in range(d):
        r[a] = 0.0
        for k in range(d):
            A[a, k] = 0.0
    for i in range(n):
        e = (d2[i] - dmin) * inv2t
        if e > _EXP_CUTOFF:
            continue
        wi = math.exp(-e)
        total += wi
        for a in range(d):
            fa = (x[a] - centers[i, a]) * wi
            r[a] += fa
            for k in range(d):
                A[a, k] += fa * (xt[k] - centers[i, k])
    nrm = 0.0
    for a in range(d):
        nrm += r[a] * r[a]
    return math.sqrt(nrm) / total


@njit
def _nb_first_moment_one(x, centers, theta, tol, max_iter, ridge, max_shift, xt):
    n, d = centers.shape
    inv2t = 0.5 / theta
    d2 = np.empty(n)
    r = np.empty(d)
    r_try = np.empty(d)
    A = np.empty((d, d))
    A_try = np.empty((d, d))
    M = np.empty((d, d))
    rhs = np.empty(d)
    step = np.empty(d)
    cand = np.empty(d)
    for a in range(d):
        xt[a] = x[a]
    res = _nb_residual(x, xt, centers, inv2t, d2, r, A)
    it = 0
    while True:
        if res <= tol:
            return res, it, CONVERGED
        if it >= max_iter:
            return res, it, MAX_ITER
        tr = 0.0
        for a in range(d):
            for k in range(d):
                M[a, k] = A[a, k] / theta
            tr += M[a, a]
        boost = ridge * abs(tr) / d
        for a in range(d):
            M[a, a] += boost
            rhs[a] = r[a]
        if not _gauss_solve(M, rhs, step):
            return res, it, SINGULAR
        lam = 1.0
        accepted = False
        res_try = res
        for _ in range(_MAX_HALVINGS + 1):
            far = 0.0
            finite = True
            for a in range(d):
                cand[a] = xt[a] + lam * step[a]
                if not math.isfinite(cand[a]):
                    finite = False
                far += (cand[a] - x[a]) ** 2
            if not finite or math.sqrt(far) > max_shift:
                return res, it, DIVERGED
            res_try = _nb_residual(x, cand, centers, inv2t, d2, r_try, A_try)
            if res_try < res:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return res, it, STALLED
        it += 1
        res = res_try
        for a in range(d):
            xt[a] = cand[a]
            r[a] = r_try[a]
            for k in range(d):
                A[a, k] = A_try[a, k]

@njit
def _nb_dual_moments(x, xt, centers, inv2t, d2, mean, cov):
    """Objective ``G``, mean ``E_P[c]`` and covariance of the centers under ``P(xt)``.

    Returns ``(G, |x - E_P[c]|)``.
    """
    n, d = centers.shape
    dmin = np.inf
    for i in range(n):
        s = 0.0
        for a in range(d):
            t = xt[a] - centers[i, a]
            s += t * t
        d2[i] = s
        if s < dmin:
            dmin = s
    total = 0.0
    for a in range(d):
        mean[a] = 0.0
    for i in range(n):
        e = (d2[i] - dmin) * inv2t
        if e > _EXP_CUTOFF:
            continue
        wi = math.exp(-e)
        total += wi
        for a in range(d):
            mean[a] += wi * centers[i, a]
    for a in range(d):
        mean[a] /= total
        for k in range(d):
            cov[a, k] = 0.0
    for i in range(n):
        e = (d2[i] - dmin) * inv2t
        if e > _EXP_CUTOFF:
            continue
        wi = math.exp(-e) / total
        for a in range(d):
            fa = (centers[i, a] - mean[a]) * wi
            for k in range(a, d):
                cov[a, k] += fa * (centers[i, k] - mean[k])
    for a in range(d):
        for k in range(a):
            cov[a, k] = cov[k, a]
    sx = 0.0
    res = 0.0
    for a in range(d):
        sx += (xt[a] - x[a]) ** 2
        res += (x[a] - mean[a]) ** 2
    g = -dmin * inv2t + math.log(total) + sx * inv2t
    return g, math.sqrt(res)


@njit
def _nb_dual_newton_one(x, centers, theta, tol, max_iter, ridge, max_shift, xt):
    n, d = centers.shape
    inv2t = 0.5 / theta
    max_step = 0.1 * max_shift
    d2 = np.empty(n)
    mean = np.empty(d)
    cov = np.empty((d, d))
    mean_t = np.empty(d)
    cov_t = np.empty((d, d))
    M = np.empty((d, d))
    rhs = np.empty(d)
    step = np.empty(d)
    cand = np.empty(d)
    for a in range(d):
        xt[a] = x[a]
    g, res = _nb_dual_moments(x, xt, centers, inv2t, d2, mean, cov)
    it = 0
    while True:
        if res <= tol:
            return res, it, CONVERGED
        if it >= max_iter:
            return res, it, MAX_ITER
        tr = 0.0
        for a in range(d):
            for k in range(d):
                M[a, k] = cov[a, k]
            tr += cov[a, a]
        for a in range(d):
            M[a, a] += ridge * tr / d
            rhs[a] = x[a] - mean[a]
        ok = tr > 0 and _gauss_solve(M, rhs, step)
        nrm = 0.0
        for a in range(d):
            if ok:
                step[a] *= theta
            else:
                step[a] = x[a] - mean[a]  # steepest descent on G
            nrm += step[a] * step[a]
        nrm = math.sqrt(nrm)
        if not math.isfinite(nrm) or nrm == 0.0:
            return res, it, SINGULAR
        if nrm > max_step:
            for a in range(d):
                step[a] *= max_step / nrm
        slope = 0.0
        for a in range(d):
            slope += (mean[a] - x[a]) * step[a] / theta
        lam = 1.0
        accepted = False
        g_try = g
        res_try = res
        for _ in range(2 * _MAX_HALVINGS + 1):
            far = 0.0
            for a in range(d):
                cand[a] = xt[a] + lam * step[a]
                far += (cand[a] - x[a]) ** 2
            if math.sqrt(far) > max_shift:
                return res, it, DIVERGED
            g_try, res_try = _nb_dual_moments(x, cand, centers, inv2t, d2, mean_t, cov_t)
            # near the root the decrease of G drowns in rounding; a smaller
            # residual is then accepted as long as G does not grow
            if g_try <= g + _ARMIJO_C1 * lam * slope or (
                res_try < res and g_try <= g + _G_RTOL * (1.0 + abs(g))
            ):
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return res, it, STALLED
        it += 1
        g = g_try
        res = res_try
        for a in range(d):
            xt[a] = cand[a]
            mean[a] = mean_t[a]
            for k in range(d):
                cov[a, k] = cov_t[a, k]


@njit
def _nb_first_moment_batch(queries, centers, theta, tol, max_iter, ridge, max_shift):
    m, d = queries.shape
    xt = np.empty((m, d))
    res = np.empty(m)
    iters = np.empty(m, dtype=np.int64)
    status = np.empty(m, dtype=np.int64)
    alt = np.empty(d)
    for q in range(m):
        r, it, st = _nb_first_moment_one(
            queries[q], centers, theta, tol, max_iter, ridge, max_shift, xt[q]
        )
        if st != CONVERGED:
            r2, it2, st2 = _nb_dual_newton_one(
                queries[q], centers, theta, tol, max_iter, ridge, max_shift, alt
            )
            if st2 == CONVERGED:
                xt[q, :] = alt
                r, it, st = r2, it2, st2
        res[q] = r
        iters[q] = it
        status[q] = st
    return xt, res, iters, status


@njit
def _nb_kernel_average(points, centers, values, theta):
    m, d = points.shape
    n = centers.shape[0]
    inv2t = 0.5 / theta
    out = np.empty(m)
    d2 = np.empty(n)
    for q in range(m):
        dmin = np.inf
        for i in range(n):
            s = 0.0
            for a in range(d):
                t = points[q, a] - centers[i, a]
                s += t * t
            d2[i] = s
            if s < dmin:
                dmin = s
        num = 0.0
        den = 0.0
        for i in range(n):
            wi = math.exp(-(d2[i] - dmin) * inv2t)
            num += wi * values[i]
            den += wi
        out[q] = num / den
    return out


# ---------------------------------------------------------------------------
# numpy fallback

_py_gauss_solve = getattr(_gauss_solve, "py_func", _gauss_solve)


def _blocks(m, n):
    b = max(1, _BLOCK_ELEMS // max(n, 1))
    for start in range(0, m, b):
        yield slice(start, min(m, start + b))


def _np_weights(pts, centers, inv2t):
    diff = pts[:, None, :] - centers[None, :, :]
    d2 = np.einsum("bnd,bnd->bn", diff, diff)
    d2 -= d2.min(axis=1, keepdims=True)
    return np.exp(-d2 * inv2t)


def _np_residual(x, xt, centers, inv2t):
    w = _np_weights(xt, centers, inv2t)
    r = np.einsum("bn,bnd->bd", w, x[:, None, :] - centers[None, :, :])
    total = w.sum(axis=1)
    return np.sqrt(np.einsum("bd,bd->b", r, r)) / total, w, r


def _np_first_moment_block(x, centers, theta, tol, max_iter, ridge, max_shift):
    b, d = x.shape
    inv2t = 0.5 / theta
    xt = x.copy()
    res, w, r = _np_residual(x, xt, centers, inv2t)
    iters = np.zeros(b, dtype=np.int64)
    status = np.full(b, -1, dtype=np.int64)
    for it in range(max_iter + 1):
        status[(status < 0) & (res <= tol)] = CONVERGED
        active = np.flatnonzero(status < 0)
        if active.size == 0:
            break
        if it == max_iter:
            status[active] = MAX_ITER
            break
        xa = x[active]
        dx = xa[:, None, :] - centers[None, :, :]
        dt = xt[active][:, None, :] - centers[None, :, :]
        A = np.einsum("bn,bna,bnk->bak", w[active], dx, dt) / theta
        tr = np.trace(A, axis1=1, axis2=2)
        A[:, np.arange(d), np.arange(d)] += (ridge * np.abs(tr) / d)[:, None]
        step = np.empty((active.size, d))
        ok = np.ones(active.size, dtype=bool)
        for j in range(active.size):
            Aj = A[j].copy()
            rj = r[active[j]].copy()
            ok[j] = _py_gauss_solve(Aj, rj, step[j])
        status[active[~ok]] = SINGULAR
        pending = active[ok]
        step = step[ok]
        lam = np.ones(pending.size)
        for _ in range(_MAX_HALVINGS + 1):
            if pending.size == 0:
                break
            cand = xt[pending] + lam[:, None] * step
            far = np.sqrt(((cand - x[pending]) ** 2).sum(axis=1))
            bad = ~np.isfinite(cand).all(axis=1) | (far > max_shift)
            status[pending[bad]] = DIVERGED
            keep = ~bad
            pending, step, lam, cand = pending[keep], step[keep], lam[keep], cand[keep]
            if pending.size == 0:
                break
            res_t, w_t, r_t = _np_residual(x[pending], cand, centers, inv2t)
            better = res_t < res[pending]
            acc = pending[better]
            xt[acc] = cand[better]
            res[acc] = res_t[better]
            w[acc] = w_t[better]
            r[acc] = r_t[better]
            iters[acc] += 1
            pending, step, lam = pending[~better], step[~better], lam[~better] * 0.5
        status[pending] = STALLED
    return xt, res, iters, status


def _np_dual_moments(x, xt, centers, inv2t):
    d2 = ((centers - xt) ** 2).sum(axis=1)
    dmin = d2.min()
    w = np.exp(-(d2 - dmin) * inv2t)
    total = w.sum()
    p = w / total
    mean = p @ centers
    dev = centers - mean
    cov = (dev * p[:, None]).T @ dev
    g = -dmin * inv2t + math.log(total) + ((xt - x) ** 2).sum() * inv2t
    return g, float(np.sqrt(((x - mean) ** 2).sum())), mean, cov


def _np_dual_newton_one(x, centers, theta, tol, max_iter, ridge, max_shift):
    d = x.shape[0]
    inv2t = 0.5 / theta
    max_step = 0.1 * max_shift
    xt = x.copy()
    g, res, mean, cov = _np_dual_moments(x, xt, centers, inv2t)
    it = 0
    while True:
        if res <= tol:
            return xt, res, it, CONVERGED
        if it >= max_iter:
            return xt, res, it, MAX_ITER
        tr = float(np.trace(cov))
        M = cov + (ridge * tr / d) * np.eye(d)
        step = np.empty(d)
        ok = tr > 0 and _py_gauss_solve(M, x - mean, step)
        step = theta * step if ok else x - mean
        nrm = float(np.sqrt((step**2).sum()))
        if not math.isfinite(nrm) or nrm == 0.0:
            return xt, res, it, SINGULAR
        if nrm > max_step:
            step *= max_step / nrm
        slope = float((mean - x) @ step) / theta
        lam = 1.0
        for _ in range(2 * _MAX_HALVINGS + 1):
            cand = xt + lam * step
            if np.sqrt(((cand - x) ** 2).sum()) > max_shift:
                return xt, res, it, DIVERGED
            g_t, res_t, mean_t, cov_t = _np_dual_moments(x, cand, centers, inv2t)
            if g_t <= g + _ARMIJO_C1 * lam * slope or (res_t < res and g_t <= g + _G_RTOL * (1.0 + abs(g))):
                break
            lam *= 0.5
        else:
            return xt, res, it, STALLED
        it += 1
        xt, g, res, mean, cov = cand, g_t, res_t, mean_t, cov_t


def _np_first_moment_batch(queries, centers, theta, tol, max_iter, ridge, max_shift):
    m, d = queries.shape
    xt = np.empty((m, d))
    res = np.empty(m)
    iters = np.empty(m, dtype=np.int64)
    status = np.empty(m, dtype=np.int64)
    for sl in _blocks(m, centers.shape[0] * d):
        xt[sl], res[sl], iters[sl], status[sl] = _np_first_moment_block(
            queries[sl], centers, theta, tol, max_iter, ridge, max_shift
        )
    for q in np.flatnonzero(status != CONVERGED):
        xt2, r2, it2, st2 = _np_dual_newton_one(queries[q], centers, theta, tol, max_iter, ridge, max_shift)
        if st2 == CONVERGED:
            xt[q], res[q], iters[q], status[q] = xt2, r2, it2, st2
    return xt, res, iters, status


def _np_kernel_average(points, centers, values, theta):
    out = np.empty(points.shape[0])
    inv2t = 0.5 / theta
    for sl in _blocks(points.shape[0], centers.shape[0] * centers.shape[1]):
        w = _np_weights(points[sl], centers, inv2t)
        # row-wise reduction, not a matmul: BLAS blocking would make a query's
        # result depend on which batch it arrived in
        out[sl] = (w * values).sum(axis=1) / w.sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# dispatch


def first_moment_batch(queries, centers, theta, tol, max_iter, ridge, max_shift):
    """Newton solve of the first-moment condition for every row of ``queries``.

    Returns ``(xt, residual, iterations, status)``; see the module status codes.
    """
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    args = (queries, centers, float(theta), float(tol), int(max_iter), float(ridge), float(max_shift))
    if _accel.get_backend() == "numba":
        return _nb_first_moment_batch(*args)
    return _np_first_moment_batch(*args)


def kernel_average(points, centers, values, theta):
    """Normalized Gaussian average of ``values`` evaluated at each row of ``points``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    if _accel.get_backend() == "numba":
        return _nb_kernel_average(points, centers, values, float(theta))
    return _np_kernel_average(points, centers, values, float(theta))


def solve_small(A, b):
    """Dense partial-pivot solve used inside the Newton loop (copies its inputs)."""
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    out = np.empty(b.shape[0])
    fn = _gauss_solve if _accel.get_backend() == "numba" else _py_gauss_solve
    return fn(A, b, out), out
