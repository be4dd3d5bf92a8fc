"""Gaussian kernel and the zeroth-moment normalized distribution.

The ``(2 pi theta)^(-D/2)`` prefactor is dropped everywhere: every consumer
either normalizes the weights or uses them in a ratio.
"""
import math

import numpy as np

from ._kernels import kernel_average


def check_theta(theta):
    """Return ``theta`` as a float, raising ``ValueError`` unless it is finite and positive."""
    theta = float(theta)
    if not (theta > 0.0 and math.isfinite(theta)):
        raise ValueError(f"temperature must be finite and > 0, got {theta!r}")
    return theta


def gaussian_unnorm(sq_dist, theta):
    """``exp(-sq_dist / (2 theta))``; broadcasts over arrays."""
    theta = check_theta(theta)
    return np.exp(-np.asarray(sq_dist, dtype=np.float64) / (2.0 * theta))


def normalized_distribution(query, centers, theta):
    """Discrete distribution ``P_i`` of ``query`` over ``centers`` (sums to one).

    Uses the max-shift trick, so the result is finite for any finite input
    and any positive ``theta``, including the cold limit.
    """
    theta = check_theta(theta)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim == 1:
        centers = centers[:, None]  # a flat sequence is a list of 1D points
    if centers.shape[0] == 0:
        raise ValueError("need at least one center")
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.shape[0] != centers.shape[1]:
        raise ValueError(f"query has dimension {query.shape[0]}, centers have {centers.shape[1]}")
    d2 = ((centers - query) ** 2).sum(axis=1)
    w = np.exp(-(d2 - d2.min()) / (2.0 * theta))
    return w / w.sum()


__all__ = ["check_theta", "gaussian_unnorm", "kernel_average", "normalized_distribution"]
