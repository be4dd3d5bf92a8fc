"""Closed-form benchmark targets, samplers and the multiplicative noise model.

Random draws use ``numpy.random.default_rng`` (PCG64) throughout.
"""
import math
from dataclasses import dataclass

import numpy as np

from .dataset import RawDataset

CAMEL_K = 0.2
RASTRIGIN_A = 10.0


def franke(x):
    x = np.atleast_2d(x)
    a, b = 9.0 * x[:, 0], 9.0 * x[:, 1]
    return (
        0.75 * np.exp(-((a - 2) ** 2) / 4 - ((b - 2) ** 2) / 4)
        + 0.75 * np.exp(-((a + 1) ** 2) / 49 - ((b + 1) ** 2) / 10)
        + 0.5 * np.exp(-((a - 7) ** 2) / 4 - ((b - 3) ** 2) / 4)
        - 0.2 * np.exp(-((a - 4) ** 2) - (b - 7) ** 2)
    )


def camel(x, k=CAMEL_K):
    x = np.atleast_2d(x)
    d = x.shape[1]
    pref = 1.0 / (2.0 * (k * math.sqrt(math.pi)) ** d)
    h1 = np.exp(-((x - 1.0 / 3.0) ** 2).sum(axis=1) / k**2)
    h2 = np.exp(-((x - 2.0 / 3.0) ** 2).sum(axis=1) / k**2)
    return pref * (h1 + h2)


def ackley(x):
    x = np.atleast_2d(x)
    d = x.shape[1]
    return (
        -20.0 * np.exp(-0.2 * np.sqrt((x**2).sum(axis=1) / d))
        - np.exp(np.cos(2 * np.pi * x).sum(axis=1) / d)
        + 20.0
        + math.e
    )


def weierstrass(x, terms=3):
    x = np.atleast_2d(x)[:, 0]
    i = np.arange(terms)
    return ((0.75**i)[None, :] * np.cos((5.0**i)[None, :] * np.pi * x[:, None])).sum(axis=1)


def rastrigin(x, a=RASTRIGIN_A):
    x = np.atleast_2d(x)
    return (x**2 - a * np.cos(2 * np.pi * x) + a).sum(axis=1)


@dataclass(frozen=True)
class BenchmarkFunction:
    """A named target on ``[0, 1]^dim``. ``terms`` is the Weierstrass complexity."""

    name: str
    dim: int
    terms: int = 3

    def __post_init__(self):
        if self.name not in _FUNCS:
            raise ValueError(f"unknown function {self.name!r}; choose from {sorted(_FUNCS)}")
        fixed = _FIXED_DIM.get(self.name)
        if fixed is not None and self.dim != fixed:
            raise ValueError(f"{self.name} is defined for D={fixed}, got D={self.dim}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :] if self.dim > 1 or x.shape[0] == 1 else x[:, None]
        if x.shape[1] != self.dim:
            raise ValueError(f"{self.name} expects dimension {self.dim}, got {x.shape[1]}")
        if self.name == "weierstrass":
            return weierstrass(x, self.terms)
        return _FUNCS[self.name](x)

    @property
    def label(self):
        if self.name == "weierstrass":
            return f"weierstrass{self.terms}"
        return f"{self.name}{self.dim}d"


_FUNCS = {
    "franke": franke,
    "camel": camel,
    "ackley": ackley,
    "weierstrass": weierstrass,
    "rastrigin": rastrigin,
}
_FIXED_DIM = {"franke": 2, "ackley": 6, "weierstrass": 1}


def get_function(name, dim=None, terms=3):
    """Look up a benchmark by name. Accepts labels like ``franke2d`` or ``ackley6d``."""
    key = name.lower().replace("-", "").replace("_", "")
    for base in _FUNCS:
        if key.startswith(base):
            rest = key[len(base):].rstrip("d")
            if rest and dim is None:
                dim = int(rest)
            key = base
            break
    else:
        raise ValueError(f"unknown function {name!r}")
    if dim is None:
        dim = _FIXED_DIM.get(key, 1)
    return BenchmarkFunction(key, int(dim), int(terms))


def grid_points(n, dim):
    """First ``n`` nodes of the smallest regular lattice on ``[0,1]^dim`` with >= n nodes."""
    per_axis = max(2, math.ceil(round(n ** (1.0 / dim), 9)))
    while per_axis**dim < n:
        per_axis += 1
    ax = np.linspace(0.0, 1.0, per_axis)
    mesh = np.meshgrid(*([ax] * dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts[:n]


def sample(fn, n, mode="random", seed=0):
    """Sample ``fn`` at ``n`` points, uniformly at random or on a regular grid."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if mode in ("random", "uniform_random", "UniformRandom"):
        pts = np.random.default_rng(seed).random((n, fn.dim))
    elif mode in ("grid", "regular_grid", "RegularGrid"):
        pts = grid_points(n, fn.dim)
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return RawDataset(pts, fn(pts))


@dataclass(frozen=True)
class NoiseSpec:
    s: float = 0.0
    sigma: float = 1.0 / 3.0
    mu: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("noise scale s must be >= 0")


def add_noise(data, spec):
    """Multiplicative Gaussian noise ``phi * (1 + s * eps)``, ``eps ~ N(mu, sigma)``."""
    if spec.s == 0:
        return data
    eps = np.random.default_rng(spec.seed).normal(spec.mu, spec.sigma, size=data.n)
    return RawDataset(data.points, data.values * (1.0 + spec.s * eps))
