"""Backend selection for the hot loops.

Set ``KINREG_DISABLE_NUMBA=1`` before import to force the pure-numpy path.
``set_backend`` switches at runtime (tests compare both paths).
"""
import os

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

_FLAG = os.environ.get("KINREG_DISABLE_NUMBA", "").strip().lower()
_backend = "numpy" if (_FLAG in ("1", "true", "yes", "on") or not HAS_NUMBA) else "numba"


def get_backend():
    return _backend


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, _backend = _backend, name
    return prev


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise."""
    kwargs.setdefault("cache", True)
    if HAS_NUMBA:
        from numba import njit as _njit

        return _njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f
