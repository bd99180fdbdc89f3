"""Kernel dispatch between the numba and pure-numpy implementations.

The default backend is numba when it imports; setting the environment
variable ``FAIRLLOYD_NO_NUMBA=1`` before import forces the numpy path.
``use_backend`` switches temporarily (process-wide, not thread-local).
"""
import os
from contextlib import contextmanager

from . import _numpy

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

_IMPLS = {"numpy": _numpy}
if _numba is not None:
    _IMPLS["numba"] = _numba


def _default_backend():
    if _numba is None or os.environ.get("FAIRLLOYD_NO_NUMBA", "") not in ("", "0"):
        return "numpy"
    return "numba"


_active = _default_backend()


def available_backends():
    return tuple(_IMPLS)


def get_backend():
    return _active


def set_backend(name):
    global _active
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name


@contextmanager
def use_backend(name):
    prev = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def impl(name=None):
    return _IMPLS[name or _active]


def nearest_center(points, centers):
    return _IMPLS[_active].nearest_center(points, centers)


def cell_stats(points, labels, groups, k, m):
    return _IMPLS[_active].cell_stats(points, labels, groups, k, m)


def assigned_cost(points, centers, labels, groups, subset=-1):
    return _IMPLS[_active].assigned_cost(points, centers, labels, groups, subset)


def group_costs(centers, frac, mu, base):
    return _IMPLS[_active].group_costs(centers, frac, mu, base)


def centers_from_gamma(gamma, frac, mu):
    return _IMPLS[_active].centers_from_gamma(gamma, frac, mu)


def mwu(frac, mu, base, T):
    return _IMPLS[_active].mwu(frac, mu, base, T)


def dual_ascent(frac, mu, base, T, tol):
    return _IMPLS[_active].dual_ascent(frac, mu, base, T, tol)


def primal_subgradient(frac, mu, base, present, weights, T, scale, target=-1.0):
    return _IMPLS[_active].primal_subgradient(frac, mu, base, present, weights, T, scale, target)
