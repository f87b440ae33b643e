"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting
``GRAVCOLLAPSE_BACKEND=python`` forces the numpy fallback.
"""
from __future__ import annotations

import logging
import os

import numpy as np

from . import _kernels_py

log = logging.getLogger(__name__)


def _load(name: str | None = None):
    choice = (name or os.environ.get("GRAVCOLLAPSE_BACKEND", "auto")).lower()
    if choice == "python":
        return _kernels_py, "python"
    if choice not in ("auto", "cython"):
        raise ValueError(f"unknown kernel backend {choice!r}")
    try:
        from . import _kernels
    except ImportError:
        if choice == "cython":
            raise
        log.info("compiled kernels unavailable, using the numpy fallback")
        return _kernels_py, "python"
    return _kernels, "cython"


_impl, BACKEND = _load()


def use_backend(name: str) -> str:
    """Switch backend at runtime (``"python"``, ``"cython"`` or ``"auto"``)."""
    global _impl, BACKEND
    _impl, BACKEND = _load(name)
    return BACKEND


def tridiag_solve(lower, diag, upper, rhs):
    c = lambda x: np.ascontiguousarray(x, dtype=np.complex128)
    return _impl.tridiag_solve(c(lower), c(diag), c(upper), c(rhs))


def radial_step(u, pot, h, mass, z_impl, z_expl):
    return _impl.radial_step(np.ascontiguousarray(u, dtype=np.complex128),
                             np.ascontiguousarray(pot, dtype=np.float64),
                             float(h), float(mass), complex(z_impl), complex(z_expl))


def inverse_distance_moments(a, b) -> tuple[float, float]:
    """``(sum 1/r, sum 1/r^2)`` over paired rows of two ``(n, 3)`` arrays."""
    f = lambda x: np.ascontiguousarray(x, dtype=np.float64)
    s1, s2 = _impl.inverse_distance_moments(f(a), f(b))
    return float(s1), float(s2)
