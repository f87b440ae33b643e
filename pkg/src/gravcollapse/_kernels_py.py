"""Pure numpy/scipy versions of the compiled kernels."""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded


def tridiag_solve(lower, diag, upper, rhs):
    diag = np.asarray(diag, dtype=complex)
    n = diag.size
    if not (len(lower) == len(upper) == len(rhs) == n):
        raise ValueError("band and right-hand side lengths differ")
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = np.asarray(upper)[:-1]
    ab[1] = diag
    ab[2, :-1] = np.asarray(lower)[1:]
    try:
        return solve_banded((1, 1), ab, np.asarray(rhs, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise ZeroDivisionError("singular tridiagonal system") from exc


def radial_step(u, pot, h, mass, z_impl, z_expl):
    u = np.asarray(u, dtype=complex)
    pot = np.asarray(pot, dtype=float)
    k = 1.0 / (2.0 * mass * h * h)
    hu = (2 * k + pot) * u
    hu[1:] -= k * u[:-1]
    hu[:-1] -= k * u[1:]
    rhs = u - z_expl * hu
    n = u.size
    ab = np.empty((3, n), dtype=complex)
    ab[0] = -z_impl * k
    ab[1] = 1.0 + z_impl * (2 * k + pot)
    ab[2] = -z_impl * k
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def inverse_distance_moments(a, b):
    inv = 1.0 / np.linalg.norm(np.asarray(a) - np.asarray(b), axis=1)
    return float(inv.sum()), float(np.dot(inv, inv))
