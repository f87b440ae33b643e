# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: tridiagonal solves, implicit radial steps and the
pair-distance sum used by the Monte Carlo self-energy oracle."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def tridiag_solve(const double complex[::1] lower, const double complex[::1] diag,
                  const double complex[::1] upper, const double complex[::1] rhs):
    """Thomas algorithm; ``lower[0]`` and ``upper[n-1]`` are ignored."""
    cdef Py_ssize_t n = diag.shape[0], i
    if lower.shape[0] != n or upper.shape[0] != n or rhs.shape[0] != n:
        raise ValueError("band and right-hand side lengths differ")
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] x = out
    cdef double complex[::1] cp = np.empty(n, dtype=np.complex128)
    cdef double complex den
    if diag[0] == 0:
        raise ZeroDivisionError("singular tridiagonal system")
    cp[0] = upper[0] / diag[0]
    x[0] = rhs[0] / diag[0]
    for i in range(1, n):
        den = diag[i] - lower[i] * cp[i - 1]
        if den == 0:
            raise ZeroDivisionError("singular tridiagonal system")
        cp[i] = upper[i] / den
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / den
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]
    return out


def radial_step(const double complex[::1] u, const double[::1] pot, double h, double mass,
                double complex z_impl, double complex z_expl):
    """Solve ``(1 + z_impl H) u' = (1 - z_expl H) u`` with
    ``H = -d^2/(2 m dr^2) + pot`` and zero Dirichlet ends."""
    cdef Py_ssize_t n = u.shape[0], i
    cdef double k = 1.0 / (2.0 * mass * h * h)
    cdef double complex off_i = -z_impl * k, hu, den
    cdef double complex[::1] rhs = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] cp = np.empty(n, dtype=np.complex128)
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] x = out
    for i in range(n):
        hu = (2.0 * k + pot[i]) * u[i]
        if i > 0:
            hu = hu - k * u[i - 1]
        if i < n - 1:
            hu = hu - k * u[i + 1]
        rhs[i] = u[i] - z_expl * hu
    den = 1.0 + z_impl * (2.0 * k + pot[0])
    cp[0] = off_i / den
    x[0] = rhs[0] / den
    for i in range(1, n):
        den = 1.0 + z_impl * (2.0 * k + pot[i]) - off_i * cp[i - 1]
        cp[i] = off_i / den
        x[i] = (rhs[i] - off_i * x[i - 1]) / den
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]
    return out


def inverse_distance_moments(const double[:, ::1] a, const double[:, ::1] b):
    """``(sum 1/r_k, sum 1/r_k^2)`` with ``r_k = |a_k - b_k|``."""
    cdef Py_ssize_t n = a.shape[0], k
    cdef double s = 0.0, s2 = 0.0, dx, dy, dz, q
    for k in range(n):
        dx = a[k, 0] - b[k, 0]
        dy = a[k, 1] - b[k, 1]
        dz = a[k, 2] - b[k, 2]
        q = dx * dx + dy * dy + dz * dz
        s += 1.0 / sqrt(q)
        s2 += 1.0 / q
    return s, s2
