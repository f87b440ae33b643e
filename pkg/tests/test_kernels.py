import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gravcollapse import _kernels_py, kernels

try:
    from gravcollapse import _kernels as _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None

needs_c = pytest.mark.skipif(_kernels_c is None, reason="compiled kernels not built")
sizes = st.integers(3, 60)
seeds = st.integers(0, 2 ** 32 - 1)


def _tridiag(n, rng):
    lo = rng.normal(size=n) + 1j * rng.normal(size=n)
    up = rng.normal(size=n) + 1j * rng.normal(size=n)
    diag = 4 + np.abs(lo) + np.abs(up) + 1j * rng.normal(size=n)
    rhs = rng.normal(size=n) + 1j * rng.normal(size=n)
    return lo, diag, up, rhs


@given(sizes, seeds)
def test_fallback_tridiag_against_dense(n, seed):
    rng = np.random.default_rng(seed)
    lo, diag, up, rhs = _tridiag(n, rng)
    A = np.diag(diag) + np.diag(lo[1:], -1) + np.diag(up[:-1], 1)
    x = _kernels_py.tridiag_solve(lo, diag, up, rhs)
    assert np.allclose(A @ x, rhs, atol=1e-10)


@needs_c
@given(sizes, seeds)
def test_backends_agree_tridiag(n, seed):
    rng = np.random.default_rng(seed)
    args = _tridiag(n, rng)
    assert np.allclose(_kernels_c.tridiag_solve(*args), _kernels_py.tridiag_solve(*args), atol=1e-12)


@needs_c
@given(sizes, seeds, st.sampled_from(["real", "cn"]))
def test_backends_agree_radial_step(n, seed, mode):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=n) + 1j * rng.normal(size=n)
    pot = rng.normal(size=n)
    z = (0.3, 0.0) if mode == "real" else (0.05j, 0.05j)
    a = _kernels_c.radial_step(u, pot, 0.1, 1.3, *z)
    b = _kernels_py.radial_step(u, pot, 0.1, 1.3, *z)
    assert np.allclose(a, b, atol=1e-12)


def test_radial_step_solves_its_system(rng):
    n, h, m = 30, 0.2, 0.7
    u = rng.normal(size=n) + 0j
    pot = rng.normal(size=n)
    k = 1 / (2 * m * h * h)
    H = np.diag(2 * k + pot) - k * np.eye(n, k=1) - k * np.eye(n, k=-1)
    zi, ze = 0.05j, 0.05j
    new = kernels.radial_step(u, pot, h, m, zi, ze)
    lhs = (np.eye(n) + zi * H) @ new
    assert np.allclose(lhs, (np.eye(n) - ze * H) @ u, atol=1e-10)


@needs_c
@given(st.integers(1, 500), seeds)
def test_backends_agree_moments(n, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(n, 3)), rng.normal(size=(n, 3))
    assert np.allclose(_kernels_c.inverse_distance_moments(a, b),
                       _kernels_py.inverse_distance_moments(a, b), rtol=1e-12)


def test_moments_definition(rng):
    a, b = rng.normal(size=(50, 3)), rng.normal(size=(50, 3))
    r = np.linalg.norm(a - b, axis=1)
    s1, s2 = kernels.inverse_distance_moments(a, b)
    assert s1 == pytest.approx(np.sum(1 / r))
    assert s2 == pytest.approx(np.sum(1 / r ** 2))


def test_backend_switching():
    original = kernels.BACKEND
    try:
        assert kernels.use_backend("python") == "python"
        assert kernels.BACKEND == "python"
        with pytest.raises(ValueError):
            kernels.use_backend("fortran")
    finally:
        kernels.use_backend(original)
    assert kernels.BACKEND == original
