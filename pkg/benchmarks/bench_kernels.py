"""Compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.
"""
import timeit

import numpy as np

from gravcollapse import _kernels_py, kernels
from gravcollapse import sn


def bench(name, fn, number):
    t = min(timeit.repeat(fn, number=number, repeat=3)) / number
    print(f"  {name:<34} {t * 1e6:10.1f} us")
    return t


def main():
    try:
        from gravcollapse import _kernels as cy
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return
    rng = np.random.default_rng(0)
    n = 2000
    u = (rng.normal(size=n) + 1j * rng.normal(size=n)).astype(complex)
    pot = rng.normal(size=n)
    x = rng.normal(size=(10 ** 6, 3))
    y = rng.normal(size=(10 ** 6, 3))
    ones = np.ones(n, complex)
    cases = [
        ("radial_step (n=2000)",
         lambda m: m.radial_step(u, pot, 0.02, 1.0, 0.005j, 0.005j), 2000),
        ("tridiag_solve (n=2000)",
         lambda m: m.tridiag_solve(ones, -2 * ones, ones, u), 2000),
        ("inverse_distance_moments (1e6)",
         lambda m: m.inverse_distance_moments(x, y), 5),
    ]
    for name, f, number in cases:
        print(name)
        tp = bench("numpy fallback", lambda: f(_kernels_py), number)
        tc = bench("cython", lambda: f(cy), number)
        print(f"  speed-up {tp / tc:.1f}x")
    g = sn.RadialGrid(40.0, 2000)
    for backend in ("python", "cython"):
        kernels.use_backend(backend)
        t = min(timeit.repeat(lambda: sn.ground_state(g), number=1, repeat=3))
        print(f"ground_state (2000 points), {backend:<7} {t:.3f} s")
    kernels.use_backend("auto")


if __name__ == "__main__":
    main()
