"""Spherically symmetric Schrodinger-Newton solver.

The radial function ``u = r psi`` lives on ``r_j = j h`` for
``j = 1..N`` with ``u = 0`` at ``r = 0`` and at ``r_max = (N + 1) h``.
The potential ``Phi`` (dimensionless, ``m Phi`` enters the Hamiltonian)
is obtained from ``w = r Phi``, which obeys ``w'' = 4 pi G m |u|^2 / r``
with ``w(0) = 0`` and the exterior value ``w(r_max) = -G m M_in``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import gravity, kernels

log = logging.getLogger(__name__)


class ConvergenceError(ArithmeticError):
    """Iteration failed to converge; carries the last residual."""

    def __init__(self, msg: str, residual: float = math.nan):
        super().__init__(msg)
        self.residual = residual


class StabilityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    """Wave function ``u = r psi`` on a uniform radial grid.

    Parameters
    ----------
    r_max : float
        Outer radius, where ``u`` vanishes.
    n_points : int
        Number of interior nodes.
    mass, G : float
        Particle mass and gravitational coupling.
    wave : ndarray, optional
        Complex samples of ``u``; zero when omitted.
    V : ndarray, optional
        External potential samples; zero when omitted.
    """

    r_max: float
    n_points: int
    mass: float = 1.0
    G: float = 1.0
    wave: np.ndarray | None = None
    V: np.ndarray | None = None
    time: float = 0.0
    r: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_points < 3 or not self.r_max > 0:
            raise ValueError("degenerate grid: need r_max > 0 and at least 3 nodes")
        if not self.mass > 0 or self.G < 0:
            raise ValueError("need mass > 0 and G >= 0")
        r = self.spacing * np.arange(1, self.n_points + 1)
        object.__setattr__(self, "r", r)
        for name, dtype in (("wave", complex), ("V", float)):
            arr = getattr(self, name)
            arr = np.zeros(self.n_points, dtype) if arr is None else np.array(arr, dtype=dtype)
            if arr.shape != (self.n_points,):
                raise ValueError(f"{name} must have {self.n_points} samples")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def spacing(self) -> float:
        return self.r_max / (self.n_points + 1)

    def norm(self) -> float:
        """``4 pi integral |psi|^2 r^2 dr``."""
        return float(4 * math.pi * self.spacing * np.sum(np.abs(self.wave) ** 2))

    def normalise(self) -> "RadialGrid":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalise a zero wave function")
        return self.with_wave(self.wave / math.sqrt(n))

    def with_wave(self, u, time: float | None = None) -> "RadialGrid":
        return replace(self, wave=u, time=self.time if time is None else time)

    @property
    def psi(self) -> np.ndarray:
        return self.wave / self.r

    def density(self) -> np.ndarray:
        """Probability density ``|psi|^2``."""
        return np.abs(self.psi) ** 2

    def moment(self, k: int = 2) -> float:
        """``<r^k>``."""
        w = np.abs(self.wave) ** 2
        return float(np.sum(w * self.r ** k) / np.sum(w))

    @classmethod
    def gaussian(cls, r_max, n_points, sigma, **kw) -> "RadialGrid":
        """Normalised Gaussian with ``|psi|^2 ~ exp(-r^2 / 2 sigma^2)``."""
        g = cls(r_max, n_points, **kw)
        return g.with_wave(g.r * np.exp(-g.r ** 2 / (4 * sigma ** 2))).normalise()


class SNPotential(NamedTuple):
    Phi: np.ndarray
    boundary: float
    """``Phi`` at ``r_max``."""


def solve_poisson(grid: RadialGrid) -> SNPotential:
    """Second-order finite-difference solve of the radial Poisson equation
    sourced by ``4 pi G m |psi|^2``."""
    h, n = grid.spacing, grid.n_points
    rho = np.abs(grid.wave) ** 2
    src = 4 * math.pi * grid.G * grid.mass * rho / grid.r * h * h
    w_out = -grid.G * grid.mass * 4 * math.pi * h * rho.sum()
    rhs = src.astype(complex)
    rhs[-1] -= w_out
    ones = np.ones(n, dtype=complex)
    w = kernels.tridiag_solve(ones, -2 * ones, ones, rhs).real
    return SNPotential(w / grid.r, w_out / grid.r_max)


def poisson_residual(grid: RadialGrid, pot: SNPotential) -> float:
    """Max-norm residual of the discrete equation for ``w``."""
    h = grid.spacing
    w = np.concatenate([[0.0], pot.Phi * grid.r, [pot.boundary * grid.r_max]])
    lap = (w[2:] - 2 * w[1:-1] + w[:-2]) / (h * h)
    src = 4 * math.pi * grid.G * grid.mass * np.abs(grid.wave) ** 2 / grid.r
    return float(np.max(np.abs(lap - src)))


def total_potential(grid: RadialGrid, pot: SNPotential | None = None) -> np.ndarray:
    pot = solve_poisson(grid) if pot is None else pot
    return grid.V + grid.mass * pot.Phi


def apply_hamiltonian(grid: RadialGrid, pot: SNPotential | None = None) -> np.ndarray:
    u = grid.wave
    k = 1.0 / (2 * grid.mass * grid.spacing ** 2)
    hu = (2 * k + total_potential(grid, pot)) * u
    hu[1:] -= k * u[:-1]
    hu[:-1] -= k * u[1:]
    return hu


def _inner(grid: RadialGrid, a, b) -> complex:
    return complex(4 * math.pi * grid.spacing * np.vdot(a, b))


class Energies(NamedTuple):
    kinetic: float
    external: float
    gravitational: float
    """``(1/2) <m Phi>``, the mean-field self-energy."""
    total: float
    mu: float
    """``<H>`` with the self-consistent potential."""


def energies(grid: RadialGrid) -> Energies:
    pot = solve_poisson(grid)
    u = grid.wave
    n = grid.norm()
    k = 1.0 / (2 * grid.mass * grid.spacing ** 2)
    lap = 2 * u
    lap[1:] -= u[:-1]
    lap[:-1] -= u[1:]
    T = _inner(grid, u, k * lap).real / n
    Vx = _inner(grid, u, grid.V * u).real / n
    Vg = _inner(grid, u, grid.mass * pot.Phi * u).real / n
    return Energies(T, Vx, 0.5 * Vg, T + Vx + 0.5 * Vg, T + Vx + Vg)


def stationary_residual(grid: RadialGrid) -> float:
    """Grid norm of ``(H - mu) psi`` for a normalised state."""
    hu = apply_hamiltonian(grid)
    mu = _inner(grid, grid.wave, hu).real
    res = hu - mu * grid.wave
    return math.sqrt(_inner(grid, res, res).real)


def evolve_real(grid: RadialGrid, dt: float, steps: int, drift_limit: float = 1e-6,
                inner_iterations: int = 0, record_every: int = 0):
    """Crank-Nicolson propagation with ``Phi`` refreshed from the pre-step
    density.

    ``inner_iterations > 0`` re-solves each step with the potential of the
    mid-step density (fixed-point refinement). With ``record_every = k``
    the function also returns ``(times, <r^2>, norm)`` sampled every k
    steps.

    Raises
    ------
    StabilityError
        if the norm changes by more than ``drift_limit`` in one step.
    """
    if not dt > 0 or steps < 0:
        raise ValueError("need dt > 0 and steps >= 0")
    z = 0.5j * dt
    u = np.array(grid.wave)
    cur = grid
    n0 = grid.norm()
    trace = []
    for step in range(steps):
        pot = total_potential(cur)
        new = kernels.radial_step(u, pot, grid.spacing, grid.mass, z, z)
        for _ in range(inner_iterations):
            # potential of the step-averaged density
            mid = cur.with_wave(np.sqrt(0.5 * (np.abs(u) ** 2 + np.abs(new) ** 2)))
            pot = total_potential(mid)
            new = kernels.radial_step(u, pot, grid.spacing, grid.mass, z, z)
        n1 = 4 * math.pi * grid.spacing * float(np.sum(np.abs(new) ** 2))
        n_prev = 4 * math.pi * grid.spacing * float(np.sum(np.abs(u) ** 2))
        if abs(n1 - n_prev) > drift_limit * max(n0, 1e-300):
            raise StabilityError(f"norm drift {abs(n1 - n_prev):.3e} at step {step}; reduce dt")
        u = new
        cur = cur.with_wave(u, time=grid.time + (step + 1) * dt)
        if record_every and (step + 1) % record_every == 0:
            trace.append((cur.time, cur.moment(2), n1))
    if record_every:
        return cur, np.array(trace).reshape(-1, 3)
    return cur


class GroundState(NamedTuple):
    grid: RadialGrid
    energy: float
    mu: float
    residual: float
    iterations: int
    energy_history: np.ndarray


def ground_state(template: RadialGrid, dtau: float | None = None, tol: float = 1e-10,
                 residual_tol: float = 1e-6, max_iter: int = 20000,
                 sigma0: float | None = None) -> GroundState:
    """Imaginary-time relaxation to the lowest self-bound state.

    Each step is backward Euler, ``(1 + dtau H[u_n]) u_{n+1} = u_n``,
    followed by renormalisation. Stops when the energy changes by less
    than ``tol`` and the stationary residual is below ``residual_tol``.

    Raises
    ------
    ConvergenceError
        when no bound state forms (e.g. ``G = 0``) or ``max_iter`` is hit.
    """
    if template.G <= 0:
        raise ConvergenceError("G = 0: no self-bound state on an open domain")
    g = template
    scale = 1.0 / (g.G * g.mass ** 3)      # gravitational Bohr radius
    e_scale = g.G ** 2 * g.mass ** 5
    if dtau is None:
        dtau = 2.0 / e_scale
    if not np.any(g.wave):
        g = RadialGrid.gaussian(g.r_max, g.n_points, sigma0 or 2.0 * scale,
                                mass=g.mass, G=g.G, V=g.V)
    g = g.normalise()
    history = [energies(g).total]
    res = math.inf
    for it in range(1, max_iter + 1):
        pot = total_potential(g)
        u = kernels.radial_step(g.wave, pot, g.spacing, g.mass, dtau, 0.0).real
        g = g.with_wave(u).normalise()
        e = energies(g)
        history.append(e.total)
        # tolerances follow the larger of the self-gravity and trap scales
        ref = max(e_scale, abs(e.total))
        if abs(history[-1] - history[-2]) < tol * ref:
            res = stationary_residual(g)
            if res <= residual_tol * ref:
                if e.total >= 0 and not np.any(g.V):
                    raise ConvergenceError("relaxed to an unbound state", res)
                return GroundState(g, e.total, e.mu, res, it, np.array(history))
    res = stationary_residual(g)
    raise ConvergenceError(f"no convergence after {max_iter} iterations "
                           f"(last residual {res:.3e})", res)


def pd_timescale(state: RadialGrid, displacement: float) -> float:
    """``1 / E_pen`` for two copies of the state's mass density displaced by
    ``displacement``."""
    if displacement < 0:
        raise ValueError("displacement must be non-negative")
    if displacement == 0:
        return math.inf
    lump = gravity.TabulatedLump(state.r, state.mass * state.density() / state.norm())
    return gravity.penrose_self_energy(
        gravity.MassConfiguration(state.mass, state.spacing, displacement),
        displacement, lump=lump, G=state.G).pd_decoherence_time
