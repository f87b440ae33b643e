"""Newtonian potentials of smeared lumps, collapse-time estimates and the
Penrose self-energy of a displaced superposition.

All quantities are in GeV-based natural units (see :mod:`.units`). A lump
is a spherically symmetric mass density; ``psi(s) = -Phi(s)/G`` denotes its
potential per unit coupling, so the interaction of two lumps at distance d
is ``W(d) = integral rho(x) psi(|x - d z|) d^3x`` and

    E_pen(d) = G (W(0) - W(d)) = 2 U_self - G W(d),

with ``U_self = G W(0) / 2``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from . import units
from .units import G_NEWTON

log = logging.getLogger(__name__)

PROFILES = ("gaussian", "uniform_sphere")
NO_COLLAPSE = math.inf
_QUAD = dict(epsabs=0.0, epsrel=1e-11, limit=400)


class RadialLump:
    """Spherical mass density of total mass ``mass``."""

    mass: float
    extent: float  # radius beyond which the density is negligible

    def density(self, r):
        raise NotImplementedError

    def enclosed(self, r):
        raise NotImplementedError

    def psi(self, s):
        """``integral rho(y) / |x - y| d^3y`` at ``|x| = s``."""
        raise NotImplementedError

    def psi_moment(self, s):
        """``F(s) = integral_0^s psi(t) t dt``."""
        raise NotImplementedError

    def field(self, r):
        """``|grad psi|`` = enclosed mass / r^2."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = self.enclosed(r) / (r * r)
        return np.where(r > 0, g, 0.0)

    def breakpoints(self) -> list[float]:
        return []

    def enclosed_moment(self, s):
        """``integral_0^s M_enc(t) dt``."""
        raise NotImplementedError

    def self_interaction(self) -> float:
        """``W(0) = integral rho psi d^3x``."""
        f = lambda r: 4 * math.pi * r * r * self.density(r) * self.psi(r)
        pts = self.breakpoints()
        return _piecewise_quad(f, 0.0, self.extent, pts)

    def interaction(self, d: float) -> float:
        """``W(d)`` for two copies of this lump with centres ``d`` apart.

        The angular integral is done in closed form through ``F``, leaving
        one radial quadrature.
        """
        if d < 0:
            raise ValueError("distance must be non-negative")
        if d == 0.0:
            return self.self_interaction()

        def f(r):
            if r == 0.0:
                return 0.0
            return 2 * math.pi * r * self.density(r) * (
                self.psi_moment(r + d) - self.psi_moment(abs(r - d))) / d

        pts = sorted({p for p in self.breakpoints() + [d, d - self.extent if d > self.extent else 0.0]
                      if 0.0 < p < self.extent})
        for R in self.breakpoints():
            for p in (d - R, d + R, R - d):
                if 0.0 < p < self.extent:
                    pts.append(p)
        return _piecewise_quad(f, 0.0, self.extent, sorted(set(pts)))


def _piecewise_quad(f, a, b, pts) -> float:
    edges = [a] + [p for p in pts if a < p < b] + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            total += integrate.quad(f, lo, hi, **_QUAD)[0]
    return total


class UniformSphere(RadialLump):
    def __init__(self, mass: float, radius: float):
        if radius <= 0:
            raise ValueError("smearing radius must be positive")
        self.mass, self.radius, self.extent = float(mass), float(radius), float(radius)

    def breakpoints(self):
        return [self.radius]

    def density(self, r):
        r = np.asarray(r, dtype=float)
        rho0 = 3 * self.mass / (4 * math.pi * self.radius ** 3)
        return np.where(r <= self.radius, rho0, 0.0)

    def enclosed(self, r):
        r = np.asarray(r, dtype=float)
        return self.mass * np.minimum(r / self.radius, 1.0) ** 3

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        R, M = self.radius, self.mass
        with np.errstate(divide="ignore"):
            out = np.where(s < R, M * (3 * R * R - s * s) / (2 * R ** 3), M / np.maximum(s, R))
        return out

    def psi_moment(self, s):
        s = np.asarray(s, dtype=float)
        R, M = self.radius, self.mass
        inner = M * (1.5 * R * R * s * s - 0.25 * s ** 4) / (2 * R ** 3)
        at_R = M * (1.5 - 0.25) * R / 2
        return np.where(s < R, inner, at_R + M * (s - R))

    def enclosed_moment(self, s):
        s = np.asarray(s, dtype=float)
        R, M = self.radius, self.mass
        return np.where(s < R, M * s ** 4 / (4 * R ** 3), M * (s - 0.75 * R))

    def self_energy(self) -> float:
        return 0.6 * G_NEWTON * self.mass ** 2 / self.radius


class GaussianLump(RadialLump):
    """``rho ~ exp(-r^2 / 2 sigma^2)``."""

    def __init__(self, mass: float, sigma: float):
        if sigma <= 0:
            raise ValueError("smearing radius must be positive")
        self.mass, self.sigma = float(mass), float(sigma)
        self.extent = 14.0 * self.sigma

    def density(self, r):
        r = np.asarray(r, dtype=float)
        s = self.sigma
        return self.mass * np.exp(-r * r / (2 * s * s)) / (2 * math.pi * s * s) ** 1.5

    def enclosed(self, r):
        r = np.asarray(r, dtype=float)
        x = r / (math.sqrt(2) * self.sigma)
        return self.mass * (special.erf(x) - 2 * x * np.exp(-x * x) / math.sqrt(math.pi))

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        a = math.sqrt(2) * self.sigma
        small = s < 1e-8 * self.sigma
        safe = np.where(small, 1.0, s)
        return np.where(small, self.mass * 2 / (math.sqrt(math.pi) * a),
                        self.mass * special.erf(safe / a) / safe)

    def psi_moment(self, s):
        s = np.asarray(s, dtype=float)
        a = math.sqrt(2) * self.sigma
        return self.mass * (s * special.erf(s / a)
                            + a / math.sqrt(math.pi) * (np.exp(-(s / a) ** 2) - 1.0))

    def enclosed_moment(self, s):
        # by parts: s M_enc(s) - integral 4 pi t^3 rho dt
        s = np.asarray(s, dtype=float)
        v = s * s / (2 * self.sigma ** 2)
        tail = 4 * self.mass * self.sigma / math.sqrt(2 * math.pi) * (1 - (1 + v) * np.exp(-v))
        return s * self.enclosed(s) - tail

    def self_energy(self) -> float:
        return G_NEWTON * self.mass ** 2 / (2 * math.sqrt(math.pi) * self.sigma)


class TabulatedLump(RadialLump):
    """Radial density sampled on a grid (e.g. a Schrodinger-Newton state)."""

    def __init__(self, r, rho):
        r = np.asarray(r, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if r[0] > 0:
            r = np.concatenate([[0.0], r])
            rho = np.concatenate([[rho[0]], rho])
        self.r, self.rho = r, rho
        shell = 4 * math.pi * r * r * rho
        self._enc = integrate.cumulative_trapezoid(shell, r, initial=0.0)
        self.mass = float(self._enc[-1])
        self.extent = float(r[-1])
        outer = integrate.cumulative_trapezoid((4 * math.pi * r * rho)[::-1], -r[::-1], initial=0.0)[::-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            psi = np.where(r > 0, self._enc / np.where(r > 0, r, 1.0), 0.0) + outer
        psi[0] = outer[0]
        self._psi = psi
        self._F = integrate.cumulative_trapezoid(psi * r, r, initial=0.0)

    def density(self, r):
        return np.interp(r, self.r, self.rho, right=0.0)

    def enclosed_moment(self, s):
        s = np.asarray(s, dtype=float)
        cum = integrate.cumulative_trapezoid(self._enc, self.r, initial=0.0)
        inside = np.interp(s, self.r, cum)
        return np.where(s <= self.extent, inside, cum[-1] + self.mass * (s - self.extent))

    def enclosed(self, r):
        return np.interp(r, self.r, self._enc, right=self.mass)

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        inside = np.interp(s, self.r, self._psi)
        return np.where(s <= self.extent, inside, self.mass / np.maximum(s, self.extent))

    def psi_moment(self, s):
        s = np.asarray(s, dtype=float)
        inside = np.interp(s, self.r, self._F)
        return np.where(s <= self.extent, inside, self._F[-1] + self.mass * (s - self.extent))

    def self_interaction(self) -> float:
        return float(integrate.trapezoid(4 * math.pi * self.r ** 2 * self.rho * self._psi, self.r))

    def interaction(self, d: float) -> float:
        if d == 0.0:
            return self.self_interaction()
        r = self.r[1:]
        f = 2 * math.pi * r * self.rho[1:] * (self.psi_moment(r + d) - self.psi_moment(np.abs(r - d))) / d
        return float(integrate.trapezoid(np.concatenate([[0.0], f]), self.r))


@dataclass(frozen=True)
class MassConfiguration:
    """Smeared mass in a two-branch superposition.

    Parameters
    ----------
    total_mass : float
        GeV.
    smearing_radius : float
        GeV^-1; sphere radius, or the Gaussian standard deviation.
    displacement : float
        Distance between the branch centres, GeV^-1.
    n_constituents : int
        Number of identical constituents sharing the mass; each is smeared
        with ``smearing_radius``.
    entangled_fraction : float
        Fraction of constituents displaced coherently.
    """

    total_mass: float
    smearing_radius: float
    displacement: float = 0.0
    n_constituents: int = 1
    entangled_fraction: float = 1.0
    profile: str = "gaussian"

    def __post_init__(self):
        if self.total_mass < 0:
            raise ValueError("mass must be non-negative")
        if not self.smearing_radius > 0:
            raise ValueError("smearing radius must be positive (point sources diverge)")
        if self.displacement < 0:
            raise ValueError("displacement must be non-negative")
        if self.n_constituents < 1:
            raise ValueError("need at least one constituent")
        if not 0.0 <= self.entangled_fraction <= 1.0:
            raise ValueError("entangled fraction must lie in [0, 1]")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")

    @property
    def constituent_mass(self) -> float:
        return self.total_mass / self.n_constituents

    @property
    def coherent_mass(self) -> float:
        return self.entangled_fraction * self.total_mass

    @property
    def overlapping(self) -> bool:
        return self.displacement <= 2 * self.smearing_radius

    def lump(self, mass: float | None = None) -> RadialLump:
        m = self.total_mass if mass is None else mass
        if self.profile == "uniform_sphere":
            return UniformSphere(m, self.smearing_radius)
        return GaussianLump(m, self.smearing_radius)

    def replace(self, **kw) -> "MassConfiguration":
        d = dict(self.__dict__)
        d.update(kw)
        return MassConfiguration(**d)


def newtonian_potential(cfg: MassConfiguration, r) -> np.ndarray:
    """Dimensionless potential of the whole lump at distance ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    if cfg.total_mass == 0:
        return np.zeros_like(r)
    return -G_NEWTON * cfg.lump().psi(r)


def self_potential(cfg: MassConfiguration, mass: float, evaluate: str = "mean") -> float:
    """Magnitude of a single smeared lump's potential at its own location.

    ``"centre"`` takes the central value; ``"mean"`` averages over the
    lump's own density, ``2 U_self / m``, which is the potential energy per
    unit mass that sets the branch phase of an extended lump.
    """
    if mass == 0:
        return 0.0
    lump = cfg.lump(mass)
    if evaluate == "centre":
        return float(G_NEWTON * lump.psi(0.0))
    if evaluate == "mean":
        return float(G_NEWTON * lump.self_interaction() / mass)
    raise ValueError("evaluate must be 'mean' or 'centre'")


class Phi12(NamedTuple):
    value: float
    """Effective ``|Phi_12|``; the phase rate is ``constituent_mass * value``."""
    per_constituent: float
    overlapping: bool


def phi12(cfg: MassConfiguration, evaluate: str = "mean") -> Phi12:
    """Sum of each branch's self-potential at its own location.

    Cross terms (branch 1's potential at branch 2) are neglected, so the
    value is ``2 |Phi_self|`` per constituent; constituents displaced
    coherently add linearly.
    """
    per = 2.0 * self_potential(cfg, cfg.constituent_mass, evaluate)
    n_coherent = cfg.entangled_fraction * cfg.n_constituents
    if cfg.overlapping:
        log.warning("branches overlap (displacement %.3g <= 2 x smearing radius %.3g)",
                    cfg.displacement, cfg.smearing_radius)
    return Phi12(n_coherent * per, per, cfg.overlapping)


def phase_rate(cfg: MassConfiguration, evaluate: str = "mean") -> float:
    """Penrose-phase accumulation rate ``m |Phi_12|`` (GeV)."""
    return cfg.constituent_mass * phi12(cfg, evaluate).value


class CollapseTime(NamedTuple):
    natural: float
    seconds: float


def collapse_time(cfg: MassConfiguration, evaluate: str = "mean") -> CollapseTime:
    """``tau = 1 / (m |Phi_12|)``; massless configurations never collapse."""
    rate = phase_rate(cfg, evaluate)
    if rate == 0.0:
        return CollapseTime(NO_COLLAPSE, NO_COLLAPSE)
    tau = 1.0 / rate
    return CollapseTime(tau, units.seconds(tau))


def required_mass(target_tau: float, constituent: MassConfiguration,
                  evaluate: str = "mean") -> float:
    """Total mass (GeV) whose coherent part reaches Penrose phase 1 in
    ``target_tau`` (GeV^-1).

    ``constituent`` describes a single constituent (its ``total_mass`` is the
    constituent mass) and the entangled fraction of the whole object.
    """
    if not target_tau > 0:
        raise ValueError("target time must be positive")
    if math.isinf(target_tau):
        return 0.0
    single = constituent.replace(n_constituents=1, entangled_fraction=1.0)
    rate = phase_rate(single, evaluate)
    if rate == 0.0 or constituent.entangled_fraction == 0.0:
        return math.inf
    n_coherent = 1.0 / (target_tau * rate)
    return n_coherent * single.total_mass / constituent.entangled_fraction


def electron(radius: float | None = None, profile: str = "gaussian") -> MassConfiguration:
    """Maximally localised electron, smeared over its reduced Compton
    wavelength unless ``radius`` is given."""
    m = units.ELECTRON_MASS
    return MassConfiguration(m, 1.0 / m if radius is None else radius,
                             displacement=10.0 / m, profile=profile)


def qubit_estimate(electrons_per_qubit: int, target_tau: float, scaling: str = "entangled",
                   carrier: MassConfiguration | None = None, evaluate: str = "mean") -> float:
    """Number of qubits needed to reach Penrose phase 1 within ``target_tau``.

    Each qubit moves ``electrons_per_qubit`` electrons coherently. Entangled
    qubits add their phase rates linearly; qubits in a product state add in
    quadrature, so the residual grows like ``sqrt(n)``.
    """
    if electrons_per_qubit < 1 or not target_tau > 0:
        raise ValueError("inputs must be positive")
    carrier = electron() if carrier is None else carrier
    per_qubit = electrons_per_qubit * phase_rate(carrier, evaluate)
    x = 1.0 / (target_tau * per_qubit)
    if scaling == "entangled":
        return x
    if scaling == "product":
        return x * x
    raise ValueError("scaling must be 'entangled' or 'product'")


def branch_overlap(cfg: MassConfiguration, d: float | None = None) -> float:
    """``|<chi_1|chi_2>|`` for wave-packets with amplitude ``sqrt(rho)``."""
    d = cfg.displacement if d is None else d
    R = cfg.smearing_radius
    if cfg.profile == "gaussian":
        return math.exp(-d * d / (8 * R * R))
    if d >= 2 * R:
        return 0.0
    x = d / R
    return 1.0 - 0.75 * x + x ** 3 / 16.0


def separation_phase_rate(cfg: MassConfiguration, d: float, evaluate: str = "mean") -> float:
    """Phase rate at branch separation ``d``: grows while the packets
    overlap, constant once they are orthogonal."""
    c = branch_overlap(cfg, d)
    rate = cfg.constituent_mass * cfg.entangled_fraction * cfg.n_constituents * 2.0 \
        * self_potential(cfg, cfg.constituent_mass, evaluate)
    return rate * math.sqrt(max(1.0 - c * c, 0.0))


class SelfEnergyResult(NamedTuple):
    E_pen: float
    E_var: float
    pd_decoherence_time: float
    U_self: float


def penrose_self_energy(cfg: MassConfiguration, displacement: float | None = None,
                        alphas: Sequence[complex] = (math.sqrt(0.5), math.sqrt(0.5)),
                        lump: RadialLump | None = None, G: float = G_NEWTON) -> SelfEnergyResult:
    """Gravitational self-energy of the branch density difference and the
    density-variance measure.

    The variance uses a branch-diagonal density correlation,
    ``<rho(x) rho(y)> = sum_i |alpha_i|^2 rho_i(x) rho_i(y)``, without
    single-particle contact terms.
    """
    d = cfg.displacement if displacement is None else float(displacement)
    lump = cfg.lump() if lump is None else lump
    p = np.abs(np.asarray(alphas, dtype=complex)) ** 2
    if len(p) != 2 or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("need two branch amplitudes with unit total weight")
    W0 = lump.self_interaction()
    Wd = W0 if d == 0.0 else lump.interaction(d)
    E_pen = G * (W0 - Wd)
    if not math.isfinite(E_pen):
        raise ArithmeticError("non-finite self-energy (unsmeared source?)")
    E_pen = max(E_pen, 0.0)
    W = np.array([[W0, Wd], [Wd, W0]])
    cov = np.diag(p) - np.outer(p, p)
    E_var = max(0.5 * G * float(np.sum(cov * W)), 0.0)
    tau = math.inf if E_pen == 0.0 else 1.0 / E_pen
    return SelfEnergyResult(E_pen, E_var, tau, 0.5 * G * W0)


def gradient_form_energy(lump: RadialLump, d: float, G: float = G_NEWTON) -> float:
    """``(1/8 pi G) integral |grad dPhi|^2 d^3x`` for two copies of ``lump``
    displaced by ``d``.

    Independent of the potential-density route: the field overlap
    ``integral g(r) g(s) cos(angle) d^3x`` is written in bipolar
    coordinates ``(r, s)``, where the inner integral over ``s`` has closed
    form through ``int g ds = psi(0) - psi(s)`` and
    ``int s^2 g ds = int M_enc ds``.
    """
    if d < 0:
        raise ValueError("distance must be non-negative")
    if d == 0.0:
        return 0.0

    def bracket(r):
        lo, hi = abs(r - d), r + d
        g0 = lump.psi(lo) - lump.psi(hi)
        g2 = lump.enclosed_moment(hi) - lump.enclosed_moment(lo)
        return (r * r - d * d) * g0 + g2

    def f(r):
        g = float(lump.field(r))
        return 8 * math.pi * r * r * g * g - 2 * math.pi * g * float(bracket(r)) / d

    pts = set(lump.breakpoints()) | {d}
    for R in lump.breakpoints():
        pts |= {d + R, abs(d - R)}
    # beyond extent + d both lumps look like point masses and the
    # integrand cancels identically
    top = max(max(pts), lump.extent) + d
    edges = [0.0] + sorted(p for p in pts if 0 < p < top) + [top]
    tol = dict(epsabs=1e-13 * lump.mass ** 2 / lump.extent, epsrel=1e-11, limit=400)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, lo, hi, **tol)[0]
    return G * total / (8 * math.pi)


def sample_lump(lump: RadialLump, n: int, rng) -> np.ndarray:
    """``n`` points distributed with the lump's density (uniform sphere or
    Gaussian only)."""
    if isinstance(lump, UniformSphere):
        v = rng.standard_normal((n, 3))
        v /= np.linalg.norm(v, axis=1)[:, None]
        return v * (lump.radius * rng.random(n) ** (1.0 / 3.0))[:, None]
    if isinstance(lump, GaussianLump):
        return lump.sigma * rng.standard_normal((n, 3))
    raise TypeError("Monte Carlo sampling needs an analytic profile")


class MonteCarloEstimate(NamedTuple):
    value: float
    stderr: float


def monte_carlo_self_energy(lump: RadialLump, d: float, n_pairs: int = 10 ** 7, seed=0,
                            chunk: int = 1 << 20, G: float = G_NEWTON) -> MonteCarloEstimate:
    """Sampled ``(G/2) integral integral drho drho / |x - y|``.

    Uses ``E = (G M^2 / 2)(<1/r>_11 + <1/r>_22 - 2 <1/r>_12)`` with
    independent pair samples for each mean; the two self terms are equal by
    symmetry, so each is sampled with ``n_pairs`` pairs.
    """
    from .born import make_rng
    from .kernels import inverse_distance_moments

    rng = make_rng(seed)
    shift = np.array([0.0, 0.0, d])
    sums = np.zeros(2)
    sq = np.zeros(2)
    done = 0
    while done < n_pairs:
        k = min(chunk, n_pairs - done)
        for j, offset in enumerate((0.0, shift)):
            x, y = sample_lump(lump, k, rng), sample_lump(lump, k, rng) + offset
            s1, s2 = inverse_distance_moments(x, y)
            sums[j] += s1
            sq[j] += s2
        done += k
    mean = sums / n_pairs
    var = sq / n_pairs - mean ** 2
    value = float(G * lump.mass ** 2 * (mean[0] - mean[1]))
    err = G * lump.mass ** 2 * math.sqrt((var[0] + var[1]) / n_pairs)
    return MonteCarloEstimate(value, err)


class PDRow(NamedTuple):
    separation: float
    penrose_phase_rate: float
    E_pen: float


def pd_comparison(cfg: MassConfiguration, separations: Sequence[float],
                  evaluate: str = "mean") -> list[PDRow]:
    """Separation scan contrasting the Penrose-phase rate with the
    Penrose-Diosi self-energy."""
    lump = cfg.lump()
    rows = []
    for d in separations:
        rate = separation_phase_rate(cfg, d, evaluate)
        e = penrose_self_energy(cfg, d, lump=lump).E_pen
        rows.append(PDRow(float(d), rate, e))
    return rows
