"""Hidden-variable layer: path statistic, exponential race, weak measurement.

Every end state ``I`` gets an independent exponential variable with rate
``r_I = exp(-2 A_I)``; the smallest draw wins. For branch rotations
``A = -ln|alpha_I|`` so the race reproduces ``|alpha_I|^2``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .hilbert import HermitianOperator, StateVector
from .residual import EvolutionPath, energy_gauge, integrate, residual_norms

log = logging.getLogger(__name__)

C_MIN = 1e-9
SUPPRESSED_BELOW = 1e-12


class OrthogonalExcursionError(ArithmeticError):
    """The path leaves the reference orthogonally; the statistic diverges."""


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; accepts an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(n)]


@dataclass(frozen=True)
class PathStatistic:
    A: float
    rate: float = field(init=False)
    divergent: bool = False

    def __post_init__(self):
        if self.A < 0:
            raise ValueError("path statistic must be non-negative")
        object.__setattr__(self, "rate", 0.0 if math.isinf(self.A) else math.exp(-2.0 * self.A))


def overlap_profile(path: EvolutionPath, reference: EvolutionPath) -> np.ndarray:
    """``C(t) = |<reference|path>|`` per node."""
    if path.times.shape != reference.times.shape or not np.allclose(path.times, reference.times):
        raise ValueError("path and reference must share the time grid")
    if path.dim != reference.dim:
        raise ValueError("path and reference must share the dimension")
    return np.abs(np.einsum("ni,ni->n", reference.states.conj(), path.states))


def statistic_integrand(path: EvolutionPath, H, reference: EvolutionPath,
                        c_min: float = C_MIN) -> np.ndarray:
    """``||R|| sqrt(1 - C^2) / C`` per node, in the energy gauge.

    Raises
    ------
    OrthogonalExcursionError
        if ``C <= c_min`` anywhere.
    """
    C = overlap_profile(path, reference)
    if np.any(C <= c_min):
        bad = int(np.argmin(C))
        raise OrthogonalExcursionError(
            f"overlap with the reference drops to {C[bad]:.3e} at t = {path.times[bad]!r}")
    norms = residual_norms(energy_gauge(path, H), H)
    return norms * np.sqrt(np.clip(1.0 - C * C, 0.0, None)) / C


def statistic_A(path: EvolutionPath, H, reference: EvolutionPath, span=None,
                c_min: float = C_MIN, strict: bool = False) -> PathStatistic:
    """Weighted residual integral of a path relative to the Schrodinger
    reference, and the rate ``exp(-2A)``.

    ``span=(i0, i1)`` restricts the quadrature to nodes ``i0..i1``
    inclusive; the integrand is still evaluated on the whole path, so
    splitting at an interior node is exactly additive for matching
    quadrature rules.

    A path that becomes orthogonal to the reference gets ``A = inf`` and
    rate 0 (or raises with ``strict=True``).
    """
    try:
        f = statistic_integrand(path, H, reference, c_min)
    except OrthogonalExcursionError:
        if strict:
            raise
        log.warning("orthogonal excursion: path assigned rate 0")
        return PathStatistic(math.inf, divergent=True)
    t = path.times
    if span is not None:
        i0, i1 = span
        f, t = f[i0:i1 + 1], t[i0:i1 + 1]
    return PathStatistic(max(integrate(f, t), 0.0))


def end_state_statistics(amplitudes, n_nodes: int = 2001, profile: str = "linear",
                         method: str = "quadrature", duration: float = 1.0) -> np.ndarray:
    """Statistic ``A_I`` for rotating ``sum_J alpha_J |J>`` into each basis
    state ``|I>``.

    ``method="quadrature"`` integrates the weighted residual along an
    explicit rotation path (free evolution, H = 0); ``"exact"`` uses the
    closed form ``-ln|alpha_I|``. Zero amplitudes give ``inf``.
    """
    from .paths import RotationSchedule, branch_path

    a = np.asarray(amplitudes, dtype=complex)
    if abs(np.vdot(a, a).real - 1.0) > 1e-12:
        raise ValueError("amplitudes must be normalised")
    mod = np.abs(a)
    with np.errstate(divide="ignore"):
        exact = -np.log(mod)
    if method == "exact":
        return exact
    if method != "quadrature":
        raise ValueError("method must be 'quadrature' or 'exact'")
    D = a.size
    t = np.linspace(0.0, duration, n_nodes)
    H = np.zeros((D, D), dtype=complex)
    ref = EvolutionPath(t, np.tile(a, (n_nodes, 1)))
    out = np.empty(D)
    for i in range(D):
        if mod[i] == 0.0 or mod[i] >= 1.0 - 1e-15:
            out[i] = exact[i] if mod[i] == 0.0 else 0.0
            continue
        rest = a.copy()
        rest[i] = 0.0
        rest /= np.linalg.norm(rest)
        e_i = np.zeros(D, dtype=complex)
        e_i[i] = 1.0
        sched = RotationSchedule(math.asin(mod[i]), 0.0, duration, profile=profile)
        b1 = EvolutionPath(t, np.tile(rest, (n_nodes, 1)))
        b2 = EvolutionPath(t, np.tile(e_i, (n_nodes, 1)))
        rot = branch_path(sched.theta(t), float(np.angle(a[i])), b1, b2)
        out[i] = statistic_A(rot, H, ref).A
    return out


def rates_from_A(A_values) -> np.ndarray:
    A = np.asarray(A_values, dtype=float)
    return np.where(np.isinf(A), 0.0, np.exp(-2.0 * A))


def _check_rates(rates) -> np.ndarray:
    r = np.asarray(rates, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("race needs at least one end state")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("rates must be finite and non-negative")
    if not np.any(r > 0):
        raise ValueError("all end states are suppressed (every rate is 0)")
    if np.any(r == 0):
        log.info("excluding %d end state(s) with rate 0 from the race", int(np.sum(r == 0)))
    return r


def race_closed_form(rates) -> np.ndarray:
    """Winning probabilities ``r_I / sum_J r_J``."""
    r = _check_rates(rates)
    return r / np.sum(r)


class RaceOutcome(NamedTuple):
    rates: np.ndarray
    counts: np.ndarray
    frequencies: np.ndarray
    probabilities: np.ndarray
    n_samples: int
    ties: int

    @property
    def sigma(self) -> np.ndarray:
        p = self.probabilities
        return np.sqrt(p * (1 - p) / self.n_samples)


def race_draws(rates, n_samples: int, rng) -> np.ndarray:
    """``(n_samples, D)`` hidden-variable values, exponential with the given
    rates; suppressed end states draw ``inf``."""
    r = _check_rates(rates)
    rng = make_rng(rng)
    lam = rng.standard_exponential(size=(n_samples, r.size))
    with np.errstate(divide="ignore"):
        lam = lam / r
    return lam


def race_sample(rates, n_samples: int, seed=None, chunk: int = 1 << 18) -> RaceOutcome:
    """Run the race ``n_samples`` times; the smallest draw wins, exact ties
    go to the lowest index."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    r = _check_rates(rates)
    rng = make_rng(seed)
    counts = np.zeros(r.size, dtype=np.int64)
    ties = 0
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        lam = race_draws(r, k, rng)
        win = np.argmin(lam, axis=1)
        counts += np.bincount(win, minlength=r.size)
        if r.size > 1:
            srt = np.partition(lam, 1, axis=1)
            ties += int(np.sum(srt[:, 0] == srt[:, 1]))
        done += k
    if ties:
        log.warning("%d exact ties in the race, broken by lowest index", ties)
    return RaceOutcome(r, counts, counts / n_samples, r / r.sum(), n_samples, ties)


class Suppression(NamedTuple):
    probabilities: np.ndarray
    """``[P_schrodinger, P_rotation_1, ...]``."""
    suppressed: bool
    """The Schrodinger (cat) end state is never observed in practice."""


def suppression_check(schrodinger_A: float, rotation_A) -> Suppression:
    rot = np.atleast_1d(np.asarray(rotation_A, dtype=float))
    A = np.concatenate([[float(schrodinger_A)], rot])
    if np.any(A < 0):
        raise ValueError("path statistics must be non-negative")
    # shift exponents before exponentiating; A = inf maps to weight 0
    finite = A[np.isfinite(A)]
    if finite.size == 0:
        raise ValueError("every candidate end state diverges")
    w = np.where(np.isinf(A), 0.0, np.exp(-2.0 * (A - finite.min())))
    p = w / w.sum()
    return Suppression(p, bool(p[0] < SUPPRESSED_BELOW))


@dataclass(frozen=True)
class WeakMeasurement:
    """Two-outcome instrument asking "is the system in |q>?" that fires
    with probability ``p`` on ``|q>``."""

    q: StateVector
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"detection probability must be in [0, 1], got {self.p!r}")
        q = self.q if isinstance(self.q, StateVector) else StateVector(self.q)
        object.__setattr__(self, "q", q.normalise())

    @property
    def M_plus(self) -> HermitianOperator:
        a = self.q.amplitudes
        return HermitianOperator(math.sqrt(self.p) * np.outer(a, a.conj()), hermitian=False)

    @property
    def M_minus(self) -> HermitianOperator:
        a = self.q.amplitudes
        P = np.outer(a, a.conj())
        return HermitianOperator(np.eye(a.size) - (1.0 - math.sqrt(1.0 - self.p)) * P,
                                 hermitian=False)

    def completeness_defect(self) -> float:
        Mp, Mm = self.M_plus.entries, self.M_minus.entries
        E = Mp.conj().T @ Mp + Mm.conj().T @ Mm
        return float(np.max(np.abs(E - np.eye(E.shape[0]))))

    def probabilities(self, state) -> tuple[float, float]:
        """``(P(+), P(-))`` for a normalised state."""
        psi = np.asarray(getattr(state, "amplitudes", state), dtype=complex)
        plus = self.p * abs(np.vdot(self.q.amplitudes, psi)) ** 2
        return plus, 1.0 - plus


def weak_measure(wm: WeakMeasurement, state, seed=None) -> tuple[int, StateVector]:
    """Sample one outcome (+1 detection, -1 no detection) and the
    normalised post-measurement state."""
    psi = StateVector(getattr(state, "amplitudes", state))
    rng = make_rng(seed)
    p_plus, _ = wm.probabilities(psi)
    outcome = 1 if rng.random() < p_plus else -1
    M = wm.M_plus if outcome == 1 else wm.M_minus
    post = M.entries @ psi.amplitudes
    return outcome, StateVector(post / np.linalg.norm(post), psi.basis_labels)


def weak_measure_many(wm: WeakMeasurement, state, n: int, seed=None) -> np.ndarray:
    """Outcomes of ``n`` independent single measurements on fresh copies of
    ``state``, using one generator stream."""
    rng = make_rng(seed)
    return np.array([weak_measure(wm, state, rng)[0] for _ in range(n)])

