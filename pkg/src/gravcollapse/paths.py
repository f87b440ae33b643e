"""Candidate evolutions: exact Schrodinger paths, the two-branch product
path and branch rotations, plus ranking of a finite menu of candidates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .hilbert import HermitianOperator, StateVector
from .residual import EvolutionPath, action

TWO_BRANCH_LABELS = ("11", "12", "21", "22")
COLLAPSE_PHASE = 1.0


def schrodinger_path(psi0, H, times) -> EvolutionPath:
    """Exact propagation ``exp(-i H (t - t0)) psi0`` via the eigenbasis of H."""
    if isinstance(H, HermitianOperator):
        if not H.hermitian:
            raise ValueError("Schrodinger propagation needs a Hermitian Hamiltonian")
        m = H.entries
    else:
        m = np.asarray(H, dtype=complex)
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise ValueError("Schrodinger propagation needs a Hermitian Hamiltonian")
    v0 = np.asarray(getattr(psi0, "amplitudes", psi0), dtype=complex)
    if abs(np.vdot(v0, v0).real - 1.0) > 1e-12:
        raise ValueError("initial state must be normalised")
    t = np.asarray(times, dtype=float)
    w, U = np.linalg.eigh(m)
    c0 = U.conj().T @ v0
    phases = np.exp(-1j * np.outer(t - t[0], w))
    states = (phases * c0) @ U.T
    labels = getattr(psi0, "basis_labels", None)
    return EvolutionPath(t, states, basis_labels=labels)


@dataclass(frozen=True)
class TwoBranchConfig:
    """Mass superposed over two non-overlapping locations.

    ``phi1``/``phi2`` are the dimensionless Newtonian potentials of each
    branch at its own location; cross terms are taken as zero.
    """

    alpha1: complex
    alpha2: complex
    m: float
    phi1: float
    phi2: float
    duration: float = 1.0

    def __post_init__(self):
        w = abs(self.alpha1) ** 2 + abs(self.alpha2) ** 2
        if abs(w - 1.0) > 1e-12:
            raise ValueError(f"branch weights sum to {w!r}, not 1")
        if self.phi1 > 0 or self.phi2 > 0:
            raise ValueError("Newtonian self-potentials must be <= 0")
        if self.m < 0 or self.duration < 0:
            raise ValueError("mass and duration must be non-negative")

    @property
    def phi12(self) -> float:
        return self.phi1 + self.phi2

    @property
    def overlap_weight(self) -> float:
        """``|alpha1 alpha2|``."""
        return abs(self.alpha1 * self.alpha2)

    def residual_norm(self, gauged: bool) -> float:
        """Closed-form ``||R||`` of the product path, before or after gauging."""
        a = self.overlap_weight
        pre = 0.5 * self.m * a * abs(self.phi12)
        if gauged:
            return pre * math.sqrt(max(2.0 - 4.0 * a * a, 0.0))
        return pre * math.sqrt(2.0)


def two_branch_hamiltonian(cfg: TwoBranchConfig) -> HermitianOperator:
    """Canonical Hamiltonian on span{|chi_i>|Phi_j>}: only the unmixed
    configurations carry gravitational energy."""
    return HermitianOperator.diag([cfg.m * cfg.phi1, 0.0, 0.0, cfg.m * cfg.phi2])


def two_branch_model(cfg: TwoBranchConfig, times, exact_derivatives: bool = False
                     ) -> tuple[EvolutionPath, HermitianOperator]:
    """Product path ``(a1|chi1> + a2|chi2>)(a1|Phi1> + a2|Phi2>)``.

    Each factor evolves with half the branch phase (the doubled Hamiltonian
    acts on both factors), ``a_i(t) = alpha_i exp(-i t m phi_i / 2)``.
    With ``exact_derivatives`` the analytic time derivative is attached
    instead of the finite-difference estimate.
    """
    t = np.asarray(times, dtype=float)
    w1, w2 = 0.5 * cfg.m * cfg.phi1, 0.5 * cfg.m * cfg.phi2
    a1 = cfg.alpha1 * np.exp(-1j * t * w1)
    a2 = cfg.alpha2 * np.exp(-1j * t * w2)
    states = np.stack([a1 * a1, a1 * a2, a2 * a1, a2 * a2], axis=1)
    deriv = None
    if exact_derivatives:
        deriv = -1j * states * np.array([2 * w1, w1 + w2, w1 + w2, 2 * w2])
    path = EvolutionPath(t, states, derivatives=deriv, basis_labels=TWO_BRANCH_LABELS)
    return path, two_branch_hamiltonian(cfg)


def two_branch_reference(cfg: TwoBranchConfig, times) -> EvolutionPath:
    """Entangled Schrodinger solution with the same branch weights."""
    t = np.asarray(times, dtype=float)
    states = np.zeros((t.size, 4), dtype=complex)
    states[:, 0] = cfg.alpha1 * np.exp(-1j * t * cfg.m * cfg.phi1)
    states[:, 3] = cfg.alpha2 * np.exp(-1j * t * cfg.m * cfg.phi2)
    return EvolutionPath(t, states, basis_labels=TWO_BRANCH_LABELS)


class PenrosePhase(NamedTuple):
    value: float
    """Gauged residual norm integrated over the duration."""
    scaling: float
    """Order-of-magnitude form ``tau m |Phi_12|``."""
    collapse_regime: bool


def penrose_phase(cfg: TwoBranchConfig) -> PenrosePhase:
    value = cfg.duration * cfg.residual_norm(gauged=True)
    scaling = cfg.duration * cfg.m * abs(cfg.phi12)
    return PenrosePhase(value, scaling, scaling >= COLLAPSE_PHASE)


# Monotone profiles u: [0, 1] -> [0, 1] with their derivatives.
SCHEDULES: dict[str, tuple[Callable, Callable]] = {
    "linear": (lambda s: s, lambda s: np.ones_like(s)),
    "smoothstep": (lambda s: s * s * (3 - 2 * s), lambda s: 6 * s * (1 - s)),
    "cosine": (lambda s: 0.5 * (1 - np.cos(np.pi * s)), lambda s: 0.5 * np.pi * np.sin(np.pi * s)),
    "quadratic": (lambda s: s * s, lambda s: 2 * s),
}


@dataclass(frozen=True)
class RotationSchedule:
    """Rotation of a two-branch superposition into one branch.

    ``theta`` runs from ``theta_s`` at ``t_start`` to pi/2 at ``t_end``
    following ``profile``; outside the interaction window it is constant.
    ``direction`` names the surviving branch (1 or 2).
    """

    theta_s: float
    t_start: float
    t_end: float
    phi: float = 0.0
    profile: str | Callable = "linear"
    direction: int = 2

    def __post_init__(self):
        if not 0.0 < self.theta_s <= math.pi / 2 + 1e-15:
            raise ValueError("theta_s must lie in (0, pi/2]")
        if not self.t_end > self.t_start:
            raise ValueError("rotation window must have positive length")
        if self.direction not in (1, 2):
            raise ValueError("direction must be 1 or 2")
        if isinstance(self.profile, str) and self.profile not in SCHEDULES:
            raise ValueError(f"unknown schedule profile {self.profile!r}")

    @classmethod
    def from_amplitudes(cls, alpha1: complex, alpha2: complex, t_start, t_end, **kw):
        """Schedule for ``alpha1|1> + alpha2|2>`` collapsing into branch 2."""
        return cls(math.atan2(abs(alpha2), abs(alpha1)), t_start, t_end,
                   phi=float(np.angle(alpha2)) - float(np.angle(alpha1)), **kw)

    def _u(self, s):
        if callable(self.profile):
            return self.profile(s)
        return SCHEDULES[self.profile][0](s)

    def theta(self, t) -> np.ndarray:
        s = np.clip((np.asarray(t, dtype=float) - self.t_start) / (self.t_end - self.t_start), 0.0, 1.0)
        return self.theta_s + (math.pi / 2 - self.theta_s) * self._u(s)

    def theta_dot(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        span = self.t_end - self.t_start
        s = (t - self.t_start) / span
        inside = (s >= 0) & (s <= 1)
        if callable(self.profile):
            h = 1e-6
            sc = np.clip(s, h, 1 - h)
            du = (self.profile(sc + h) - self.profile(sc - h)) / (2 * h)
        else:
            du = SCHEDULES[self.profile][1](np.clip(s, 0, 1))
        return np.where(inside, (math.pi / 2 - self.theta_s) * du / span, 0.0)

    def rotation_action(self) -> float:
        return math.pi / 2 - self.theta_s


def branch_path(theta, phi: float, base1: EvolutionPath, base2: EvolutionPath,
                orth_tol: float = 1e-10) -> EvolutionPath:
    """``cos(theta(t)) |1(t)> + e^{i phi} sin(theta(t)) |2(t)>`` for any
    angle profile ``theta`` sampled on the base grid."""
    if not np.array_equal(base1.times, base2.times):
        raise ValueError("branch paths must share the time grid")
    b1, b2 = base1.states, base2.states
    overlap = np.max(np.abs(np.einsum("ni,ni->n", b1.conj(), b2)))
    if overlap > orth_tol:
        raise ValueError(f"branch paths are not orthogonal (|<1|2>| = {overlap:.3e})")
    th = np.asarray(theta, dtype=float)
    states = np.cos(th)[:, None] * b1 + np.exp(1j * phi) * np.sin(th)[:, None] * b2
    return EvolutionPath(base1.times, states, basis_labels=base1.basis_labels)


def rotation_path(sched: RotationSchedule, base1: EvolutionPath, base2: EvolutionPath
                  ) -> EvolutionPath:
    """Unitary rotation of the superposition into the surviving branch.

    The ansatz has no parallel residual component, so it is already in the
    energy gauge and ``||R|| = theta'``.
    """
    if sched.direction == 1:
        base1, base2 = base2, base1
    return branch_path(sched.theta(base1.times), sched.phi, base1, base2)


def rank_paths(candidates: Mapping[str, EvolutionPath], H, gauge: bool = True
               ) -> list[tuple[str, float]]:
    """Order candidate paths by their action, smallest first."""
    scored = [(name, action(p, H, gauge=gauge).S) for name, p in candidates.items()]
    return sorted(scored, key=lambda x: x[1])


def two_level_bases(H: HermitianOperator, times) -> tuple[EvolutionPath, EvolutionPath]:
    """Schrodinger paths of the first two eigenstates of ``H``."""
    w, U = np.linalg.eigh(H.entries)
    e1 = StateVector(U[:, 0])
    e2 = StateVector(U[:, 1])
    return schrodinger_path(e1, H, times), schrodinger_path(e2, H, times)
