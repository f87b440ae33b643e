"""Residual of a path off the Schrodinger evolution and its action.

A path is a sequence of normalised states on a time grid. Its residual
``R = (i d/dt - H)|psi>`` is estimated with second-order finite differences
(one-sided second order at the end nodes; ``numpy.gradient`` handles
non-uniform grids with the weighted three-point stencil).

Gauge phases are kept separately from the sampled states: a path stores
``base`` states together with a phase ``phi(t)`` and its exact rate
``phi'(t)``, and the physical state is ``exp(-i phi) base``. The phase part
of the time derivative is therefore exact and only the base states are
differentiated numerically.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid, simpson, trapezoid

from .hilbert import DimensionError, HermitianOperator, StateVector

log = logging.getLogger(__name__)

PATH_NORM_TOL = 1e-10
QUAD_TOL = 1e-6
NORM_DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class EvolutionPath:
    """Time grid with one state per node.

    Parameters
    ----------
    times : array_like, shape (n,)
        Strictly increasing, at least three nodes.
    base : array_like, shape (n, dim)
        Sampled states before the gauge phase is applied.
    gauge_phase, gauge_rate : array_like, shape (n,), optional
        Accumulated phase ``phi`` and its time derivative. Both default to
        zero. The physical states are ``exp(-1j * phi) * base``.
    derivatives : array_like, shape (n, dim), optional
        Exact ``d base / dt`` when known analytically; replaces the finite
        difference estimate.
    """

    times: np.ndarray
    base: np.ndarray
    gauge_phase: np.ndarray | None = None
    gauge_rate: np.ndarray | None = None
    derivatives: np.ndarray | None = None
    basis_labels: tuple[str, ...] | None = None
    norm_drift: float = 0.0
    check_norm: bool = field(default=True, repr=False)

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        psi = np.array(self.base, dtype=complex)
        if t.ndim != 1 or t.size < 3:
            raise ValueError("a path needs at least 3 time nodes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("path times must be strictly increasing")
        if psi.ndim != 2 or psi.shape[0] != t.size:
            raise DimensionError(f"expected states of shape ({t.size}, dim), got {psi.shape}")
        if self.check_norm:
            n2 = np.sum(np.abs(psi) ** 2, axis=1)
            bad = np.max(np.abs(n2 - 1.0))
            if bad > PATH_NORM_TOL:
                raise ValueError(f"path states are not normalised (max |<psi|psi> - 1| = {bad:.3e})")
        phase = np.zeros(t.size) if self.gauge_phase is None else np.array(self.gauge_phase, dtype=float)
        rate = np.zeros(t.size) if self.gauge_rate is None else np.array(self.gauge_rate, dtype=float)
        if phase.shape != t.shape or rate.shape != t.shape:
            raise DimensionError("gauge phase and rate need one value per node")
        if self.derivatives is not None:
            d = np.array(self.derivatives, dtype=complex)
            if d.shape != psi.shape:
                raise DimensionError("derivatives must match the state array")
            d.setflags(write=False)
            object.__setattr__(self, "derivatives", d)
        for name, arr in (("times", t), ("base", psi), ("gauge_phase", phase), ("gauge_rate", rate)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_states(cls, times, states: Sequence, **kw) -> "EvolutionPath":
        rows = [s.amplitudes if isinstance(s, StateVector) else np.asarray(s) for s in states]
        return cls(times, np.vstack(rows), **kw)

    @property
    def n_nodes(self) -> int:
        return self.times.size

    @property
    def dim(self) -> int:
        return self.base.shape[1]

    @property
    def states(self) -> np.ndarray:
        return np.exp(-1j * self.gauge_phase)[:, None] * self.base

    def state(self, node: int) -> StateVector:
        return StateVector(self.states[node], self.basis_labels, normalised=False)

    def is_uniform(self) -> bool:
        dt = np.diff(self.times)
        return bool(np.allclose(dt, dt[0], rtol=1e-9, atol=0.0))

    def base_derivative(self) -> np.ndarray:
        if self.derivatives is not None:
            return self.derivatives
        return np.gradient(self.base, self.times, axis=0, edge_order=2)

    def state_derivative(self) -> np.ndarray:
        """d/dt of ``states`` with the phase part taken exactly."""
        ph = np.exp(-1j * self.gauge_phase)[:, None]
        return ph * (self.base_derivative() - 1j * self.gauge_rate[:, None] * self.base)

    def with_phase(self, phase, rate) -> "EvolutionPath":
        """Multiply the states by an extra ``exp(-i phase)``."""
        return EvolutionPath(self.times, self.base,
                             self.gauge_phase + np.asarray(phase, dtype=float),
                             self.gauge_rate + np.asarray(rate, dtype=float),
                             self.derivatives, self.basis_labels, self.norm_drift,
                             self.check_norm)

    def every(self, k: int) -> "EvolutionPath":
        """Subsample every ``k``-th node (keeps both ends when possible)."""
        sl = slice(None, None, k)
        d = None if self.derivatives is None else self.derivatives[sl]
        return EvolutionPath(self.times[sl], self.base[sl], self.gauge_phase[sl],
                             self.gauge_rate[sl], d, self.basis_labels, self.norm_drift,
                             self.check_norm)


@dataclass(frozen=True)
class ResidualSample:
    R: StateVector
    R_perp: StateVector
    R_par_coeff: complex
    norm_R: float


@dataclass(frozen=True)
class ActionValue:
    S: float
    error_estimate: float | None = None

    def __float__(self):
        return self.S


def hamiltonian_stack(H, n: int, dim: int) -> np.ndarray:
    """Return H as a ``(dim, dim)`` matrix or an ``(n, dim, dim)`` stack."""
    if isinstance(H, HermitianOperator):
        m = H.entries
    elif isinstance(H, (list, tuple)):
        m = np.stack([np.asarray(h.entries if isinstance(h, HermitianOperator) else h,
                                 dtype=complex) for h in H])
    else:
        m = np.asarray(H, dtype=complex)
    if m.ndim == 2:
        if m.shape != (dim, dim):
            raise DimensionError(f"Hamiltonian of shape {m.shape} for states of dimension {dim}")
    elif m.ndim == 3:
        if m.shape != (n, dim, dim):
            raise DimensionError(f"per-node Hamiltonians must have shape {(n, dim, dim)}, got {m.shape}")
    else:
        raise DimensionError(f"cannot interpret Hamiltonian of shape {m.shape}")
    return m


def apply_stack(H: np.ndarray, psi: np.ndarray) -> np.ndarray:
    if H.ndim == 2:
        return psi @ H.T
    return np.einsum("nij,nj->ni", H, psi)


def residual_vectors(path: EvolutionPath, H) -> np.ndarray:
    """``(n, dim)`` array of residual vectors ``i dpsi/dt - H psi``."""
    Hs = hamiltonian_stack(H, path.n_nodes, path.dim)
    psi = path.states
    return 1j * path.state_derivative() - apply_stack(Hs, psi)


def residual_parts(path: EvolutionPath, H):
    """Residuals with their parallel coefficients and perpendicular parts."""
    R = residual_vectors(path, H)
    psi = path.states
    par = np.einsum("ni,ni->n", psi.conj(), R)
    perp = R - par[:, None] * psi
    return R, par, perp


def residual_norms(path: EvolutionPath, H, gauge: bool = False) -> np.ndarray:
    if gauge:
        path = energy_gauge(path, H)
    return np.linalg.norm(residual_vectors(path, H), axis=1)


def residual_at(path: EvolutionPath, node: int, H) -> ResidualSample:
    n = path.n_nodes
    if not -n <= node < n:
        raise IndexError(f"node {node} outside path of {n} nodes")
    R, par, perp = residual_parts(path, H)
    return ResidualSample(
        R=StateVector.raw(R[node]),
        R_perp=StateVector.raw(perp[node]),
        R_par_coeff=complex(par[node]),
        norm_R=float(np.linalg.norm(R[node])),
    )


def energy_gauge(path: EvolutionPath, H, drift_tol: float = NORM_DRIFT_TOL) -> EvolutionPath:
    """Re-phase the path so that ``<psi|R>`` vanishes at every node.

    With ``psi = exp(-i chi) psi_old`` the parallel coefficient shifts by
    ``chi'``, so ``chi' = -Re <psi_old|R_old>``. The imaginary part of the
    coefficient is ``-Re <psi|dpsi/dt>``, i.e. norm drift, which no real
    phase can remove; it is recorded on the returned path and logged when it
    exceeds ``drift_tol``.
    """
    _, par, _ = residual_parts(path, H)
    rate = -par.real
    if path.is_uniform() and path.n_nodes >= 3:
        phase = cumulative_simpson(rate, x=path.times, initial=0.0)
    else:
        phase = cumulative_trapezoid(rate, x=path.times, initial=0.0)
    drift = float(np.max(np.abs(par.imag)))
    if drift > drift_tol:
        log.warning("path violates the unitarity contract: max |Im <psi|R>| = %.3e", drift)
    out = path.with_phase(phase, rate)
    return EvolutionPath(out.times, out.base, out.gauge_phase, out.gauge_rate,
                         out.derivatives, out.basis_labels, drift, out.check_norm)


def integrate(values: np.ndarray, times: np.ndarray, uniform: bool | None = None) -> float:
    """Composite Simpson on uniform grids, trapezoid otherwise."""
    if uniform is None:
        dt = np.diff(times)
        uniform = bool(np.allclose(dt, dt[0], rtol=1e-9, atol=0.0))
    if uniform:
        return float(simpson(values, x=times))
    return float(trapezoid(values, x=times))


def action(path: EvolutionPath, H, gauge: bool = False, check_convergence: bool = False
           ) -> ActionValue:
    """``S = integral of ||R(t)|| dt`` over the path.

    With ``check_convergence`` the action is recomputed on every other node
    and the difference, scaled for a second-order method, is reported as the
    error estimate (needs an odd node count of at least 5).
    """
    if gauge:
        path = energy_gauge(path, H)
    norms = residual_norms(path, H)
    S = integrate(norms, path.times)
    err = None
    if check_convergence:
        if path.n_nodes < 5 or path.n_nodes % 2 == 0:
            raise ValueError("step-halving check needs an odd number of at least 5 nodes")
        Hs = hamiltonian_stack(H, path.n_nodes, path.dim)
        coarse_H = Hs if Hs.ndim == 2 else Hs[::2]
        coarse = path.every(2)
        S2 = integrate(np.linalg.norm(residual_vectors(coarse, coarse_H), axis=1), coarse.times)
        err = abs(S - S2) / 3.0
    return ActionValue(S, err)


def compose_separable(norms) -> float:
    """Residual norm of non-interacting subsystems, each in its own energy gauge."""
    r = np.asarray(list(norms), dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("subsystem residual norms must be finite and non-negative")
    return float(math.sqrt(float(np.sum(r * r))))


def _expect(ops: np.ndarray, psi: np.ndarray) -> np.ndarray:
    # ops (k, d, d), psi (n, d) -> (n, k)
    return np.einsum("ni,kij,nj->nk", psi.conj(), ops, psi)


def interacting_residual(A_path: EvolutionPath, B_path: EvolutionPath, H_A, H_B,
                         H_int: Sequence[tuple] = ()) -> np.ndarray:
    """Squared residual norm of a product path ``|A>|B>`` with a coupling.

    ``H_int`` is a list of factor pairs ``(I_A^k, I_B^k)`` for
    ``sum_k I_A^k (x) I_B^k``. Each subsystem is evaluated against its
    mean-field Hamiltonian ``H_X + V_X - <V>`` and taken in its own energy
    gauge, so only the part of ``R'_X`` perpendicular to ``|X>`` enters; the
    coupling adds ``<psi| Vt^2 |psi>`` with the fluctuation operator
    ``Vt = H_int - V_A (x) 1 - 1 (x) V_B + <V>``.

    Only two subsystems are supported.

    Returns
    -------
    ndarray, shape (n,)
        ``||R||^2`` at every node.
    """
    if not np.array_equal(A_path.times, B_path.times):
        raise ValueError("subsystem paths must share the time grid")
    n, dA, dB = A_path.n_nodes, A_path.dim, B_path.dim
    HA = hamiltonian_stack(H_A, n, dA)
    HB = hamiltonian_stack(H_B, n, dB)
    A, B = A_path.states, B_path.states
    dA_dt, dB_dt = A_path.state_derivative(), B_path.state_derivative()

    pairs = list(H_int)
    if pairs:
        IA = np.stack([np.asarray(getattr(a, "entries", a), dtype=complex) for a, _ in pairs])
        IB = np.stack([np.asarray(getattr(b, "entries", b), dtype=complex) for _, b in pairs])
        if IA.shape[1:] != (dA, dA) or IB.shape[1:] != (dB, dB):
            raise DimensionError(
                f"interaction factors of shapes {IA.shape[1:]}, {IB.shape[1:]} "
                f"do not match subsystem dimensions ({dA}, {dB})")
        eA = _expect(IA, A)  # (n, k)
        eB = _expect(IB, B)
        V_mean = np.sum(eA * eB, axis=1)
        VA = np.einsum("nk,kij->nij", eB, IA)
        VB = np.einsum("nk,kij->nij", eA, IB)
    else:
        V_mean = np.zeros(n, dtype=complex)
        VA = np.zeros((n, dA, dA), dtype=complex)
        VB = np.zeros((n, dB, dB), dtype=complex)

    def perp_sq(X, dX, H, V):
        Rp = 1j * dX - apply_stack(H, X) - apply_stack(V, X) + V_mean[:, None] * X
        c = np.einsum("ni,ni->n", X.conj(), Rp)
        Rp = Rp - c[:, None] * X
        return np.sum(np.abs(Rp) ** 2, axis=1)

    total = perp_sq(A, dA_dt, HA, VA) + perp_sq(B, dB_dt, HB, VB)

    if pairs:
        fluct = np.zeros((n, dA * dB), dtype=complex)
        IAa = np.einsum("kij,nj->nki", IA, A)
        IBb = np.einsum("kij,nj->nki", IB, B)
        fluct += np.einsum("nki,nkj->nij", IAa, IBb).reshape(n, dA * dB)
        fluct -= np.einsum("ni,nj->nij", apply_stack(VA, A), B).reshape(n, -1)
        fluct -= np.einsum("ni,nj->nij", A, apply_stack(VB, B)).reshape(n, -1)
        fluct += V_mean[:, None] * np.einsum("ni,nj->nij", A, B).reshape(n, -1)
        total = total + np.sum(np.abs(fluct) ** 2, axis=1)
    return total
