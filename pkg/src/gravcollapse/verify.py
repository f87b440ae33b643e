"""Acceptance checks shared by ``gravcollapse verify`` and the test suite.

Each criterion returns one or more :class:`Check` rows; a criterion holds
when every row passes. Rows flagged ``known_defect`` test a target that the
implementation cannot meet because the target itself is inconsistent; they
are reported as failures and explained in the output.
"""
from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import born, experiments, gravity, paths, residual, sn, units
from .hilbert import HermitianOperator, StateVector, random_hermitian, random_state


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    measured: float | str
    expected: str
    known_defect: str = ""

    @property
    def expected_failure(self) -> bool:
        return bool(self.known_defect) and not self.passed


def _within_factor(x: float, target: float, f: float) -> bool:
    return target / f <= x <= target * f


# -- 1-3: estimates -----------------------------------------------------------

def criterion_1() -> list[Check]:
    t0 = time.perf_counter()
    tau_e = gravity.collapse_time(gravity.electron()).seconds
    m = 100 * units.NUCLEON_MASS
    tau_n = gravity.collapse_time(gravity.MassConfiguration(m, 1 / m, 10 / m)).seconds
    dt = time.perf_counter() - t0
    return [
        Check(1, "electron collapse time [s]", _within_factor(tau_e, 7e23, 1.5), tau_e,
              "7e23 within x1.5"),
        Check(1, "100-nucleon collapse time [s]", _within_factor(tau_n, 1e8, 10.0), tau_n,
              "1e8 within x10"),
        Check(1, "runtime [s]", dt < 1.0, dt, "< 1"),
    ]


def silicon(fraction: float = 1.0) -> gravity.MassConfiguration:
    """Silicon-like nucleus: 28 nucleons' worth of mass, 4 fm radius,
    displaced by 10 fm."""
    fm = 1e-15 * units.METRE
    return gravity.MassConfiguration(26.08, 4 * fm, 10 * fm, entangled_fraction=fraction)


def criterion_2() -> list[Check]:
    t0 = time.perf_counter()
    ng = [units.grams(gravity.required_mass(units.SECOND, silicon(f))) * 1e9 for f in (1.0, 0.2)]
    dt = time.perf_counter() - t0
    return [
        Check(2, "required coherent mass [ng]", _within_factor(ng[0], 0.2, 3.0), ng[0],
              "0.2 within x3"),
        Check(2, "coherent fraction 0.2 [ng]", _within_factor(ng[1], 1.0, 3.0), ng[1],
              "1 within x3"),
        Check(2, "runtime [s]", dt < 1.0, dt, "< 1"),
    ]


def criterion_3() -> list[Check]:
    ent = gravity.qubit_estimate(10 ** 6, units.SECOND, "entangled")
    prod = gravity.qubit_estimate(10 ** 6, units.SECOND, "product")
    return [
        Check(3, "entangled qubits", _within_factor(ent, 1e17, 10.0), ent, "1e17 within x10"),
        Check(3, "product qubits", _within_factor(prod, 1e35, 10.0), prod, "1e35 within x10"),
    ]


# -- 4-6: residual ------------------------------------------------------------

def random_two_branch(rng) -> paths.TwoBranchConfig:
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    a /= np.linalg.norm(a)
    return paths.TwoBranchConfig(a[0], a[1], rng.uniform(0.5, 2.0), -rng.uniform(0, 1),
                                 -rng.uniform(0, 1), 1.0)


def criterion_4(n_configs: int = 50, n_nodes: int = 20001, seed: int = 4) -> list[Check]:
    rng = born.make_rng(seed)
    t = np.linspace(0.0, 1.0, n_nodes)
    pre_err = post_err = 0.0
    for _ in range(n_configs):
        cfg = random_two_branch(rng)
        path, H = paths.two_branch_model(cfg, t)
        pre = residual.residual_norms(path, H)
        post = residual.residual_norms(path, H, gauge=True)
        pre_err = max(pre_err, float(np.max(np.abs(pre - cfg.residual_norm(False)))))
        post_err = max(post_err, float(np.max(np.abs(post - cfg.residual_norm(True)))))
    vanish = 0.0
    for cfg in (paths.TwoBranchConfig(1.0, 0.0, 1.3, -0.7, -0.2),
                paths.TwoBranchConfig(0.0, 1j, 1.3, -0.7, -0.2),
                paths.TwoBranchConfig(0.6, 0.8, 1.3, 0.0, 0.0)):
        path, H = paths.two_branch_model(cfg, t[:101], exact_derivatives=True)
        vanish = max(vanish, float(np.max(residual.residual_norms(path, H))),
                     float(np.max(residual.residual_norms(path, H, gauge=True))))
    return [
        Check(4, "pre-gauge |numeric - analytic|", pre_err <= 1e-8, pre_err, "<= 1e-8"),
        Check(4, "post-gauge |numeric - analytic|", post_err <= 1e-6, post_err, "<= 1e-6"),
        Check(4, "vanishing cases ||R||", vanish <= 1e-12, vanish, "<= 1e-12"),
    ]


def _evolving(dim: int, rng, t) -> tuple[residual.EvolutionPath, np.ndarray]:
    """Path ``exp(-i K t) x0`` with exact derivatives and random K."""
    K = random_hermitian(dim, rng).entries
    x0 = random_state(dim, rng).amplitudes
    w, U = np.linalg.eigh(K)
    X = (np.exp(-1j * np.outer(t, w)) * (U.conj().T @ x0)) @ U.T
    dX = X @ (-1j * K).T
    return residual.EvolutionPath(t, X, derivatives=dX), K


def full_space_residual_sq(A, B, H_A, H_B, pairs) -> np.ndarray:
    """Brute-force oracle: gauged ``||R||^2`` of ``|A>|B>`` in the full space."""
    n = A.n_nodes
    psi = np.einsum("ni,nj->nij", A.states, B.states).reshape(n, -1)
    dpsi = (np.einsum("ni,nj->nij", A.state_derivative(), B.states)
            + np.einsum("ni,nj->nij", A.states, B.state_derivative())).reshape(n, -1)
    dA, dB = A.dim, B.dim
    H = np.kron(H_A, np.eye(dB)) + np.kron(np.eye(dA), H_B)
    for a, b in pairs:
        H = H + np.kron(a, b)
    full = residual.EvolutionPath(A.times, psi, derivatives=dpsi)
    return residual.residual_norms(full, H, gauge=True) ** 2


def _apply_local(op, psi, k, n, d):
    # psi: (nodes, d**n); apply op to factor k
    shape = (psi.shape[0],) + (d,) * n
    x = np.moveaxis(psi.reshape(shape), k + 1, -1) @ op.T
    return np.moveaxis(x, -1, k + 1).reshape(psi.shape)


def n_copy_residual(n: int, X: residual.EvolutionPath, K_H) -> np.ndarray:
    """Gauged ``||R||`` of the ``n``-fold product ``|X>^n`` under
    ``sum_k H_k`` in the full ``d^n`` space."""
    d = X.dim
    g = residual.energy_gauge(X, K_H)
    psi, dpsi = g.states, g.state_derivative()
    full = psi
    dfull = dpsi
    for _ in range(n - 1):
        m = full.shape[0]
        dfull = (np.einsum("ni,nj->nij", dfull, psi) + np.einsum("ni,nj->nij", full, dpsi)).reshape(m, -1)
        full = np.einsum("ni,nj->nij", full, psi).reshape(m, -1)
    Hpsi = sum(_apply_local(K_H, full, k, n, d) for k in range(n))
    R = 1j * dfull - Hpsi
    par = np.einsum("ni,ni->n", full.conj(), R)
    R = R - par[:, None] * full
    return np.linalg.norm(R, axis=1)


def criterion_5(n_instances: int = 100, seed: int = 5) -> list[Check]:
    rng = born.make_rng(seed)
    t = np.linspace(0.0, 1.0, 7)
    err = 0.0
    for dims in ((2, 2), (3, 2)):
        for _ in range(n_instances):
            A, _ = _evolving(dims[0], rng, t)
            B, _ = _evolving(dims[1], rng, t)
            HA = random_hermitian(dims[0], rng).entries
            HB = random_hermitian(dims[1], rng).entries
            pairs = [(random_hermitian(dims[0], rng).entries, random_hermitian(dims[1], rng).entries)
                     for _ in range(2)]
            got = residual.interacting_residual(A, B, HA, HB, pairs)
            ref = full_space_residual_sq(A, B, HA, HB, pairs)
            err = max(err, float(np.max(np.abs(got - ref) / np.maximum(ref, 1.0))))
    # no coupling: Pythagorean composition of the separately gauged norms
    pyth = 0.0
    for _ in range(20):
        A, _ = _evolving(2, rng, t)
        B, _ = _evolving(3, rng, t)
        HA, HB = random_hermitian(2, rng).entries, random_hermitian(3, rng).entries
        got = residual.interacting_residual(A, B, HA, HB)
        rA = residual.residual_norms(A, HA, gauge=True)
        rB = residual.residual_norms(B, HB, gauge=True)
        comp = np.array([residual.compose_separable([a, b]) ** 2 for a, b in zip(rA, rB)])
        pyth = max(pyth, float(np.max(np.abs(got - comp))))
    # sqrt(n) growth for n identical non-interacting copies
    X, _ = _evolving(2, rng, t)
    Hq = random_hermitian(2, rng).entries
    r1 = residual.residual_norms(X, Hq, gauge=True)
    scal = 0.0
    for n in (1, 4, 9, 16):
        rn = n_copy_residual(n, X, Hq)
        scal = max(scal, float(np.max(np.abs(rn / (math.sqrt(n) * r1) - 1.0))))
    return [
        Check(5, "decomposition vs full tensor product (rel)", err <= 1e-8, err, "<= 1e-8"),
        Check(5, "H_int = 0 Pythagorean composition", pyth <= 1e-12, pyth, "exact (<= 1e-12)"),
        Check(5, "sqrt(n) scaling, n in {1,4,9,16} (rel)", scal <= 1e-8, scal, "<= 1e-8"),
    ]


def criterion_6(n_nodes: int = 4001) -> list[Check]:
    H = HermitianOperator.diag([0.3, 1.1])
    worst_S = 0.0
    orders = []
    for k in range(1, 6):
        th_s = k * math.pi / 12
        for prof in ("linear", "smoothstep", "cosine"):
            errs = []
            for n in (n_nodes, 2 * n_nodes - 1):
                t = np.linspace(0.0, 2.0, n)
                b1, b2 = paths.two_level_bases(H, t)
                sched = paths.RotationSchedule(th_s, 0.0, 2.0, phi=0.4, profile=prof)
                rot = paths.rotation_path(sched, b1, b2)
                if n == n_nodes:
                    S = residual.action(rot, H, gauge=True).S
                    worst_S = max(worst_S, abs(S - sched.rotation_action()))
                norms = residual.residual_norms(rot, H, gauge=True)
                errs.append(float(np.max(np.abs(norms - sched.theta_dot(t)))))
            if errs[1] > 1e-13:
                orders.append(math.log2(errs[0] / errs[1]))
    low = min(orders) if orders else 2.0
    return [
        Check(6, "action vs pi/2 - theta_s (15 cases)", worst_S <= 1e-6, worst_S, "<= 1e-6"),
        Check(6, "per-node ||R|| vs theta' observed order", low >= 1.8, low, ">= 1.8 (stencil order 2)"),
    ]


# -- 7-9: born ----------------------------------------------------------------

def criterion_7(n_nodes: int = 2001) -> list[Check]:
    errA = errR = 0.0
    for k in range(1, 10):
        w = k / 10
        _, _, A = experiments.rotation_statistics(w, "linear", 1.0, n_nodes, (0.2, 0.9))
        errA = max(errA, abs(A + 0.5 * math.log(w)))
        errR = max(errR, abs(math.exp(-2 * A) - w))
    return [
        Check(7, "A vs -ln|alpha_2|", errA <= 1e-6, errA, "<= 1e-6"),
        Check(7, "rate vs |alpha_2|^2", errR <= 1e-6, errR, "<= 1e-6"),
    ]


def criterion_8(seeds: int = 20, n_samples: int = 10 ** 6, perturb: str | None = None,
                seed: int = 8) -> list[Check]:
    t0 = time.perf_counter()
    rng = born.make_rng(seed)
    closed = 0.0
    rows = []
    for D in (2, 3, 5, 8):
        a = random_state(D, rng).amplitudes
        w = np.abs(a) ** 2
        rates = born.rates_from_A(born.end_state_statistics(a, method="exact"))
        if perturb == "born_rate":
            rates[0] *= 1.1
        closed = max(closed, float(np.max(np.abs(born.race_closed_form(rates) - w))))
        ok = 0
        for s in range(seeds):
            out = born.race_sample(rates, n_samples, seed=(seed, D, s))
            sigma = np.sqrt(w * (1 - w) / n_samples)
            ok += bool(np.all(np.abs(out.frequencies - w) <= 4 * sigma))
        rows.append(Check(8, f"MC within 4 sigma, D={D} (seeds passing)", ok >= 0.95 * seeds,
                          f"{ok}/{seeds}", f">= {math.ceil(0.95 * seeds)}/{seeds}"))
    # segment factorisation of a rotation split at an interior node
    t = np.linspace(0.0, 1.0, 2001)
    H = HermitianOperator.diag([0.0, 0.0])
    b1, b2 = paths.two_level_bases(H, t)
    sched = paths.RotationSchedule(math.asin(math.sqrt(0.3)), 0.0, 1.0, profile="smoothstep")
    rot = paths.rotation_path(sched, b1, b2)
    ref = paths.schrodinger_path(StateVector(rot.states[0]), H, t)
    full = born.statistic_A(rot, H, ref)
    first = born.statistic_A(rot, H, ref, span=(0, 800))
    second = born.statistic_A(rot, H, ref, span=(800, 2000))
    fact = abs(full.rate - first.rate * second.rate)
    dt = time.perf_counter() - t0
    return [Check(8, "closed form vs |alpha_I|^2, D in {2,3,5,8}", closed <= 1e-12, closed,
                  "<= 1e-12")] + rows + [
        Check(8, "segment factorisation |r - r1 r2|", fact <= 1e-10, fact, "<= 1e-10"),
        Check(8, "runtime [s]", dt < 30.0, dt, "< 30"),
    ]


def criterion_9(n_samples: int = 10 ** 5, seed: int = 9) -> list[Check]:
    rng = born.make_rng(seed)
    q = random_state(3, rng)
    defect = max(born.WeakMeasurement(q, p).completeness_defect()
                 for p in np.linspace(0.0, 1.0, 11))
    # p = 1 is the projective measurement onto q
    wm = born.WeakMeasurement(q, 1.0)
    P = np.outer(q.amplitudes, q.amplitudes.conj())
    proj = max(float(np.max(np.abs(wm.M_plus.entries - P))),
               float(np.max(np.abs(wm.M_minus.entries - (np.eye(3) - P)))))
    psi = random_state(3, rng)
    born_p = abs(np.vdot(q.amplitudes, psi.amplitudes)) ** 2
    proj = max(proj, abs(wm.probabilities(psi)[0] - born_p))
    outs = born.weak_measure_many(wm, q, 1000, seed=rng)
    proj_ok = proj <= 1e-15 and bool(np.all(outs == 1))
    p = 0.3
    hits = born.weak_measure_many(born.WeakMeasurement(q, p), q, n_samples, seed=rng)
    freq = float(np.mean(hits == 1))
    sigma = math.sqrt(p * (1 - p) / n_samples)
    return [
        Check(9, "completeness defect, p in {0,...,1}", defect <= 1e-12, defect, "<= 1e-12"),
        Check(9, "p = 1 projective statistics", proj_ok, proj, "exact"),
        Check(9, "detection frequency on |q>, p = 0.3", abs(freq - p) <= 4 * sigma, freq,
              f"0.3 +- {4 * sigma:.2g}"),
    ]


# -- 10, 12: self-energy ------------------------------------------------------

def criterion_10(n_pairs: int = 10 ** 7, seed: int = 10) -> list[Check]:
    G = units.G_NEWTON
    R = 1.0
    cfg = gravity.MassConfiguration(1.0, R, profile="uniform_sphere")
    zero = gravity.penrose_self_energy(cfg, 0.0).E_pen
    d = 20 * R
    res = gravity.penrose_self_energy(cfg, d)
    mc = gravity.monte_carlo_self_energy(cfg.lump(), d, n_pairs, seed=seed)
    stated = 2 * res.U_self - 2 * G * cfg.total_mass ** 2 / d
    exact = 2 * res.U_self - G * cfg.total_mass ** 2 / d
    dev_stated = abs(stated / mc.value - 1)
    dev_exact = abs(exact / mc.value - 1)
    dev_quad = abs(res.E_pen / mc.value - 1)
    grad = 0.0
    for prof in ("uniform_sphere", "gaussian"):
        c = gravity.MassConfiguration(1.0, R, profile=prof)
        for dd in (0.3, 1.0, 2.5, 7.0, 20.0):
            e = gravity.penrose_self_energy(c, dd).E_pen
            grad = max(grad, abs(gravity.gradient_form_energy(c.lump(), dd) / e - 1))
    return [
        Check(10, "E_pen at zero displacement", zero == 0.0, zero, "0"),
        Check(10, "stated far field 2U - 2Gm^2/d vs MC at d = 20R", dev_stated <= 0.01,
              dev_stated, "<= 1%",
              known_defect="the cross term of the double integral is G m^2 / d, not 2 G m^2 / d; "
                           "the stated form is 4.3% below the Monte Carlo value at d = 20R"),
        Check(10, "far field 2U - Gm^2/d vs MC at d = 20R", dev_exact <= 0.01, dev_exact, "<= 1%"),
        Check(10, "quadrature E_pen vs MC at d = 20R", dev_quad <= 0.01, dev_quad, "<= 1%"),
        Check(10, "gradient form vs double integral (rel)", grad <= 1e-4, grad, "<= 1e-4"),
    ]


def criterion_12() -> list[Check]:
    rows = []
    for prof in ("gaussian", "uniform_sphere"):
        cfg = gravity.MassConfiguration(1.0, 1.0, profile=prof)
        d = 20.0
        r1, r2 = gravity.pd_comparison(cfg, [d, 2 * d])
        ratio = r1.penrose_phase_rate / r2.penrose_phase_rate
        E_inf = 2 * gravity.penrose_self_energy(cfg, 0.0).U_self
        dev = (E_inf - r1.E_pen) / (E_inf - r2.E_pen)
        rows += [
            Check(12, f"phase-rate ratio d/2d ({prof})", abs(ratio - 1) <= 1e-6, ratio, "1 +- 1e-6"),
            Check(12, f"E_pen asymptote-deviation ratio ({prof})", abs(dev - 2) <= 0.1, dev,
                  "2 +- 5%"),
        ]
    return rows


# -- 11: Schrodinger-Newton ---------------------------------------------------

def criterion_11(n_points: int = 2000) -> list[Check]:
    t0 = time.perf_counter()
    gs = sn.ground_state(sn.RadialGrid(40.0, n_points, mass=1.0, G=1.0))
    hist = gs.energy_history
    rise = float(np.max(np.diff(hist)))
    evolved = sn.evolve_real(gs.grid, 0.05, 1000)
    drift = abs(evolved.norm() - gs.grid.norm())
    s0 = 1.0
    free = sn.RadialGrid.gaussian(30.0, n_points, s0, mass=1.0, G=0.0)
    T = 2 * s0 ** 2
    _, trace = sn.evolve_real(free, T / 1000, 1000, record_every=50)
    width = np.sqrt(trace[:, 1] / 3)
    law = s0 * np.sqrt(1 + (trace[:, 0] / T) ** 2)
    spread = float(np.max(np.abs(width / law - 1)))
    # (m, G) = (2, 0.5) against (1, 1); lengths scale as 1 / (G m^3)
    a = 1.0 / (0.5 * 2.0 ** 3)
    gs2 = sn.ground_state(sn.RadialGrid(40.0 * a, n_points, mass=2.0, G=0.5))
    scale = (gs2.energy / gs.energy) / (0.5 ** 2 * 2.0 ** 5)
    dt = time.perf_counter() - t0
    return [
        Check(11, "real-time norm drift per 1000 steps", drift <= 1e-8, drift, "<= 1e-8"),
        Check(11, "free spreading vs width law (rel)", spread <= 0.01, spread, "<= 1%"),
        Check(11, "imaginary-time energy increase", rise <= 1e-12, rise, "<= 1e-12 (monotone)"),
        Check(11, "ground-state plug-back residual", gs.residual <= 1e-6, gs.residual, "<= 1e-6"),
        Check(11, "E ~ G^2 m^5 ratio", abs(scale - 1) <= 1e-4, scale, "1 +- 1e-4"),
        Check(11, "runtime [s]", dt < 60.0, dt, "< 60"),
    ]


# -- 13: determinism ----------------------------------------------------------

def criterion_13() -> list[Check]:
    from . import cli, scenario

    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in scenario.bundled():
            outs = []
            for k in (1, 2):
                path = Path(tmp) / f"{name}_{k}.csv"
                code, _ = cli.run_one(name, str(path))
                files = sorted(Path(tmp).glob(f"{name}_{k}*.csv"))
                outs.append((code, [f.read_bytes() for f in files]))
            same = outs[0] == outs[1] and outs[0][0] == 0
            rows.append(Check(13, f"byte-identical rerun: {name}", same,
                              "identical" if same else "differs", "identical"))
    return rows


CRITERIA: dict[int, Callable[..., list[Check]]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12, 13: criterion_13,
}
SUITES = {
    "residual": (4, 5, 6),
    "born": (7, 8, 9),
    "gravity": (1, 2, 3, 10, 12),
    "sn": (11,),
    "all": tuple(range(1, 14)),
}


def run_suite(name: str, perturb: str | None = None) -> list[Check]:
    perturb = perturb or os.environ.get("GRAVCOLLAPSE_VERIFY_PERTURB")
    out = []
    for c in SUITES[name]:
        out += CRITERIA[c](perturb=perturb) if c == 8 else CRITERIA[c]()
    return out


def _show(v) -> str:
    return v if isinstance(v, str) else format(float(v), ".6g")


def format_table(rows: list[Check]) -> str:
    lines = []
    for r in rows:
        status = "PASS" if r.passed else ("FAIL (known defect)" if r.known_defect else "FAIL")
        lines.append(f"[{r.criterion:2d}] {status:<20} {r.name}: measured {_show(r.measured)}, "
                     f"expected {r.expected}")
        if r.known_defect and not r.passed:
            lines.append(f"     note: {r.known_defect}")
    return "\n".join(lines)
