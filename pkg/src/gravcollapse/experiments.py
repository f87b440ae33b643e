"""One function per scenario kind. Each returns a :class:`Table` (header and
rows in fixed column order) plus optional extra tables keyed by suffix."""
from __future__ import annotations

import math
from typing import Any, NamedTuple

import numpy as np

from . import born, gravity, paths, residual, sn, units
from .hilbert import HermitianOperator, StateVector
from .scenario import Scenario


class Table(NamedTuple):
    header: tuple[str, ...]
    rows: list[tuple]


class Result(NamedTuple):
    table: Table
    extra: dict[str, Table]


def _geometry(p: dict[str, Any], mass: float) -> gravity.MassConfiguration:
    return gravity.MassConfiguration(
        mass, p["smearing_radius"], p["displacement"], p["n_constituents"],
        p["entangled_fraction"], p["profile"])


def run_estimate(sc: Scenario) -> Result:
    p = sc.params()
    q = p["quantity"]
    if q == "collapse_time":
        cfg = _geometry(p, p["mass"])
        ph = gravity.phi12(cfg, p["evaluate"])
        tau = gravity.collapse_time(cfg, p["evaluate"])
        header = ("mass_GeV", "smearing_radius_invGeV", "displacement_invGeV", "n_constituents",
                  "entangled_fraction", "phi12", "phase_rate_GeV", "tau_natural", "tau_seconds",
                  "overlapping")
        row = (cfg.total_mass, cfg.smearing_radius, cfg.displacement, cfg.n_constituents,
               cfg.entangled_fraction, ph.value, gravity.phase_rate(cfg, p["evaluate"]),
               tau.natural, tau.seconds, ph.overlapping)
        return Result(Table(header, [row]), {})
    if q == "required_mass":
        cfg = _geometry(p, p["mass"])
        m = gravity.required_mass(p["tau"], cfg, p["evaluate"])
        header = ("tau_seconds", "constituent_mass_GeV", "entangled_fraction", "total_mass_GeV",
                  "total_mass_grams", "total_mass_ng")
        g = units.grams(m)
        return Result(Table(header, [(units.seconds(p["tau"]), cfg.total_mass,
                                      cfg.entangled_fraction, m, g, g * 1e9)]), {})
    scalings = ("entangled", "product") if p["scaling"] == "both" else (p["scaling"],)
    header = ("electrons_per_qubit", "tau_seconds", "scaling", "qubits")
    rows = [(p["electrons_per_qubit"], units.seconds(p["tau"]), s,
             gravity.qubit_estimate(p["electrons_per_qubit"], p["tau"], s, evaluate=p["evaluate"]))
            for s in scalings]
    return Result(Table(header, rows), {})


def run_two_branch(sc: Scenario) -> Result:
    p = sc.params()
    cfg = paths.TwoBranchConfig(p["alpha1"], p["alpha2"], p["mass"], p["phi1"], p["phi2"],
                                p["duration"])
    t = np.linspace(0.0, cfg.duration, p["n_nodes"])
    path, H = paths.two_branch_model(cfg, t)
    pre = residual.residual_norms(path, H)
    post = residual.residual_norms(path, H, gauge=True)
    S = residual.action(path, H, gauge=True).S
    pp = paths.penrose_phase(cfg)
    header = ("residual_pre_numeric", "residual_pre_analytic", "residual_post_numeric",
              "residual_post_analytic", "action_gauged", "penrose_phase", "penrose_scaling",
              "collapse_regime")
    row = (float(np.mean(pre)), cfg.residual_norm(False), float(np.mean(post)),
           cfg.residual_norm(True), S, pp.value, pp.scaling, pp.collapse_regime)
    return Result(Table(header, [row]), {})


def rotation_statistics(alpha2_sq: float, schedule: str, duration: float, n_nodes: int,
                        energies=(0.0, 0.0)) -> tuple[float, float, float]:
    """``(theta_s, action, A)`` of the rotation of
    ``sqrt(1 - w)|1> + sqrt(w)|2>`` into ``|2>`` over ``[0, duration]``."""
    H = HermitianOperator.diag(list(energies))
    t = np.linspace(0.0, duration, n_nodes)
    b1, b2 = paths.two_level_bases(H, t)
    sched = paths.RotationSchedule.from_amplitudes(math.sqrt(1 - alpha2_sq), math.sqrt(alpha2_sq),
                                                   0.0, duration, profile=schedule)
    rot = paths.rotation_path(sched, b1, b2)
    psi0 = StateVector([math.sqrt(1 - alpha2_sq), math.sqrt(alpha2_sq)])
    ref = paths.schrodinger_path(psi0, H, t)
    S = residual.action(rot, H, gauge=True).S
    A = born.statistic_A(rot, H, ref).A
    return sched.theta_s, S, A


def run_rotation(sc: Scenario) -> Result:
    p = sc.params()
    header = ("alpha2_sq", "schedule", "theta_s", "action", "action_exact", "statistic_A",
              "A_exact", "rate", "rate_exact")
    rows = []
    for w in p["alpha2_sq"]:
        if not 0.0 < w < 1.0:
            raise ValueError(f"alpha2_sq must lie in (0, 1), got {w!r}")
        for prof in p["schedules"]:
            th, S, A = rotation_statistics(w, prof, p["duration"], p["n_nodes"],
                                           (p["energy1"], p["energy2"]))
            rows.append((w, prof, th, S, math.pi / 2 - th, A, -0.5 * math.log(w),
                         math.exp(-2 * A), w))
    return Result(Table(header, rows), {})


def run_born_race(sc: Scenario) -> Result:
    p = sc.params()
    w = np.asarray(p["weights"], dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"branch weights must be non-negative and sum to 1 (sum = {w.sum()!r})")
    A = born.end_state_statistics(np.sqrt(w), n_nodes=p["n_nodes"])
    rates = born.rates_from_A(A)
    out = born.race_sample(rates, p["n_samples"], seed=sc.seed)
    header = ("end_state", "weight", "statistic_A", "rate", "probability", "count", "frequency",
              "sigma")
    rows = [(i, w[i], A[i], out.rates[i], out.probabilities[i], int(out.counts[i]),
             out.frequencies[i], out.sigma[i]) for i in range(w.size)]
    return Result(Table(header, rows), {})


def _sn_grid(p) -> sn.RadialGrid:
    return sn.RadialGrid(p["r_max"], p["n_points"], mass=p["mass"], G=p["G"])


def run_sn_ground(sc: Scenario) -> Result:
    p = sc.params()
    gs = sn.ground_state(_sn_grid(p))
    e = sn.energies(gs.grid)
    header = ("energy", "mu", "kinetic", "gravitational", "residual", "iterations", "rms_radius")
    row = (gs.energy, gs.mu, e.kinetic, e.gravitational, gs.residual, gs.iterations,
           math.sqrt(gs.grid.moment(2)))
    pot = sn.solve_poisson(gs.grid)
    prof = Table(("r", "psi", "density", "Phi"),
                 list(zip(gs.grid.r, gs.grid.psi.real, gs.grid.density(), pot.Phi)))
    return Result(Table(header, [row]), {"profile": prof})


def run_sn_evolve(sc: Scenario) -> Result:
    p = sc.params()
    g = sn.RadialGrid.gaussian(p["r_max"], p["n_points"], p["sigma"], mass=p["mass"], G=p["G"])
    rows = [(0.0, g.moment(2), math.sqrt(g.moment(2) / 3), g.norm())]
    _, trace = sn.evolve_real(g, p["dt"], p["steps"], record_every=p["record_every"])
    rows += [(t, r2, math.sqrt(r2 / 3), n) for t, r2, n in trace]
    return Result(Table(("t", "r2_mean", "width", "norm"), rows), {})


def run_pd_compare(sc: Scenario) -> Result:
    p = sc.params()
    cfg = gravity.MassConfiguration(p["mass"], p["smearing_radius"], profile=p["profile"])
    U = gravity.penrose_self_energy(cfg, 0.0).U_self
    rows = []
    for r in gravity.pd_comparison(cfg, p["separations"]):
        far = 2 * U - gravity.G_NEWTON * cfg.total_mass ** 2 / r.separation if r.separation else 0.0
        tau = math.inf if r.E_pen == 0 else 1.0 / r.E_pen
        rows.append((r.separation, r.penrose_phase_rate, r.E_pen, far, tau))
    return Result(Table(("separation_invGeV", "penrose_phase_rate_GeV", "E_pen_GeV",
                         "E_pen_far_field_GeV", "pd_time_invGeV"), rows), {})


def run_weak_measure(sc: Scenario) -> Result:
    p = sc.params()
    psi = StateVector(p["state"])
    wm = born.WeakMeasurement(StateVector(p["q"], normalised=False), p["p"])
    outcomes = born.weak_measure_many(wm, psi, p["n_samples"], seed=sc.seed)
    hits = int(np.sum(outcomes == 1))
    expected = wm.probabilities(psi)[0]
    n = p["n_samples"]
    header = ("p", "n_samples", "detections", "frequency", "expected", "sigma",
              "completeness_defect")
    row = (wm.p, n, hits, hits / n, expected, math.sqrt(expected * (1 - expected) / n),
           wm.completeness_defect())
    return Result(Table(header, [row]), {})


RUNNERS = {
    "estimate": run_estimate,
    "two_branch": run_two_branch,
    "rotation": run_rotation,
    "born_race": run_born_race,
    "sn_ground": run_sn_ground,
    "sn_evolve": run_sn_evolve,
    "pd_compare": run_pd_compare,
    "weak_measure": run_weak_measure,
}


def run(sc: Scenario) -> Result:
    return RUNNERS[sc.kind](sc)
