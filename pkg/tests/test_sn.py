import math

import numpy as np
import pytest
from scipy import special

from gravcollapse import gravity, sn

E_REF, MU_REF = -0.054257, -0.162775


@pytest.fixture(scope="module")
def ground():
    return sn.ground_state(sn.RadialGrid(40.0, 2000, mass=1.0, G=1.0))


def test_grid_validation():
    with pytest.raises(ValueError):
        sn.RadialGrid(1.0, 2)
    with pytest.raises(ValueError):
        sn.RadialGrid(-1.0, 10)
    with pytest.raises(ValueError):
        sn.RadialGrid(1.0, 10, mass=0.0)
    with pytest.raises(ValueError):
        sn.RadialGrid(1.0, 10, wave=np.ones(3))
    with pytest.raises(ValueError):
        sn.RadialGrid(1.0, 10).normalise()


def test_gaussian_grid_is_normalised():
    g = sn.RadialGrid.gaussian(20.0, 1000, 1.3)
    assert g.norm() == pytest.approx(1.0)
    assert g.moment(2) == pytest.approx(3 * 1.3 ** 2, rel=1e-6)


def test_poisson_matches_gaussian_potential():
    s = 1.0
    g = sn.RadialGrid.gaussian(20.0, 4000, s, mass=1.5, G=0.7)
    pot = sn.solve_poisson(g)
    exact = -0.7 * 1.5 * special.erf(g.r / (math.sqrt(2) * s)) / g.r
    assert np.max(np.abs(pot.Phi - exact)) < 1e-5
    assert pot.boundary == pytest.approx(-0.7 * 1.5 / 20.0, rel=1e-9)
    assert sn.poisson_residual(g, pot) < 1e-9


def test_poisson_is_linear_in_G():
    g = sn.RadialGrid.gaussian(20.0, 500, 1.0, G=1.0)
    p1 = sn.solve_poisson(g).Phi
    p3 = sn.solve_poisson(sn.RadialGrid.gaussian(20.0, 500, 1.0, G=3.0)).Phi
    assert np.allclose(p3, 3 * p1, rtol=1e-12)


def test_ground_state_energy(ground):
    assert ground.energy == pytest.approx(E_REF, abs=2e-5)
    assert ground.mu == pytest.approx(MU_REF, abs=2e-5)
    assert ground.residual < 1e-6
    assert np.all(np.diff(ground.energy_history) <= 1e-12)


def test_ground_state_virial(ground):
    e = sn.energies(ground.grid)
    # 2T + V = 0 for a 1/r self-interaction
    assert 2 * e.kinetic + e.gravitational == pytest.approx(0.0, abs=1e-4)
    assert e.mu == pytest.approx(e.kinetic + 2 * e.gravitational)


def test_ground_state_is_stationary(ground):
    evolved = sn.evolve_real(ground.grid, 0.05, 400)
    assert abs(evolved.norm() - 1.0) < 1e-9
    assert evolved.moment(2) == pytest.approx(ground.grid.moment(2), rel=1e-4)
    # only a global phase e^{-i mu t}
    ov = np.vdot(ground.grid.wave, evolved.wave) * 4 * math.pi * ground.grid.spacing
    assert abs(ov) == pytest.approx(1.0, abs=1e-4)
    expected = (-ground.mu * 20.0 + math.pi) % (2 * math.pi) - math.pi
    assert np.angle(ov) == pytest.approx(expected, abs=5e-3)


def test_energy_scaling():
    a = sn.ground_state(sn.RadialGrid(40.0, 1000, mass=1.0, G=1.0))
    b = sn.ground_state(sn.RadialGrid(40.0 / 4.0, 1000, mass=1.0, G=4.0))
    assert b.energy / a.energy == pytest.approx(16.0, rel=1e-6)


def test_zero_coupling_raises():
    with pytest.raises(sn.ConvergenceError):
        sn.ground_state(sn.RadialGrid(10.0, 100, G=0.0))


def test_iteration_cap_raises():
    with pytest.raises(sn.ConvergenceError) as info:
        sn.ground_state(sn.RadialGrid(40.0, 400), max_iter=3)
    assert math.isfinite(info.value.residual)


def test_harmonic_trap_ground_state():
    m, w = 1.0, 1.0
    g = sn.RadialGrid(12.0, 1200, mass=m, G=1e-12)
    g = sn.RadialGrid(12.0, 1200, mass=m, G=1e-12, V=0.5 * m * w * w * g.r ** 2)
    gs = sn.ground_state(g, dtau=0.5, sigma0=1.0)
    assert gs.energy == pytest.approx(1.5 * w, rel=1e-4)


def test_harmonic_breathing_period():
    m, w, s = 1.0, 1.0, 0.5
    g0 = sn.RadialGrid(12.0, 1200, mass=m, G=0.0)
    g = sn.RadialGrid.gaussian(12.0, 1200, s, mass=m, G=0.0, V=0.5 * m * w * w * g0.r ** 2)
    T = math.pi / w
    _, trace = sn.evolve_real(g, T / 400, 400, record_every=10)
    r2 = trace[:, 1]
    # <r^2> oscillates at 2 w and returns after half a trap period
    assert r2[-1] == pytest.approx(g.moment(2), rel=1e-3)
    sig2_eq = 1 / (2 * m * w)
    assert np.max(r2) > 3 * sig2_eq


def test_free_spreading_law():
    s = 1.0
    g = sn.RadialGrid.gaussian(30.0, 2000, s, mass=1.0, G=0.0)
    T = 2 * s * s
    _, trace = sn.evolve_real(g, T / 500, 500, record_every=100)
    law = 3 * s * s * (1 + (trace[:, 0] / T) ** 2)
    assert np.allclose(trace[:, 1], law, rtol=2e-3)


def test_evolve_validation_and_stability():
    g = sn.RadialGrid.gaussian(10.0, 200, 1.0)
    with pytest.raises(ValueError):
        sn.evolve_real(g, 0.0, 1)
    assert sn.evolve_real(g, 0.1, 0) is g
    with pytest.raises(sn.StabilityError):
        sn.evolve_real(g, 0.1, 1, drift_limit=-1.0)


def test_inner_iterations_keep_norm():
    g = sn.RadialGrid.gaussian(20.0, 500, 1.0, G=1.0)
    out = sn.evolve_real(g, 0.05, 20, inner_iterations=2)
    assert out.norm() == pytest.approx(1.0, abs=1e-10)
    assert out.time == pytest.approx(1.0)


def test_pd_timescale(ground):
    st_ = ground.grid
    assert sn.pd_timescale(st_, 0.0) == math.inf
    with pytest.raises(ValueError):
        sn.pd_timescale(st_, -1.0)
    far = sn.pd_timescale(st_, 200.0)
    U = 0.5 * gravity.TabulatedLump(st_.r, st_.density()).self_interaction()
    assert 1 / far == pytest.approx(2 * U - 1 / 200.0, rel=1e-3)
    assert sn.pd_timescale(st_, 2.0) > far
