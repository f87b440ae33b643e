import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gravcollapse import gravity, units
from gravcollapse.gravity import GaussianLump, MassConfiguration, TabulatedLump, UniformSphere

LUMPS = [UniformSphere(2.0, 1.5), GaussianLump(2.0, 1.5)]


@pytest.mark.parametrize("lump", LUMPS, ids=["sphere", "gauss"])
class TestLumpProfiles:
    def test_mass_normalisation(self, lump):
        pts = lump.breakpoints() or None
        m = integrate.quad(lambda r: 4 * math.pi * r * r * lump.density(r), 0, lump.extent,
                           points=pts, limit=200)[0]
        assert m == pytest.approx(lump.mass, rel=1e-8)
        assert lump.enclosed(10 * lump.extent) == pytest.approx(lump.mass)

    def test_far_field_is_point_mass(self, lump):
        r = 3 * lump.extent
        assert lump.psi(r) == pytest.approx(lump.mass / r, rel=1e-12)

    def test_field_is_potential_gradient(self, lump):
        r = np.array([0.3, 0.9, 2.0, 4.0])
        h = 1e-6
        dpsi = (lump.psi(r + h) - lump.psi(r - h)) / (2 * h)
        assert np.allclose(lump.field(r), -dpsi, rtol=1e-6)

    def test_psi_moment(self, lump):
        for s in (0.4, 1.5, 3.7):
            ref = integrate.quad(lambda t: lump.psi(t) * t, 0, s, limit=200)[0]
            assert lump.psi_moment(s) == pytest.approx(ref, rel=1e-9)

    def test_enclosed_moment(self, lump):
        for s in (0.4, 1.5, 3.7):
            ref = integrate.quad(lambda t: lump.enclosed(t), 0, s, limit=200)[0]
            assert lump.enclosed_moment(s) == pytest.approx(ref, rel=1e-9)

    def test_self_interaction_matches_closed_form(self, lump):
        U = 0.5 * units.G_NEWTON * lump.self_interaction()
        assert U == pytest.approx(lump.self_energy(), rel=1e-9)

    def test_interaction_limits(self, lump):
        assert lump.interaction(0.0) == pytest.approx(lump.self_interaction())
        d = 5 * lump.extent
        assert lump.interaction(d) == pytest.approx(lump.mass ** 2 / d, rel=1e-8)
        with pytest.raises(ValueError):
            lump.interaction(-1.0)


def test_separated_spheres_interact_as_points():
    s = UniformSphere(1.0, 1.0)
    for d in (2.0, 2.5, 7.0):
        assert s.interaction(d) == pytest.approx(1.0 / d, rel=1e-9)


def test_tabulated_lump_matches_gaussian():
    g = GaussianLump(1.0, 1.0)
    r = np.linspace(0, 14, 20001)
    t = TabulatedLump(r, g.density(r))
    assert t.mass == pytest.approx(1.0, rel=1e-6)
    assert t.self_interaction() == pytest.approx(g.self_interaction(), rel=1e-5)
    assert t.interaction(2.0) == pytest.approx(g.interaction(2.0), rel=1e-5)
    assert t.psi(30.0) == pytest.approx(1 / 30.0, rel=1e-6)


def test_configuration_validation():
    with pytest.raises(ValueError):
        MassConfiguration(-1.0, 1.0)
    with pytest.raises(ValueError):
        MassConfiguration(1.0, 0.0)
    with pytest.raises(ValueError):
        MassConfiguration(1.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        MassConfiguration(1.0, 1.0, n_constituents=0)
    with pytest.raises(ValueError):
        MassConfiguration(1.0, 1.0, entangled_fraction=1.5)
    with pytest.raises(ValueError):
        MassConfiguration(1.0, 1.0, profile="cube")


def test_newtonian_potential():
    cfg = MassConfiguration(3.0, 1.0, profile="uniform_sphere")
    assert gravity.newtonian_potential(cfg, 4.0) == pytest.approx(-units.G_NEWTON * 3.0 / 4.0)
    assert gravity.newtonian_potential(cfg.replace(total_mass=0.0), 4.0) == 0.0
    with pytest.raises(ValueError):
        gravity.newtonian_potential(cfg, -1.0)


def test_self_potential_conventions():
    cfg = MassConfiguration(2.0, 1.0, profile="uniform_sphere")
    G = units.G_NEWTON
    assert gravity.self_potential(cfg, 2.0, "centre") == pytest.approx(1.5 * G * 2.0)
    assert gravity.self_potential(cfg, 2.0, "mean") == pytest.approx(1.2 * G * 2.0)
    assert gravity.self_potential(cfg, 0.0) == 0.0
    with pytest.raises(ValueError):
        gravity.self_potential(cfg, 2.0, "edge")


def test_phi12_scales_with_coherent_constituents(caplog):
    base = MassConfiguration(10.0, 1.0, 5.0, n_constituents=10)
    half = base.replace(entangled_fraction=0.5)
    assert gravity.phi12(half).value == pytest.approx(0.5 * gravity.phi12(base).value)
    with caplog.at_level("WARNING"):
        assert gravity.phi12(base.replace(displacement=1.0)).overlapping
    assert "overlap" in caplog.text


def test_collapse_time_values():
    tau_e = gravity.collapse_time(gravity.electron()).seconds
    assert 7e23 / 1.5 <= tau_e <= 7e23 * 1.5
    m = 100 * units.NUCLEON_MASS
    tau_n = gravity.collapse_time(MassConfiguration(m, 1 / m, 10 / m)).seconds
    assert 1e7 <= tau_n <= 1e9
    assert gravity.collapse_time(MassConfiguration(0.0, 1.0)).natural == math.inf


@given(st.floats(1e-3, 1e3), st.floats(0.1, 10.0))
def test_collapse_time_scales_as_inverse_mass_squared(m, k):
    cfg = MassConfiguration(m, 1.0, 3.0)
    t1 = gravity.collapse_time(cfg).natural
    t2 = gravity.collapse_time(cfg.replace(total_mass=k * m)).natural
    assert t1 / t2 == pytest.approx(k * k, rel=1e-9)


def test_required_mass_roundtrip():
    cons = MassConfiguration(26.08, 2e-14 * units.METRE, 5e-14 * units.METRE)
    tau = units.SECOND
    M = gravity.required_mass(tau, cons)
    n = M / cons.total_mass
    big = cons.replace(total_mass=M, n_constituents=1)
    rate = gravity.phase_rate(cons) * n
    assert 1 / rate == pytest.approx(tau, rel=1e-12)
    assert big.total_mass == M
    assert gravity.required_mass(tau, cons.replace(entangled_fraction=0.2)) == pytest.approx(5 * M)
    assert gravity.required_mass(math.inf, cons) == 0.0
    with pytest.raises(ValueError):
        gravity.required_mass(0.0, cons)


def test_qubit_product_is_square_of_entangled():
    e = gravity.qubit_estimate(10 ** 6, units.SECOND, "entangled")
    p = gravity.qubit_estimate(10 ** 6, units.SECOND, "product")
    assert p == pytest.approx(e * e)
    with pytest.raises(ValueError):
        gravity.qubit_estimate(0, units.SECOND)
    with pytest.raises(ValueError):
        gravity.qubit_estimate(1, units.SECOND, "mixed")


@pytest.mark.parametrize("profile", ["gaussian", "uniform_sphere"])
def test_branch_overlap(profile):
    cfg = MassConfiguration(1.0, 1.0, profile=profile)
    assert gravity.branch_overlap(cfg, 0.0) == pytest.approx(1.0)
    ds = np.linspace(0, 6, 30)
    c = [gravity.branch_overlap(cfg, d) for d in ds]
    assert np.all(np.diff(c) <= 1e-15)
    assert c[-1] < 0.02


def test_separation_rate_saturates():
    cfg = MassConfiguration(1.0, 1.0, profile="uniform_sphere")
    assert gravity.separation_phase_rate(cfg, 0.0) == 0.0
    assert gravity.separation_phase_rate(cfg, 3.0) == pytest.approx(gravity.separation_phase_rate(cfg, 9.0))
    assert gravity.separation_phase_rate(cfg, 9.0) == pytest.approx(gravity.phase_rate(cfg))


@pytest.mark.parametrize("profile", ["gaussian", "uniform_sphere"])
def test_self_energy_shape(profile):
    cfg = MassConfiguration(1.0, 1.0, profile=profile)
    ds = [0.0, 0.2, 0.7, 1.5, 3.0, 10.0, 50.0]
    E = [gravity.penrose_self_energy(cfg, d).E_pen for d in ds]
    assert E[0] == 0.0
    assert all(e >= 0 for e in E)
    assert np.all(np.diff(E) > 0)
    U = gravity.penrose_self_energy(cfg, 0.0).U_self
    assert E[-1] == pytest.approx(2 * U - units.G_NEWTON / 50.0, rel=1e-8)
    assert E[-1] < 2 * U


def test_small_displacement_is_quadratic():
    cfg = MassConfiguration(1.0, 1.0)
    e1 = gravity.penrose_self_energy(cfg, 1e-2).E_pen
    e2 = gravity.penrose_self_energy(cfg, 2e-2).E_pen
    assert e2 / e1 == pytest.approx(4.0, rel=1e-3)


def test_variance_measure():
    cfg = MassConfiguration(1.0, 1.0, 4.0)
    half = gravity.penrose_self_energy(cfg)
    assert half.E_var == pytest.approx(0.25 * half.E_pen, rel=1e-10)
    assert gravity.penrose_self_energy(cfg, alphas=(1.0, 0.0)).E_var == 0.0
    assert half.pd_decoherence_time == pytest.approx(1 / half.E_pen)
    with pytest.raises(ValueError):
        gravity.penrose_self_energy(cfg, alphas=(1.0, 1.0))


@given(st.floats(0.05, 20.0), st.sampled_from(["gaussian", "uniform_sphere"]))
@settings(max_examples=20)
def test_gradient_form_agrees(d, profile):
    cfg = MassConfiguration(1.0, 1.0, profile=profile)
    e = gravity.penrose_self_energy(cfg, d).E_pen
    assert gravity.gradient_form_energy(cfg.lump(), d) == pytest.approx(e, rel=1e-6)


def test_gradient_form_edge_cases():
    lump = GaussianLump(1.0, 1.0)
    assert gravity.gradient_form_energy(lump, 0.0) == 0.0
    with pytest.raises(ValueError):
        gravity.gradient_form_energy(lump, -1.0)


@pytest.mark.parametrize("profile", ["gaussian", "uniform_sphere"])
def test_monte_carlo_oracle(profile):
    cfg = MassConfiguration(1.0, 1.0, profile=profile)
    d = 1.3
    mc = gravity.monte_carlo_self_energy(cfg.lump(), d, n_pairs=400_000, seed=3, chunk=100_000)
    e = gravity.penrose_self_energy(cfg, d).E_pen
    assert abs(mc.value - e) < 5 * mc.stderr


def test_monte_carlo_seeded():
    lump = UniformSphere(1.0, 1.0)
    a = gravity.monte_carlo_self_energy(lump, 2.0, 1000, seed=1)
    b = gravity.monte_carlo_self_energy(lump, 2.0, 1000, seed=1)
    assert a == b
    with pytest.raises(TypeError):
        gravity.sample_lump(TabulatedLump([0, 1, 2], [1, 1, 0]), 10, np.random.default_rng())


def test_sample_lump_moments(rng):
    x = gravity.sample_lump(UniformSphere(1.0, 2.0), 200_000, rng)
    assert np.max(np.linalg.norm(x, axis=1)) <= 2.0
    # <r^2> = 3 R^2 / 5 for a ball
    assert np.mean(np.sum(x * x, axis=1)) == pytest.approx(2.4, rel=0.01)


def test_pd_comparison_rows():
    cfg = MassConfiguration(1.0, 1.0)
    rows = gravity.pd_comparison(cfg, [0.5, 5.0, 50.0])
    assert [r.separation for r in rows] == [0.5, 5.0, 50.0]
    assert rows[1].penrose_phase_rate == pytest.approx(rows[2].penrose_phase_rate, rel=1e-3)
    assert rows[2].E_pen > rows[1].E_pen
