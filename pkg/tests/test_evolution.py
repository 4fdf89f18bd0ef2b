import numpy as np
import pytest

from fracnls.evolution import (
    EvolutionConfig, EvolutionError, ResolutionError, TrajectoryReport, boost_commutation_defect,
    evolve, make_traveling_initial, mass, momentum, pseudo_galilean_boost, soliton_velocity,
    strang_step,
)
from fracnls.grid import Field, Grid
from fracnls.solvers import SolitonProfile, sech_profile, solve_traveling_profile


def sech_soliton(grid, k):
    q = Field(grid, sech_profile(grid.x))
    return SolitonProfile(q, 1.0, 1.0, k, 0.0, 0, "exact")


@pytest.mark.parametrize("kw", [dict(dt=0, t_final=1), dict(dt=0.3, t_final=1),
                                dict(dt=0.1, t_final=-1), dict(dt=0.1, t_final=1, observe_every=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        EvolutionConfig(**kw)


@pytest.mark.parametrize("sigma", [0.6, 0.75, 1.0])
def test_plane_wave_is_exact(sigma):
    g = Grid(np.pi, 64)
    A, xi0 = 0.8, 5.0
    u = Field(g, A * np.exp(1j * xi0 * g.x))
    dt, n = 0.01, 100
    for _ in range(n):
        u = strang_step(u, sigma, dt)
    t = dt * n
    exact = A * np.exp(1j * xi0 * g.x) * np.exp(-1j * (xi0 ** (2 * sigma) - A**2) * t)
    assert np.max(np.abs(u.values - exact)) <= 1e-10 * t


def test_zero_field_and_errors():
    g = Grid(1.0, 16)
    z = strang_step(Field(g, np.zeros(16)), 0.75, 0.1)
    assert np.all(z.values == 0)
    with pytest.raises(ValueError):
        strang_step(Field(g, np.zeros(16), "spectral"), 0.75, 0.1)
    with pytest.raises(EvolutionError), np.errstate(all="ignore"):
        strang_step(Field(g, np.full(16, 1e200)), 0.75, 0.1)


def test_second_order_in_dt():
    g = Grid(20.0, 256)
    u0 = Field(g, 1.2 * np.exp(-g.x**2) * np.exp(0.5j * g.x))

    def run(dt):
        u = u0
        for _ in range(int(round(0.5 / dt))):
            u = strang_step(u, 0.75, dt)
        return u.values

    ref = run(1e-4)
    e1 = np.linalg.norm(run(0.01) - ref)
    e2 = np.linalg.norm(run(0.005) - ref)
    assert 3.5 < e1 / e2 < 4.5


def test_traveling_initial_identities():
    g = Grid(40 * np.pi, 4096)
    p = solve_traveling_profile(0.75, 1.0, g)
    u0 = make_traveling_initial(p)
    assert mass(g, u0.values) == pytest.approx(mass(g, p.values), rel=1e-14)
    expected = p.k * mass(g, p.values) + momentum(g, p.values)
    assert momentum(g, u0.values) == pytest.approx(expected, rel=1e-12)
    static = SolitonProfile(p.field, 0.75, 1.0, 0.0, 0.0, 0, "exact")
    assert np.array_equal(make_traveling_initial(static).values, p.values)


def test_traveling_initial_guards():
    g = Grid(40 * np.pi, 4096)
    p = solve_traveling_profile(0.75, 1.0, g)
    off = SolitonProfile(p.field, 0.75, 1.0, 1.01, 0.0, 0, "exact")
    with pytest.raises(ResolutionError, match="periodic"):
        make_traveling_initial(off)
    coarse = Grid(40 * np.pi, 512)
    q = solve_traveling_profile(0.75, 1.0, coarse)
    with pytest.raises(ResolutionError, match="under-resolved"):
        make_traveling_initial(q)


def test_classical_galilean_soliton():
    g = Grid(20 * np.pi, 2048)
    p = sech_soliton(g, 0.5)
    rep = evolve(make_traveling_initial(p), 1.0, EvolutionConfig(1e-3, 1.0), reference=p)
    assert soliton_velocity(1.0, 0.5) == 1.0
    assert rep.velocity == pytest.approx(1.0, rel=1e-6)
    assert rep.max_shape_error < 1e-5
    assert rep.mass_drift < 1e-12 and rep.momentum_drift < 1e-8
    # phase rate -(k^2 - 1)
    assert rep.phase_rate == pytest.approx(0.75, abs=1e-5)


def test_traveling_soliton_rigidity():
    g = Grid(40 * np.pi, 4096)
    p = solve_traveling_profile(0.75, 1.0, g)
    rep = evolve(make_traveling_initial(p), 0.75, EvolutionConfig(1e-3, 0.2), reference=p)
    assert rep.velocity == pytest.approx(1.5, rel=1e-6)
    assert rep.max_shape_error < 1e-4
    assert rep.mass_drift < 1e-8 and rep.energy_drift < 1e-6 and rep.momentum_drift < 1e-8
    assert abs(rep.phase_rate) < 1e-3
    assert len(list(rep.rows())) == len(rep.times)


def test_center_unwraps_across_the_boundary():
    g = Grid(10 * np.pi, 1024)
    p = sech_soliton(g, 2.0)
    # speed 4 for 6 time units crosses the 20 pi period once
    rep = evolve(make_traveling_initial(p), 1.0, EvolutionConfig(5e-3, 6.0, observe_every=20),
                 reference=p)
    assert rep.center[-1] == pytest.approx(24.0, rel=1e-4)
    assert rep.velocity == pytest.approx(4.0, rel=1e-4)


def test_mass_guard():
    g = Grid(np.pi, 64)
    # a field with energy in the top modes loses mass under the dealiasing filter
    u = Field(g, np.exp(1j * 30 * g.x) + 1.0)
    with pytest.raises(EvolutionError, match="mass drift"):
        evolve(u, 0.75, EvolutionConfig(0.01, 0.1, observe_every=1))


def test_report_validation():
    with pytest.raises(ValueError):
        TrajectoryReport(np.array([0.0, 1.0]), np.ones(2), np.ones(2), np.ones(2), np.ones(3), np.ones(2))
    with pytest.raises(ValueError):
        TrajectoryReport(np.array([1.0, 0.0]), *[np.ones(2)] * 5)


def test_boost_basics():
    g = Grid(20 * np.pi, 1024)
    u = Field(g, sech_profile(g.x))
    assert np.array_equal(pseudo_galilean_boost(u, 0.75, 0.0, 3.0).values, u.values)
    b0 = pseudo_galilean_boost(u, 0.75, 1.0, 0.0)
    assert np.allclose(b0.values, np.exp(1j * g.x) * u.values, atol=1e-15)
    with pytest.raises(ResolutionError):
        pseudo_galilean_boost(u, 0.75, 0.123, 1.0)


def test_boost_commutes_only_at_sigma_one():
    g = Grid(20 * np.pi, 2048)
    u0 = Field(g, sech_profile(g.x))
    cfg = EvolutionConfig(1e-3, 0.5, observe_every=50)
    classical = boost_commutation_defect(u0, 1.0, 1.0, cfg)
    assert classical.max_defect < 1e-10
    assert classical.symbol_max < 1e-10
    frac = boost_commutation_defect(u0, 0.75, 1.0, cfg)
    assert frac.max_defect > 1e-3
    assert frac.symbol_rate > 0
    # early growth is linear with a rate of the order of ||E u0_hat|| / ||u0||
    early = frac.defect[1] / frac.times[1]
    assert 0.1 * frac.symbol_rate < early < 10 * frac.symbol_rate
