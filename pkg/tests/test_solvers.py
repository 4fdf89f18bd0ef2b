import numpy as np
import pytest

from fracnls.grid import Field, Grid
from fracnls.solvers import (
    CollapseError, ConvergenceError, SolitonProfile, SolverOptions, apply_operator,
    gradient_flow_minimize, natural_length, normalize_gauge, operator_symbol, profile_distance,
    relative_residual, rescale_to_k, residual_norm, sech_profile, solve_static_ground_state,
    solve_traveling_profile, weinstein_scale,
)
from conftest import minimizer

SECH_GRID = Grid(20 * np.pi, 2048)


@pytest.mark.parametrize("kw", [dict(residual_tol=0), dict(petviashvili_gamma=2.0),
                                dict(petviashvili_gamma=1.0), dict(damping=0), dict(flow_step=-1),
                                dict(max_iterations=0), dict(initial_guess="zeros")])
def test_options_validation(kw):
    with pytest.raises(ValueError):
        SolverOptions(**kw)


@pytest.mark.parametrize("solve", [solve_static_ground_state, solve_traveling_profile])
def test_sech_oracle(solve):
    p = solve(1.0, 1.0, SECH_GRID)
    exact = sech_profile(SECH_GRID.x)
    assert np.max(np.abs(p.values - exact)) / np.max(exact) < 1e-6
    assert p.residual <= 1e-11
    assert p.method == "petviashvili"


def test_sech_residual_norm():
    prof = SolitonProfile(Field(SECH_GRID, sech_profile(SECH_GRID.x)), 1.0, 1.0, 0.0, 0.0, 0, "exact")
    assert residual_norm(prof) <= 1e-9
    with pytest.raises(Exception, match="zero"):
        relative_residual(SECH_GRID, np.zeros(SECH_GRID.N), 1.0, 1.0, 0.0)


def test_gauge_invariants():
    g = Grid(40 * np.pi, 4096)
    p = solve_traveling_profile(0.75, 1.0, g)
    v = p.values
    i = int(np.argmax(np.abs(v)))
    assert i == g.node_nearest(0.0)
    assert v[i].imag == 0.0 and v[i].real > 0
    # traveling profile is not real but |Q| is even and Q(-x) = conj Q(x)
    assert p.meta["imag_fraction"] > 1e-3
    refl = np.roll(v[::-1], 1)
    assert np.linalg.norm(refl - np.conj(v)) / np.linalg.norm(v) < 1e-9
    assert p.meta["spectral_tail"] < 1e-10


def test_perturbation_raises_residual(rng):
    g = Grid(40 * np.pi, 2048)
    p = solve_traveling_profile(0.75, 1.0, g)
    noise = rng.normal(size=g.N)
    q = p.values + 0.01 * noise * np.max(np.abs(p.values))
    assert relative_residual(g, q, 0.75, 1.0, 1.0) >= 10 * p.residual


def test_static_range_and_errors():
    with pytest.raises(ValueError):
        solve_static_ground_state(0.2, 1.0, SECH_GRID)
    with pytest.raises(ValueError):
        solve_traveling_profile(0.5, 1.0, SECH_GRID)
    with pytest.raises(ValueError):
        solve_traveling_profile(0.75, -1.0, SECH_GRID)
    with pytest.raises(ConvergenceError):
        solve_static_ground_state(0.75, 1.0, SECH_GRID, SolverOptions(max_iterations=3))
    p = solve_static_ground_state(0.4, 1.0, Grid(200 * np.pi, 2**14))
    assert p.is_static and p.residual <= 1e-11


def test_collapse_detected():
    g = Grid(20.0, 256)
    far = Field(g, 1e-200 * np.exp(-g.x**2))
    with pytest.raises((CollapseError, ConvergenceError)):
        solve_static_ground_state(0.75, 1.0, g, SolverOptions(initial_guess=far))


def test_provided_initial_guess():
    g = Grid(40 * np.pi, 2048)
    guess = Field(g, np.exp(-(g.x / 3) ** 2))
    p = solve_static_ground_state(0.75, 1.0, g, SolverOptions(initial_guess=guess))
    q = solve_static_ground_state(0.75, 1.0, g)
    assert profile_distance(p, q) < 1e-9
    with pytest.raises(ValueError):
        solve_static_ground_state(0.75, 1.0, SECH_GRID, SolverOptions(initial_guess=guess))


def test_natural_length():
    assert natural_length(0.75, 2.0, 0.0) == 0.5
    ell = natural_length(0.75, 1.0, 1.0)
    xi = 1 / ell
    assert operator_symbol(0.75, 1.0, np.array([xi]))[0] == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("sigma", [0.6, 0.75, 0.9])
def test_gradient_flow_minimizer(sigma):
    p = minimizer(sigma)
    assert p.method == "gradient_flow" and p.k == 1.0
    assert p.residual <= 1e-8
    h = np.array(p.meta["history"])
    assert np.all(np.diff(h) <= 1e-15 * h[:-1])
    assert p.meta["agreement"] <= 1e-5
    assert p.meta["spectral_tail"] < 1e-10


def test_gradient_flow_sigma_one(oracle):
    p = gradient_flow_minimize(1.0, grid=Grid(20 * np.pi, 2048))
    assert p.meta["weinstein"] == pytest.approx(oracle["sqrt3"], abs=1e-5)
    # the sech orbit: Q is sqrt(2) omega sech(omega x)
    w = p.omega
    exact = w * sech_profile(w * p.grid.x)
    assert np.max(np.abs(p.values - exact)) / np.max(exact) < 1e-6


def test_weinstein_scale_is_scale_free():
    assert weinstein_scale(1.0) == 1.0
    assert 1 < weinstein_scale(0.6) < 100


@pytest.mark.parametrize("k", [0.5, 2.0, -1.5])
def test_rescale(k):
    q1 = minimizer(0.75)
    qk = rescale_to_k(q1, k)
    assert qk.k == k and qk.omega == pytest.approx(abs(k) * q1.omega)
    assert qk.grid.L == pytest.approx(q1.grid.L / abs(k))
    assert qk.residual <= 1e-7
    # (P_k Q_k)(x_i) = |k|^{3s} (P_1 Q_1)(k x_i); node x_i/|k| pulls back to node i or N-i
    lhs = apply_operator(qk)
    rhs = abs(k) ** 2.25 * apply_operator(q1)
    if k < 0:
        rhs = np.roll(rhs[::-1], 1)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_rescale_identity_and_errors():
    q1 = minimizer(0.75)
    assert rescale_to_k(q1, 1.0) is q1
    with pytest.raises(ValueError):
        rescale_to_k(q1, 0.0)
    with pytest.raises(ValueError):
        rescale_to_k(rescale_to_k(q1, 2.0), 3.0)


def test_normalize_gauge_moves_peak():
    g = Grid(10.0, 64)
    u = np.exp(-(g.x - 3) ** 2) * np.exp(1.1j)
    v = normalize_gauge(g, u)
    assert np.argmax(np.abs(v)) == g.node_nearest(0.0)
    assert abs(v[g.node_nearest(0.0)].imag) < 1e-15
