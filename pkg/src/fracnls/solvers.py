"""Soliton profiles: static ground states, traveling profiles, Weinstein minimizers.

Every profile is a solution of

    P Q + omega^{2s} Q - |Q|^2 Q = 0,

with P = (-Delta)^s for static states (k = 0) and P = P_k otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy.optimize import brentq

from .functionals import DEFAULT_THETA, _Weinstein, el_coefficients
from .grid import Field, Grid
from .symbols import SymbolParams, eval_symbol, fractional_symbol

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    pass


class CollapseError(SolverError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 5000
    residual_tol: float = 1e-11
    petviashvili_gamma: float = 1.5
    initial_guess: Union[str, Field] = "gaussian"
    damping: float = 1.0
    flow_step: float = 1.0
    cg_restart: int = 50

    def __post_init__(self):
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")
        if not (1.0 < self.petviashvili_gamma < 2.0):
            raise ValueError("petviashvili_gamma must lie in (1, 2)")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if self.flow_step <= 0:
            raise ValueError("flow_step must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not isinstance(self.initial_guess, Field) and self.initial_guess != "gaussian":
            raise ValueError("initial_guess must be 'gaussian' or a Field")


@dataclass(frozen=True)
class SolitonProfile:
    field: Field
    sigma: float
    omega: float
    k: float
    residual: float
    iterations: int
    method: str
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.physical()

    @property
    def is_static(self) -> bool:
        return self.k == 0.0


def operator_symbol(sigma: float, k: float, xi) -> np.ndarray:
    if k == 0.0:
        return fractional_symbol(sigma, xi)
    return eval_symbol(SymbolParams(sigma, k), xi)


def residual_array(grid: Grid, u: np.ndarray, sigma: float, omega: float, k: float) -> np.ndarray:
    lin = operator_symbol(sigma, k, grid.xi) + omega ** (2 * sigma)
    return grid.inverse(lin * grid.forward(u)) - np.abs(u) ** 2 * u


def relative_residual(grid: Grid, u: np.ndarray, sigma: float, omega: float, k: float) -> float:
    """||P Q + w^{2s} Q - |Q|^2 Q|| / (w^{2s} ||Q||); invariant under the k-rescaling."""
    nu = np.linalg.norm(u)
    if nu == 0.0:
        raise SolverError("relative residual undefined for the zero field")
    r = residual_array(grid, u, sigma, omega, k)
    return float(np.linalg.norm(r) / (omega ** (2 * sigma) * nu))


def residual_norm(p: SolitonProfile) -> float:
    return relative_residual(p.grid, p.values, p.sigma, p.omega, p.k)


def normalize_gauge(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Roll the modulus peak onto the node nearest x = 0 and make it real positive."""
    i = int(np.argmax(np.abs(u)))
    j = grid.node_nearest(0.0)
    u = np.roll(u, j - i)
    peak = u[j]
    u = u * (np.conj(peak) / abs(peak))
    u[j] = abs(peak)
    return u


def natural_length(sigma: float, omega: float, k: float) -> float:
    """1/xi* where the symbol reaches the mass term, P(xi*) = omega^{2s}."""
    target = omega ** (2 * sigma)
    if k == 0.0:
        return 1.0 / omega
    f = lambda t: operator_symbol(sigma, k, np.array([t]))[0] - target
    hi = max(abs(k), omega)
    while f(hi) < 0:
        hi *= 2.0
    lo = hi
    while f(lo) > 0 and lo > 1e-300:
        lo /= 2.0
    return 1.0 / brentq(f, lo, hi, xtol=1e-14 * hi, rtol=1e-12)


def sech_profile(x) -> np.ndarray:
    """sqrt(2) sech(x), the sigma = 1 ground state at omega = 1, without overflow."""
    e = np.exp(-np.abs(np.asarray(x, dtype=float)))
    return np.sqrt(2.0) * 2.0 * e / (1.0 + e * e)


def gaussian_guess(grid: Grid, width: float) -> np.ndarray:
    return np.exp(-((grid.x / width) ** 2)).astype(complex)


def _initial(grid: Grid, opts: SolverOptions, width: float) -> np.ndarray:
    if isinstance(opts.initial_guess, Field):
        if opts.initial_guess.grid != grid:
            raise ValueError("initial guess lives on a different grid")
        return np.array(opts.initial_guess.physical(), dtype=complex)
    return gaussian_guess(grid, width)


def _petviashvili(grid, sigma, omega, k, opts, method="petviashvili"):
    lin = operator_symbol(sigma, k, grid.xi) + omega ** (2 * sigma)
    if np.min(lin) <= 0:
        raise SolverError("linear operator is not positive on the grid")
    gamma = opts.petviashvili_gamma
    u = _initial(grid, opts, natural_length(sigma, omega, k))
    scale0 = np.linalg.norm(u)
    res = np.inf
    for it in range(1, opts.max_iterations + 1):
        uh = grid.forward(u)
        nl = np.abs(u) ** 2 * u
        nlh = grid.forward(nl)
        quad = float(np.sum(lin * np.abs(uh) ** 2) * grid.dxi)
        quart = float(np.sum(np.abs(u) ** 4) * grid.dx)
        if quart <= 0 or not np.isfinite(quart):
            raise CollapseError("iteration collapsed to the zero field")
        stab = quad / quart
        u = grid.inverse(stab**gamma * nlh / lin)
        nrm = np.linalg.norm(u)
        if not np.isfinite(nrm):
            raise ConvergenceError("Petviashvili iteration produced non-finite values")
        if nrm < 1e-12 * scale0:
            raise CollapseError("iteration collapsed to the zero field")
        res = relative_residual(grid, u, sigma, omega, k)
        if res <= opts.residual_tol:
            break
    else:
        raise ConvergenceError(
            f"Petviashvili did not reach {opts.residual_tol:g} in {opts.max_iterations} "
            f"iterations (residual {res:.3e})"
        )
    u = normalize_gauge(grid, u)
    res = relative_residual(grid, u, sigma, omega, k)
    meta = {
        "imag_fraction": float(np.linalg.norm(u.imag) / np.linalg.norm(u)),
        "stabilizer": stab,
        "spectral_tail": grid.spectral_tail(u),
    }
    return SolitonProfile(Field(grid, u), sigma, omega, k, res, it, method, meta)


def solve_static_ground_state(
    sigma: float, omega: float, grid: Grid, opts: Optional[SolverOptions] = None
) -> SolitonProfile:
    """Ground state of (-Delta)^s Q + omega^{2s} Q - Q^3 = 0 by Petviashvili iteration."""
    if not (0.25 < sigma <= 1.0):
        raise ValueError(f"static ground states need sigma in (1/4, 1], got {sigma}")
    if omega <= 0:
        raise ValueError("omega must be positive")
    return _petviashvili(grid, sigma, omega, 0.0, opts or SolverOptions())


def solve_traveling_profile(
    sigma: float, omega: float, grid: Grid, opts: Optional[SolverOptions] = None
) -> SolitonProfile:
    """Profile Q_1 of P_1 Q + omega^{2s} Q - |Q|^2 Q = 0, computed in complex arithmetic."""
    if not (0.5 < sigma <= 1.0):
        raise ValueError(f"sigma must lie in (0.5, 1], got {sigma}")
    if omega <= 0:
        raise ValueError("omega must be positive")
    return _petviashvili(grid, sigma, omega, 1.0, opts or SolverOptions())


def weinstein_scale(sigma: float, theta: float = DEFAULT_THETA, n_points: int = 1024,
                    box_factor: float = 40.0) -> float:
    """Gaussian width exp(-(x/w)^2) minimizing the Weinstein functional.

    Each candidate width is evaluated on its own self-similar grid, so the
    scan is free of resolution bias and spans many decades.
    """
    if sigma == 1.0:
        return 1.0
    widths = np.logspace(-3, 24, 271)
    vals = np.empty_like(widths)
    for i, w in enumerate(widths):
        g = Grid(box_factor * w, n_points)
        vals[i] = _Weinstein(g, sigma, theta).value(gaussian_guess(g, w))
    j = int(np.argmin(vals))
    if j in (0, len(widths) - 1):
        raise SolverError("Weinstein scale scan did not bracket a minimum")
    lo, hi = np.log(widths[j - 1]), np.log(widths[j + 1])
    from scipy.optimize import minimize_scalar

    def f(lw):
        w = np.exp(lw)
        g = Grid(box_factor * w, n_points)
        return _Weinstein(g, sigma, theta).value(gaussian_guess(g, w))

    r = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-3})
    return float(np.exp(r.x))


def minimizer_grid(sigma: float, theta: float = DEFAULT_THETA, n_points: int = 2048,
                   box_factor: float = 40.0) -> Grid:
    """A grid sized for the Weinstein minimizer at (sigma, theta)."""
    return Grid(box_factor * weinstein_scale(sigma, theta), n_points)


def _directional(grid, G, D) -> float:
    return float(np.real(np.vdot(D, G)) * grid.dx)


def gradient_flow_minimize(
    sigma: float,
    theta: float = DEFAULT_THETA,
    grid: Optional[Grid] = None,
    opts: Optional[SolverOptions] = None,
    cross_check: bool = False,
) -> SolitonProfile:
    """Minimize the Weinstein functional, then read off omega and Q_1 = b^{1/2} u.

    Descent directions are Sobolev-preconditioned gradients (metric
    c_op P_1 + c_mass) combined by Polak-Ribiere conjugation; step lengths come
    from a secant search on the directional derivative with a backtracking
    guard so the functional never increases beyond roundoff.
    """
    opts = opts or SolverOptions()
    if not (0.5 < sigma <= 1.0):
        raise ValueError(f"sigma must lie in (0.5, 1], got {sigma}")
    if grid is None:
        grid = minimizer_grid(sigma, theta)
    ev = _Weinstein(grid, sigma, theta)
    dx = grid.dx

    if isinstance(opts.initial_guess, Field):
        u = _initial(grid, opts, 1.0)
    else:
        ws = grid.dx * np.logspace(np.log10(12.0), np.log10(grid.n_points / 12.0), 41)
        vals = [ev.value(gaussian_guess(grid, w)) for w in ws]
        u = gaussian_guess(grid, ws[int(np.argmin(vals))])
    u = u / np.sqrt(np.sum(np.abs(u) ** 2) * dx)

    noise = 64 * np.finfo(float).eps
    history = []
    d_prev = z_prev = g_prev = None
    step = opts.flow_step
    res = np.inf
    for it in range(1, opts.max_iterations + 1):
        w, G, (cm, cp, c4) = ev.value_and_gradient(u)
        history.append(w)
        # ||P u + a u - b|u|^2 u|| / (a ||u||) in terms of G = c_op (...)
        res = float(np.linalg.norm(G) / (cm * np.linalg.norm(u)))
        if res <= opts.residual_tol:
            break
        z = opts.damping * grid.inverse(grid.forward(G) / (cp * ev.symbol + cm))
        d = z
        if d_prev is not None and it % opts.cg_restart:
            beta = np.real(np.vdot(z, G - g_prev)) / np.real(np.vdot(z_prev, g_prev))
            d = z + max(0.0, beta) * d_prev
        slope = _directional(grid, G, d)
        if slope <= 0:
            d, slope = z, _directional(grid, G, z)

        s = step
        for _ in range(8):
            _, Gs, _ = ev.value_and_gradient(u - s * d)
            ds = _directional(grid, Gs, d)
            if slope - ds <= 0:
                s *= 2.0
                continue
            s_new = s * slope / (slope - ds)
            converged = abs(s_new - s) <= 1e-3 * s
            s = s_new
            if converged:
                break
        for _ in range(60):
            trial = u - s * d
            if ev.value(trial) <= w + noise * abs(w):
                break
            s *= 0.5
        else:
            raise SolverError("line search failed to decrease the Weinstein functional")
        step = s
        g_prev, z_prev, d_prev = G, z, d
        u = trial / np.sqrt(np.sum(np.abs(trial) ** 2) * dx)
    else:
        raise ConvergenceError(
            f"gradient flow did not reach {opts.residual_tol:g} in {opts.max_iterations} "
            f"iterations (residual {res:.3e})"
        )

    f = Field(grid, u)
    el = el_coefficients(f, sigma, theta)
    q = normalize_gauge(grid, np.sqrt(el.b) * u)
    meta = {
        "theta": theta,
        "weinstein": history[-1],
        "history": history,
        "a": el.a,
        "b": el.b,
        "imag_fraction": float(np.linalg.norm(q.imag) / np.linalg.norm(q)),
        "spectral_tail": grid.spectral_tail(q),
    }
    prof = SolitonProfile(
        Field(grid, q), sigma, el.omega, 1.0,
        relative_residual(grid, q, sigma, el.omega, 1.0), it, "gradient_flow", meta,
    )
    if cross_check:
        meta["agreement"] = solver_agreement(prof, opts)
    return prof


def profile_distance(p: SolitonProfile, q: SolitonProfile) -> float:
    """Relative L^2 distance after gauge normalization of both."""
    if p.grid != q.grid:
        raise ValueError("profiles live on different grids")
    a = normalize_gauge(p.grid, p.values)
    b = normalize_gauge(q.grid, q.values)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def solver_agreement(gf: SolitonProfile, opts: Optional[SolverOptions] = None) -> float:
    """Distance between a gradient-flow profile and Petviashvili's at the same omega."""
    opts = replace(opts or SolverOptions(), initial_guess="gaussian")
    pv = solve_traveling_profile(gf.sigma, gf.omega, gf.grid, opts)
    return profile_distance(gf, pv)


def rescale_to_k(q1: SolitonProfile, k: float) -> SolitonProfile:
    """Q_k(x) = |k|^s Q_1(kx) on the grid shrunk by 1/|k|; omega_k = |k| omega."""
    if k == 0:
        raise ValueError("k must be nonzero")
    if q1.k != 1.0:
        raise ValueError("rescale_to_k expects a k = 1 profile")
    if k == 1.0:
        return q1
    s = q1.sigma
    g = q1.grid.scaled(1.0 / abs(k))
    v = q1.values
    if k < 0:
        # node x_i/|k| maps to k x_i/|k| = -x_i, i.e. index (N - i) mod N
        v = np.roll(v[::-1], 1)
    qk = abs(k) ** s * v
    omega_k = abs(k) * q1.omega
    res = relative_residual(g, qk, s, omega_k, k)
    meta = dict(q1.meta, rescaled_from=1.0)
    meta.pop("history", None)
    return SolitonProfile(Field(g, qk), s, omega_k, float(k), res, q1.iterations, q1.method, meta)


def apply_operator(p: SolitonProfile) -> np.ndarray:
    """P_k Q for the profile's own k (k = 0 meaning (-Delta)^s)."""
    g = p.grid
    return g.inverse(operator_symbol(p.sigma, p.k, g.xi) * g.forward(p.values))
