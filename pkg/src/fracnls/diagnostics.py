"""Verification reports built on the solvers: Pohozaev, concentration constants, minimality."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .functionals import DEFAULT_THETA, _Weinstein, h_theta
from .grid import Grid
from .solvers import (
    SolitonProfile,
    SolverOptions,
    gradient_flow_minimize,
    sech_profile,
    solve_static_ground_state,
    solve_traveling_profile,
)
from .symbols import p1, symmetrized_g

# Box wide enough for the algebraic tails of the static profiles at omega = 1.
STATIC_GRID = (640 * np.pi, 2**17)
EVENNESS_TOL = 1e-6
THETA_SAMPLES = tuple(np.linspace(0.9, 0.999, 100))


class DiagnosticsError(ValueError):
    pass


class ConstantViolation(AssertionError):
    pass


def static_grid() -> Grid:
    return Grid(*STATIC_GRID)


def reflect(u: np.ndarray) -> np.ndarray:
    """Samples of u(-x); node i maps to node (N - i) mod N."""
    return np.roll(u[::-1], 1)


def evenness_defect(u: np.ndarray) -> float:
    return float(np.linalg.norm(u - reflect(u)) / np.linalg.norm(u))


def pohozaev_report(p: SolitonProfile) -> tuple[float, float]:
    """Relative defects of the two Pohozaev identities for a static state at omega = 1."""
    if not p.is_static:
        raise DiagnosticsError("Pohozaev identities apply to static ground states only")
    if abs(p.omega - 1.0) > 1e-12:
        raise DiagnosticsError(f"Pohozaev identities are checked at omega = 1, got {p.omega}")
    s, g, u = p.sigma, p.grid, p.values
    A = float(np.sum(np.abs(u) ** 2) * g.dx)
    hs = float(np.sum(np.abs(g.xi) ** (2 * s) * np.abs(g.forward(u)) ** 2) * g.dxi)
    l4 = float(np.sum(np.abs(u) ** 4) * g.dx)
    d1 = abs(hs / (A / (4 * s - 1)) - 1.0)
    d2 = abs(l4 / (4 * s * A / (4 * s - 1)) - 1.0)
    return float(d1), float(d2)


def _spectral_density(p: SolitonProfile) -> np.ndarray:
    return np.abs(p.grid.forward(p.values)) ** 2


def concentration_constants(static_profile: SolitonProfile,
                            theta_samples: Sequence[float] = THETA_SAMPLES, check: bool = True):
    """c = ||P_1^{1/2} Q||^2 / || |D|^s Q||^2 and the sampled curve h(theta)."""
    p = static_profile
    if not p.is_static:
        raise DiagnosticsError("concentration constants need a static ground state")
    s = p.sigma
    if not (0.5 < s < 1.0):
        raise DiagnosticsError(f"concentration constants need sigma in (1/2, 1), got {s}")
    xi = p.grid.xi
    dens = _spectral_density(p)
    c = float(np.sum(p1(s, xi) * dens) / np.sum(np.abs(xi) ** (2 * s) * dens))
    if not (0.0 < c < 1.0):
        raise ConstantViolation(f"c = {c} lies outside (0, 1)")
    th = np.asarray(theta_samples, dtype=float)
    hv = h_theta(c, s, th)
    curve = [(float(a), float(b)) for a, b in zip(th, hv)]
    if check and not np.min(hv) < 1.0:
        raise ConstantViolation(f"h(theta) >= 1 on all samples (min {np.min(hv)})")
    return c, curve


@dataclass(frozen=True)
class UpperBoundCheck:
    """Bound 2^{2s-1} - 1 = g(1) on the ratio g/|xi|^{2s}.

    ``full_ratio`` is c itself; ``low_ratio`` restricts both integrals to
    |xi| <= 1, where the pointwise bound holds.
    """
    status: str
    bound: float
    full_ratio: float
    low_ratio: float
    high_frequency_fraction: float
    evenness_defect: float


def c_upper_bound_check(p: SolitonProfile) -> UpperBoundCheck:
    s = p.sigma
    xi = p.grid.xi
    dens = _spectral_density(p)
    bound = 2.0 ** (2 * s - 1) - 1.0
    ev = evenness_defect(p.values)
    hs = np.abs(xi) ** (2 * s)
    gv = symmetrized_g(s, xi)
    full = float(np.sum(gv * dens) / np.sum(hs * dens))
    low = np.abs(xi) <= 1.0
    low_ratio = float(np.sum(gv[low] * dens[low]) / np.sum(hs[low] * dens[low]))
    hf = float(np.sum(dens[~low]) / np.sum(dens))
    if ev >= EVENNESS_TOL:
        status = "skipped"
    elif low_ratio <= bound + 1e-10:
        status = "low-frequency bound holds"
    else:
        status = "violated"
    return UpperBoundCheck(status, bound, full, low_ratio, hf, ev)


def random_smooth_fields(grid: Grid, count: int, seed: int, min_width: Optional[float] = None,
                         max_width: Optional[float] = None):
    """Gaussian-bump mixtures with random centers, widths and phases, band-limited to half-Nyquist."""
    rng = np.random.default_rng(seed)
    lo = min_width if min_width is not None else 12 * grid.dx
    hi = max_width if max_width is not None else grid.L / 8
    keep = np.abs(grid.xi) <= 0.5 * grid.xi_max
    x = grid.x
    for _ in range(count):
        u = np.zeros(grid.n_points, dtype=complex)
        for _ in range(rng.integers(1, 5)):
            c = rng.uniform(-grid.L / 4, grid.L / 4)
            w = np.exp(rng.uniform(np.log(lo), np.log(hi)))
            amp = rng.uniform(0.5, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            u += amp * np.exp(-(((x - c) / w) ** 2))
        yield grid.inverse(grid.forward(u) * keep)


def gn_minimality(minimizer: SolitonProfile, trials: int = 100, seed: int = 0,
                  theta: Optional[float] = None) -> float:
    """min over random smooth fields of W(u) - W(minimizer)."""
    th = theta if theta is not None else minimizer.meta.get("theta", DEFAULT_THETA)
    ev = _Weinstein(minimizer.grid, minimizer.sigma, th)
    w_min = ev.value(minimizer.values)
    return min(ev.value(u) - w_min for u in random_smooth_fields(minimizer.grid, trials, seed))


def weinstein_quotient(grid: Grid, u: np.ndarray, sigma: float) -> float:
    """||u||^{(4s-1)/s} || |D|^s u ||^{1/s} / ||u||_4^4."""
    l2 = np.sqrt(np.sum(np.abs(u) ** 2) * grid.dx)
    hs = np.sqrt(np.sum(np.abs(grid.xi) ** (2 * sigma) * np.abs(grid.forward(u)) ** 2) * grid.dxi)
    l4 = np.sum(np.abs(u) ** 4) * grid.dx
    return float(l2 ** ((4 * sigma - 1) / sigma) * hs ** (1 / sigma) / l4)


def interpolation_defect(grid: Grid, u: np.ndarray, sigma: float) -> float:
    """max(0, || |D|^s u ||^2 - ||u||^{2-2s} ||u'||^{2s}); zero by Hoelder in frequency."""
    dens = np.abs(grid.forward(u)) ** 2
    l2sq = np.sum(dens) * grid.dxi
    hs = np.sum(np.abs(grid.xi) ** (2 * sigma) * dens) * grid.dxi
    h1 = np.sum(grid.xi**2 * dens) * grid.dxi
    return float(max(0.0, hs - l2sq ** (1 - sigma) * h1**sigma))


@dataclass(frozen=True)
class CrossSigmaReport:
    sigma: float
    interpolation_defect: float
    quotient_sech: float
    quotient_ground_state: float

    @property
    def gap(self) -> float:
        return self.quotient_sech - self.quotient_ground_state


def cross_sigma_comparison(sigma: float, grid: Optional[Grid] = None,
                           static: Optional[SolitonProfile] = None) -> CrossSigmaReport:
    """Compare the fractional quotient of sqrt(2) sech with that of the fractional ground state."""
    if not (0.5 < sigma < 1.0):
        raise DiagnosticsError(f"sigma must lie in (1/2, 1), got {sigma}")
    if static is None:
        static = solve_static_ground_state(sigma, 1.0, grid or static_grid())
    g = static.grid
    q1 = sech_profile(g.x)
    return CrossSigmaReport(
        sigma,
        interpolation_defect(g, q1, sigma),
        weinstein_quotient(g, q1, sigma),
        weinstein_quotient(g, static.values, sigma),
    )


def sech_linf_error(grid: Optional[Grid] = None, opts: Optional[SolverOptions] = None) -> float:
    """Worst relative sup-norm error of the sigma = 1 static and traveling solves vs sqrt(2) sech."""
    g = grid or Grid(20 * np.pi, 2048)
    exact = sech_profile(g.x)
    err = 0.0
    for solve in (solve_static_ground_state, solve_traveling_profile):
        q = solve(1.0, 1.0, g, opts).values
        err = max(err, float(np.max(np.abs(q - exact)) / np.max(exact)))
    return err


@dataclass
class DiagnosticsReport:
    sigma: float
    theta: float
    pohozaev_defects: tuple[float, float]
    c_value: float
    h_curve: list
    gn_margin: float
    sech_linf_error: Optional[float]
    interpolation_defect: float
    c_upper_bound: dict = field(default_factory=dict)
    cross_sigma_gap: float = float("nan")
    minimizer: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pohozaev_defects"] = list(self.pohozaev_defects)
        d["h_curve"] = [list(t) for t in self.h_curve]
        return d

    @property
    def ok(self) -> bool:
        return not self.violations


def run_diagnostics(sigma: float, theta: float = DEFAULT_THETA, static: Optional[Grid] = None,
                    minimizer: Optional[Grid] = None, opts: Optional[SolverOptions] = None,
                    trials: int = 100, seed: int = 0, pohozaev_tol: float = 1e-6,
                    gn_tol: float = 1e-9, with_sech: bool = True) -> DiagnosticsReport:
    """Full verification report at one sigma."""
    opts = opts or SolverOptions()
    q = solve_static_ground_state(sigma, 1.0, static or static_grid(), opts)
    poh = pohozaev_report(q)
    violations = []
    if max(poh) > pohozaev_tol:
        violations.append(f"Pohozaev defect {max(poh):.3e} exceeds {pohozaev_tol:g}")
    try:
        c, curve = concentration_constants(q)
    except ConstantViolation as exc:
        violations.append(str(exc))
        c, curve = float("nan"), []
    ub = c_upper_bound_check(q)
    if ub.status == "violated":
        violations.append(f"low-frequency ratio {ub.low_ratio:.6g} exceeds g(1) = {ub.bound:.6g}")
    cross = cross_sigma_comparison(sigma, static=q)
    if cross.interpolation_defect > 1e-10:
        violations.append(f"interpolation defect {cross.interpolation_defect:.3e}")
    if not cross.gap > 0:
        violations.append(f"sech quotient does not exceed the ground state's (gap {cross.gap:.3e})")

    mz = gradient_flow_minimize(sigma, theta, minimizer, opts, cross_check=True)
    margin = gn_minimality(mz, trials, seed, theta)
    if margin < -gn_tol:
        violations.append(f"random field beats the minimizer by {-margin:.3e}")
    if mz.meta["agreement"] > 1e-5:
        violations.append(f"solver routes disagree by {mz.meta['agreement']:.3e}")
    sech = sech_linf_error(opts=opts) if with_sech else None
    if sech is not None and sech > 1e-6:
        violations.append(f"sech oracle error {sech:.3e}")
    return DiagnosticsReport(
        sigma=sigma,
        theta=theta,
        pohozaev_defects=poh,
        c_value=c,
        h_curve=curve,
        gn_margin=float(margin),
        sech_linf_error=sech,
        interpolation_defect=cross.interpolation_defect,
        c_upper_bound=asdict(ub),
        cross_sigma_gap=cross.gap,
        minimizer={
            "omega": mz.omega,
            "weinstein": mz.meta["weinstein"],
            "residual": mz.residual,
            "iterations": mz.iterations,
            "solver_agreement": mz.meta["agreement"],
            "imag_fraction": mz.meta["imag_fraction"],
            "half_length": mz.grid.L,
            "n_points": mz.grid.N,
        },
        violations=violations,
    )
