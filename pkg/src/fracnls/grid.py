"""Periodic spectral discretization on [-L, L).

Fields are sampled at x_i = -L + i*dx.  The discrete transform is scaled so
that it approximates the unitary continuum transform

    u_hat(xi) = (2 pi)^(-1/2) * int u(x) exp(-i xi x) dx,

which makes the discrete Plancherel identity

    sum |u_i|^2 dx == sum |u_hat_j|^2 dxi,   dxi = pi / L,

hold with no stray constants.  Spectral arrays are kept in numpy's native
FFT ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal, Union

import numpy as np

MIN_POINTS = 16

SymbolLike = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float, complex]


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    half_length: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise GridError(f"half_length must be positive, got {self.half_length}")
        n = self.n_points
        if int(n) != n or n < MIN_POINTS or (int(n) & (int(n) - 1)) != 0:
            raise GridError(f"n_points must be a power of two >= {MIN_POINTS}, got {n}")
        object.__setattr__(self, "half_length", float(self.half_length))
        object.__setattr__(self, "n_points", int(n))

    @property
    def L(self) -> float:
        return self.half_length

    @property
    def N(self) -> int:
        return self.n_points

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def dxi(self) -> float:
        return np.pi / self.half_length

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_length + np.arange(self.n_points) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers m in [-N/2, N/2), FFT order."""
        m = np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(np.int64)
        m.setflags(write=False)
        return m

    @cached_property
    def xi(self) -> np.ndarray:
        xi = self.modes * self.dxi
        xi.setflags(write=False)
        return xi

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(i xi_j L) = (-1)^m accounts for the grid starting at -L.
        ph = np.where(self.modes % 2 == 0, 1.0, -1.0)
        ph.setflags(write=False)
        return ph

    @property
    def nyquist_index(self) -> int:
        return self.n_points // 2

    @property
    def xi_max(self) -> float:
        return self.n_points // 2 * self.dxi

    def node_nearest(self, x0: float) -> int:
        return int(np.round((x0 + self.half_length) / self.dx)) % self.n_points

    def forward(self, u: np.ndarray) -> np.ndarray:
        """Physical samples -> unitary spectral coefficients (raw arrays)."""
        return np.fft.fft(u) * (self._phase * (self.dx / np.sqrt(2.0 * np.pi)))

    def inverse(self, uh: np.ndarray) -> np.ndarray:
        return np.fft.ifft(uh * (self._phase * (np.sqrt(2.0 * np.pi) / self.dx)))

    def integrate(self, f: np.ndarray) -> complex:
        """Rectangle rule, spectrally accurate for smooth periodic f."""
        return np.sum(f) * self.dx

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Real L^2 pairing Re int f conj(g) dx."""
        return float(np.real(np.vdot(g, f)) * self.dx)

    def scaled(self, factor: float) -> "Grid":
        return Grid(self.half_length * factor, self.n_points)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on the modes kept by the 2/3 rule."""
        m = np.abs(self.modes) <= self.n_points // 3
        m.setflags(write=False)
        return m

    def spectral_tail(self, u: np.ndarray) -> float:
        """Largest |u_hat| outside the 2/3 band relative to the spectral peak."""
        a = np.abs(self.forward(u))
        return float(np.max(a[~self.dealias_mask]) / np.max(a))


def make_grid(L: float, N: int) -> Grid:
    return Grid(L, N)


@dataclass(frozen=True)
class Field:
    grid: Grid
    values: np.ndarray = field(repr=False)
    representation: Literal["physical", "spectral"] = "physical"

    def __post_init__(self):
        if self.representation not in ("physical", "spectral"):
            raise ValueError(f"unknown representation {self.representation!r}")
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} samples, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, fn(grid.x))

    def physical(self) -> np.ndarray:
        """Physical samples, transforming if needed."""
        if self.representation == "physical":
            return self.values
        return self.grid.inverse(self.values)

    def spectral(self) -> np.ndarray:
        if self.representation == "spectral":
            return self.values
        return self.grid.forward(self.values)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.representation)

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.physical() + other.physical())

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.physical() - other.physical())

    def __mul__(self, c) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} contains NaN or Inf")


def transform(f: Field, direction: Literal["forward", "inverse"]) -> Field:
    _check_finite(f.values, "field")
    if direction == "forward":
        if f.representation != "physical":
            raise ValueError("forward transform expects a physical field")
        return Field(f.grid, f.grid.forward(f.values), "spectral")
    if direction == "inverse":
        if f.representation != "spectral":
            raise ValueError("inverse transform expects a spectral field")
        return Field(f.grid, f.grid.inverse(f.values), "physical")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def symbol_on_grid(grid: Grid, m: SymbolLike) -> np.ndarray:
    if callable(m):
        vals = np.asarray(m(grid.xi))
    else:
        vals = np.asarray(m)
    vals = np.broadcast_to(vals, (grid.n_points,))
    _check_finite(vals, "multiplier")
    return vals


def apply_multiplier(f: Field, m: SymbolLike, *, zero_nyquist: bool = False) -> Field:
    """Multiply the spectrum of ``f`` by ``m(xi)``.

    ``zero_nyquist`` drops the unpaired Nyquist mode, which is what keeps odd
    (derivative-like) symbols real-preserving on real input.
    """
    mult = symbol_on_grid(f.grid, m)
    if zero_nyquist:
        mult = mult.copy()
        mult[f.grid.nyquist_index] = 0.0
    uh = f.spectral() * mult
    if f.representation == "physical":
        return Field(f.grid, f.grid.inverse(uh), "physical")
    return Field(f.grid, uh, "spectral")


@dataclass(frozen=True)
class NormBundle:
    l2: float
    l4: float
    hsigma: float
    h1: float
    pk_half: float


def norms(f: Field, params) -> NormBundle:
    """All norms entering the Weinstein functionals.

    ``params`` is a :class:`fracnls.symbols.SymbolParams`.
    """
    from .symbols import eval_symbol

    g = f.grid
    u = f.physical()
    uh = f.spectral()
    a2 = np.abs(u) ** 2
    s2 = np.abs(uh) ** 2
    xi = g.xi
    l2sq = float(np.sum(a2) * g.dx)
    l4q = float(np.sum(a2 * a2) * g.dx)
    hs = float(np.sum(np.abs(xi) ** (2 * params.sigma) * s2) * g.dxi)
    h1 = float(np.sum(xi**2 * s2) * g.dxi)
    pk = float(np.sum(eval_symbol(params, xi) * s2) * g.dxi)
    return NormBundle(
        l2=np.sqrt(l2sq),
        l4=l4q**0.25,
        hsigma=np.sqrt(hs),
        h1=np.sqrt(h1),
        pk_half=np.sqrt(max(pk, 0.0)),
    )
