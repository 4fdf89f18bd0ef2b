"""Weinstein functional for the boosted operator P_1 and its first variation.

With A = ||u||_2^2, B = ||P_1^{1/2} u||_2^2, C = ||u||_4^4 and
alpha = 1/sqrt(s(2s-1)):

    W1 = A^{(4s-1)/(2s)} B^{1/(2s)} / C
    W2 = alpha A^{3/2} B^{1/2} / C
    W3 = W1^{1-theta} W2^theta
    W  = W1 + W2 - W3
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, NormBundle, norms
from .symbols import SymbolParams, eval_symbol

DEFAULT_THETA = 0.95


class FunctionalError(ValueError):
    pass


def alpha(sigma: float) -> float:
    return 1.0 / np.sqrt(sigma * (2.0 * sigma - 1.0))


@dataclass(frozen=True)
class FunctionalBreakdown:
    w1: float
    w2: float
    w3: float
    w_total: float
    theta: float
    alpha: float
    norms: NormBundle


@dataclass(frozen=True)
class ELCoefficients:
    a: float
    b: float
    omega: float
    c_mass: float
    c_op: float
    c_quartic: float


def _check_theta(theta: float) -> None:
    if not (0.0 < theta < 1.0):
        raise FunctionalError(f"theta must lie in (0, 1), got {theta}")


def _terms(A: float, B: float, C: float, sigma: float, theta: float):
    if C <= 0.0 or A <= 0.0:
        raise FunctionalError("Weinstein functional undefined for the zero field")
    if B <= 0.0:
        raise FunctionalError("||P_1^{1/2} u|| vanishes; field has no nonzero frequencies")
    w1 = A ** ((4 * sigma - 1) / (2 * sigma)) * B ** (1 / (2 * sigma)) / C
    w2 = alpha(sigma) * A**1.5 * B**0.5 / C
    w3 = w1 ** (1 - theta) * w2**theta
    return w1, w2, w3


def eval_weinstein(f: Field, sigma: float, theta: float = DEFAULT_THETA) -> FunctionalBreakdown:
    _check_theta(theta)
    nb = norms(f, SymbolParams(sigma, 1.0))
    w1, w2, w3 = _terms(nb.l2**2, nb.pk_half**2, nb.l4**4, sigma, theta)
    return FunctionalBreakdown(w1, w2, w3, w1 + w2 - w3, theta, alpha(sigma), nb)


class _Weinstein:
    """Array-level evaluator reused by the descent loop."""

    def __init__(self, grid, sigma: float, theta: float):
        _check_theta(theta)
        self.grid = grid
        self.sigma = sigma
        self.theta = theta
        self.symbol = eval_symbol(SymbolParams(sigma, 1.0), grid.xi)

    def quadratic_parts(self, u: np.ndarray):
        g = self.grid
        uh = g.forward(u)
        A = float(np.sum(np.abs(u) ** 2) * g.dx)
        B = float(np.sum(self.symbol * np.abs(uh) ** 2) * g.dxi)
        C = float(np.sum(np.abs(u) ** 4) * g.dx)
        return uh, A, B, C

    def value(self, u: np.ndarray) -> float:
        _, A, B, C = self.quadratic_parts(u)
        w1, w2, w3 = _terms(A, B, C, self.sigma, self.theta)
        return w1 + w2 - w3

    def coefficients(self, A, B, C):
        s, th = self.sigma, self.theta
        w1, w2, w3 = _terms(A, B, C, s, th)
        q = (4 * s - 1) / (2 * s)
        c_mass = 2.0 / A * (q * w1 + 1.5 * w2 - ((1 - th) * q + 1.5 * th) * w3)
        c_op = 2.0 / B * (w1 / (2 * s) + 0.5 * w2 - ((1 - th) / (2 * s) + 0.5 * th) * w3)
        # d/de ||u + e v||_4^4 = 4 Re int |u|^2 u conj(v)
        c_quartic = 4.0 / C * (w1 + w2 - w3)
        return (w1, w2, w3), c_mass, c_op, c_quartic

    def value_and_gradient(self, u: np.ndarray):
        uh, A, B, C = self.quadratic_parts(u)
        (w1, w2, w3), cm, cp, c4 = self.coefficients(A, B, C)
        Pu = self.grid.inverse(self.symbol * uh)
        G = cm * u + cp * Pu - c4 * np.abs(u) ** 2 * u
        return w1 + w2 - w3, G, (cm, cp, c4)


def variational_gradient(f: Field, sigma: float, theta: float = DEFAULT_THETA) -> Field:
    """G with d/de W(f + e v)|_0 = Re <G, v>_{L^2} for every v."""
    _, G, _ = _Weinstein(f.grid, sigma, theta).value_and_gradient(f.physical())
    return Field(f.grid, G)


def el_coefficients(f: Field, sigma: float, theta: float = DEFAULT_THETA) -> ELCoefficients:
    """(a, b) with P_1 u + a u - b |u|^2 u = 0 at a critical point; omega = a^{1/(2s)}."""
    ev = _Weinstein(f.grid, sigma, theta)
    _, A, B, C = ev.quadratic_parts(f.physical())
    _, cm, cp, c4 = ev.coefficients(A, B, C)
    if cp <= 0:
        raise FunctionalError(f"operator coefficient {cp:.3e} is not positive; theta too small")
    a, b = cm / cp, c4 / cp
    if a <= 0 or b <= 0:
        raise FunctionalError(f"non-positive Euler-Lagrange coefficients a={a:.3e}, b={b:.3e}")
    return ELCoefficients(a, b, a ** (1 / (2 * sigma)), cm, cp, c4)


def ell_function(s, theta: float):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("ell_function needs s >= 0")
    return 1.0 + s - s**theta


def ell_minimizer(theta: float) -> tuple[float, float]:
    """Critical point theta^{1/(1-theta)} of ell and the minimum value there.

    ell(s*) = 1 + s* - s*^theta with s*^theta = theta^{theta/(1-theta)}.
    """
    s_star = theta ** (1.0 / (1.0 - theta))
    return s_star, 1.0 - theta ** (theta / (1.0 - theta)) * (1.0 - theta)


def h_theta(c: float, sigma: float, theta):
    if not (0.0 < c < 1.0):
        raise ValueError(f"c must lie in (0, 1), got {c}")
    theta = np.asarray(theta, dtype=float)
    a1 = c ** (1 / (2 * sigma))
    a2 = np.sqrt(c) * (4 * sigma - 1) ** ((1 - sigma) / (2 * sigma)) * alpha(sigma)
    return a1 + a2 - a1 ** (1 - theta) * a2**theta
