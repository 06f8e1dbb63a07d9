"""
Linear stability at a collinear equilibrium and the critical mass ``mu_b``.

Works with the Hamiltonian matrix of the quadratic part at the point, in
coordinates ``(x1, x2, y1, y2)`` centred there.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .equilibria import EquilibriumPoint, find_l2
from .model import SystemConfig, potential_derivatives

COLLINEAR_TOL = 1e-9

TWO_PAIRS = "two-imaginary-pairs"
DOUBLE = "double-imaginary"
QUADRUPLE = "complex-quadruple"


class NotCollinearError(ValueError):
    pass


class BracketError(ValueError):
    pass


def hamiltonian_matrix(a: float, b: float) -> np.ndarray:
    return np.array(
        [
            [0.0, 1.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0, 1.0],
            [a, 0.0, 0.0, 1.0],
            [0.0, b, -1.0, 0.0],
        ]
    )


def charpoly_coefficients(a: float, b: float) -> tuple[float, float, float, float, float]:
    """Coefficients of ``lambda^4 + (2-a-b) lambda^2 + (ab+a+b+1)``, highest first."""
    return (1.0, 0.0, 2.0 - a - b, 0.0, a * b + a + b + 1.0)


def discriminant(a: float, b: float) -> float:
    """``(4 - Oxx - Oyy)^2 - 4 Oxx Oyy`` with ``Oxx = 1 + a``, ``Oyy = 1 + b``."""
    oxx, oyy = 1.0 + a, 1.0 + b
    return (4.0 - oxx - oyy) ** 2 - 4.0 * oxx * oyy


@dataclass(frozen=True)
class LinearAnalysis:
    a: float
    b: float
    matrix_A: np.ndarray
    eigenvalues: tuple[complex, complex, complex, complex]
    regime: str
    discriminant: float
    omega: float | None = None
    alpha: float | None = None

    @property
    def omega_xx(self) -> float:
        return 1.0 + self.a

    @property
    def omega_yy(self) -> float:
        return 1.0 + self.b

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "D": self.discriminant,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "regime": self.regime,
            "omega": self.omega,
            "alpha": self.alpha,
        }


def _biquadratic_roots(a: float, b: float) -> tuple[complex, complex, complex, complex]:
    p = 2.0 - a - b
    q = a * b + a + b + 1.0
    disc = p * p - 4.0 * q
    sq = cmath.sqrt(disc)
    etas = ((-p + sq) / 2.0, (-p - sq) / 2.0)
    lams = []
    for eta in etas:
        lam = cmath.sqrt(eta)
        lams.extend([lam, -lam])
    # sort: descending real part, then imaginary part
    return tuple(sorted(lams, key=lambda z: (-round(z.real, 14), -z.imag)))


def classify(a: float, b: float, double_tol: float = 0.0) -> str:
    d = discriminant(a, b)
    if abs(d) <= double_tol:
        return DOUBLE
    return TWO_PAIRS if d > 0 else QUADRUPLE


def analyze_ab(a: float, b: float) -> LinearAnalysis:
    """Spectrum and regime of the Hamiltonian matrix built from ``a``, ``b``."""
    lams = _biquadratic_roots(a, b)
    d = discriminant(a, b)
    regime = classify(a, b)
    omega = alpha = None
    if regime == QUADRUPLE:
        top = max(lams, key=lambda z: (z.real, z.imag))
        alpha, omega = abs(top.real), abs(top.imag)
    elif d == 0.0:
        regime = DOUBLE
        omega = math.sqrt((2.0 - a - b) / 2.0)
    else:
        omega = max(abs(z.imag) for z in lams)
    return LinearAnalysis(a, b, hamiltonian_matrix(a, b), lams, regime, d, omega, alpha)


def analyze(cfg: SystemConfig, eq: EquilibriumPoint) -> LinearAnalysis:
    """Linearise at a collinear equilibrium.

    ``a`` and ``b`` are the second partials ``U_xx``, ``U_yy`` of the
    gravitational potential at the point.
    """
    d = potential_derivatives(cfg, eq.position, 2)
    if abs(eq.y) > COLLINEAR_TOL or abs(d[(1, 1)]) > COLLINEAR_TOL:
        raise NotCollinearError(f"point {eq.position} is not collinear (U_xy={d[(1, 1)]:.3e})")
    return analyze_ab(d[(2, 0)], d[(0, 2)])


def second_partials_at_l2(mu: float) -> tuple[float, float, float]:
    """``(a, b, x_L2)`` for the given mass parameter."""
    cfg = SystemConfig(mu)
    l2 = find_l2(cfg)
    d = potential_derivatives(cfg, l2.position, 2)
    return d[(2, 0)], d[(0, 2)], l2.x


def discriminant_at_l2(mu: float) -> float:
    a, b, _ = second_partials_at_l2(mu)
    return discriminant(a, b)


@dataclass(frozen=True)
class CriticalMass:
    mu_b: float
    omega: float
    a: float
    b: float
    x_l2: float
    discriminant: float


def find_mu_b(bracket: tuple[float, float] = (0.001, 0.01), tol: float = 1e-10) -> CriticalMass:
    """Bisect ``mu -> D(L2(mu))`` for the 1:1 eigenvalue collision at L2.

    Bisection runs until the bracket is narrower than ``tol``, then the
    endpoint with smaller ``|D|`` is returned. ``omega`` is the double
    frequency, ``omega^2 = (2 - a - b)/2``.
    """
    lo, hi = bracket
    d_lo, d_hi = discriminant_at_l2(lo), discriminant_at_l2(hi)
    if d_lo * d_hi > 0:
        raise BracketError(f"D has the same sign at both ends of {bracket}: {d_lo:.3e}, {d_hi:.3e}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        d_mid = discriminant_at_l2(mid)
        if d_mid == 0.0:
            lo = hi = mid
            d_lo = d_hi = 0.0
            break
        if (d_mid > 0) == (d_lo > 0):
            lo, d_lo = mid, d_mid
        else:
            hi, d_hi = mid, d_mid
    # secant step inside the final bracket; |D| drops well below the bisection floor
    mu = lo if abs(d_lo) <= abs(d_hi) else hi
    if d_hi != d_lo:
        cand = lo - d_lo * (hi - lo) / (d_hi - d_lo)
        if lo <= cand <= hi and abs(discriminant_at_l2(cand)) < abs(discriminant_at_l2(mu)):
            mu = cand
    a, b, x = second_partials_at_l2(mu)
    return CriticalMass(mu, math.sqrt((2.0 - a - b) / 2.0), a, b, x, discriminant(a, b))
