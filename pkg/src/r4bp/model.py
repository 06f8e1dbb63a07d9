"""
Dimensionless dynamics of the equilateral restricted four-body problem.

Three primaries sit at the vertices of a unit equilateral triangle that
rotates uniformly; ``m1`` lies on the positive x-axis and carries mass
``1 - 2*mu``, while ``m2`` and ``m3`` (mass ``mu`` each) are placed
symmetrically about the axis. Everything here works in the synodic frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

SQRT3 = math.sqrt(3.0)
COLLISION_FLOOR = 1e-12


class CollisionError(ValueError):
    """Raised when a point is closer to a primary than the collision floor."""

    def __init__(self, primary: int, distance: float):
        self.primary = primary
        self.distance = distance
        super().__init__(
            f"point within {distance:.3e} of primary m{primary + 1} (collision)"
        )


class Primary(NamedTuple):
    position: tuple[float, float]
    mass: float


class State(NamedTuple):
    """Planar synodic phase state."""

    x: float
    y: float
    vx: float
    vy: float

    @classmethod
    def from_array(cls, arr) -> "State":
        a = np.asarray(arr, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class SystemConfig:
    """Mass parameter plus the derived primary configuration.

    Parameters
    ----------
    mu : float
        Mass of each of the two equal primaries, in ``[0, 1/3]``.
    collision_floor : float
        Distances to a primary below this value raise :class:`CollisionError`.
    """

    mu: float
    collision_floor: float = field(default=COLLISION_FLOOR)

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0 / 3.0 + 1e-15):
            raise ValueError(f"mu must lie in [0, 1/3], got {self.mu!r}")
        if self.collision_floor <= 0:
            raise ValueError("collision_floor must be positive")

    @cached_property
    def primaries(self) -> tuple[Primary, Primary, Primary]:
        mu = self.mu
        xl = -SQRT3 * (1.0 - 2.0 * mu) / 2.0
        return (
            Primary((SQRT3 * mu, 0.0), 1.0 - 2.0 * mu),
            Primary((xl, -0.5), mu),
            Primary((xl, 0.5), mu),
        )

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.primaries])

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([p.mass for p in self.primaries])


def _distances(cfg: SystemConfig, x: float, y: float) -> np.ndarray:
    d = np.hypot(x - cfg.positions[:, 0], y - cfg.positions[:, 1])
    i = int(np.argmin(d))
    if d[i] < cfg.collision_floor:
        raise CollisionError(i, float(d[i]))
    return d


def effective_potential(cfg: SystemConfig, p) -> float:
    """Effective potential ``(x^2 + y^2)/2 + sum(mu_i / r_i)`` at ``p = (x, y)``."""
    x, y = float(p[0]), float(p[1])
    r = _distances(cfg, x, y)
    return 0.5 * (x * x + y * y) + float(np.sum(cfg.masses / r))


def gradient(cfg: SystemConfig, p) -> tuple[float, float]:
    """Closed-form gradient ``(Omega_x, Omega_y)``."""
    x, y = float(p[0]), float(p[1])
    r = _distances(cfg, x, y)
    w = cfg.masses / r**3
    gx = x - float(np.sum(w * (x - cfg.positions[:, 0])))
    gy = y - float(np.sum(w * (y - cfg.positions[:, 1])))
    return gx, gy


def vector_field(cfg: SystemConfig, s) -> State:
    """Time derivative of a synodic state: ``(vx, vy, 2 vy + Omega_x, -2 vx + Omega_y)``."""
    s = State(*s)
    gx, gy = gradient(cfg, (s.x, s.y))
    return State(s.vx, s.vy, 2.0 * s.vy + gx, -2.0 * s.vx + gy)


def make_rhs(cfg: SystemConfig):
    """Return a fast ``f(t, y)`` for the integrator.

    Works on plain floats; collision checks are left to the integrator's
    proximity guard.
    """
    (u1, v1), (u2, v2), (u3, v3) = (p.position for p in cfg.primaries)
    m1, m2, m3 = (p.mass for p in cfg.primaries)

    def rhs(t, s):
        x, y, vx, vy = s[0], s[1], s[2], s[3]
        dx1, dy1 = x - u1, y - v1
        dx2, dy2 = x - u2, y - v2
        dx3, dy3 = x - u3, y - v3
        q1 = dx1 * dx1 + dy1 * dy1
        q2 = dx2 * dx2 + dy2 * dy2
        q3 = dx3 * dx3 + dy3 * dy3
        w1 = m1 / (q1 * math.sqrt(q1))
        w2 = m2 / (q2 * math.sqrt(q2))
        w3 = m3 / (q3 * math.sqrt(q3))
        ax = x - w1 * dx1 - w2 * dx2 - w3 * dx3 + 2.0 * vy
        ay = y - w1 * dy1 - w2 * dy2 - w3 * dy3 - 2.0 * vx
        return np.array([vx, vy, ax, ay])

    return rhs


def jacobi_constant(cfg: SystemConfig, s) -> float:
    """Jacobi integral ``C = 2 Omega - (vx^2 + vy^2)``."""
    s = State(*s)
    return 2.0 * effective_potential(cfg, (s.x, s.y)) - (s.vx**2 + s.vy**2)


def hamiltonian_from_jacobi(c: float) -> float:
    return -0.5 * c


def jacobi_from_hamiltonian(h: float) -> float:
    return -2.0 * h


def reflect_trajectory(s) -> State:
    """Reversing symmetry ``(x, y, vx, vy) -> (x, -y, -vx, vy)`` (paired with ``t -> -t``)."""
    s = State(*s)
    return State(s.x, -s.y, -s.vx, s.vy)


# Partial derivatives of 1/r, r = |(dx, dy)|, as sums of
# coef * dx**p * dy**q * r**(-s). Built once by exact term differentiation.


def _diff_terms(terms: dict, axis: int) -> dict:
    out: dict = {}
    for (p, q, s), c in terms.items():
        e = (p, q)[axis]
        if e:
            key = (p - 1, q, s) if axis == 0 else (p, q - 1, s)
            out[key] = out.get(key, 0) + c * e
        key = (p + 1, q, s + 2) if axis == 0 else (p, q + 1, s + 2)
        out[key] = out.get(key, 0) - c * s
    return {k: v for k, v in out.items() if v != 0}


def _build_inverse_r_table(max_order: int = 4) -> dict:
    table = {(0, 0): {(0, 0, 1): 1}}
    for n in range(1, max_order + 1):
        for i in range(n + 1):
            j = n - i
            if i > 0:
                table[(i, j)] = _diff_terms(table[(i - 1, j)], 0)
            else:
                table[(i, j)] = _diff_terms(table[(i, j - 1)], 1)
    return {k: tuple(sorted(v.items())) for k, v in table.items()}


_INV_R = _build_inverse_r_table(4)


def inverse_r_derivative(i: int, j: int, dx, dy):
    """Exact ``d^(i+j)/dx^i dy^j`` of ``1/sqrt(dx^2 + dy^2)``; vectorised over arrays."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    r = np.hypot(dx, dy)
    acc = np.zeros(np.broadcast(dx, dy).shape)
    for (p, q, s), c in _INV_R[(i, j)]:
        acc = acc + c * dx**p * dy**q / r**s
    return acc


def potential_derivatives(cfg: SystemConfig, p, max_order: int = 4) -> dict[tuple[int, int], float]:
    """Partials of the gravitational potential ``U = sum(mu_i / r_i)``.

    Parameters
    ----------
    cfg : SystemConfig
    p : pair of float
        Evaluation point, away from the primaries.
    max_order : int
        Highest total derivative order, 1 to 4.

    Returns
    -------
    dict
        ``{(i, j): d^(i+j) U / dx^i dy^j}`` for every ``1 <= i + j <= max_order``,
        plus ``(0, 0)`` holding ``U`` itself.
    """
    if max_order not in (1, 2, 3, 4):
        raise ValueError("max_order must be 1, 2, 3 or 4")
    x, y = float(p[0]), float(p[1])
    _distances(cfg, x, y)
    dx = x - cfg.positions[:, 0]
    dy = y - cfg.positions[:, 1]
    out = {}
    for n in range(max_order + 1):
        for i in range(n, -1, -1):
            j = n - i
            out[(i, j)] = float(np.sum(cfg.masses * inverse_r_derivative(i, j, dx, dy)))
    return out


def hamiltonian_taylor_coefficients(cfg: SystemConfig, p, order: int) -> dict[tuple[int, int], float]:
    """Coefficients of the degree-``order`` monomials ``x1^i x2^j`` in the expansion of ``-U`` at ``p``.

    These are ``-U_{ij} / (i! j!)``; at a collinear point the odd-``j`` ones vanish.
    """
    if order not in (2, 3, 4):
        raise ValueError("order must be 2, 3 or 4")
    d = potential_derivatives(cfg, p, order)
    return {
        (i, order - i): -d[(i, order - i)] / (math.factorial(i) * math.factorial(order - i))
        for i in range(order, -1, -1)
    }
