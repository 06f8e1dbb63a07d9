"""
Equilibrium points, critical Jacobi values and Hill-region classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq
from skimage import measure

from .model import SystemConfig, effective_potential, gradient, potential_derivatives

GRADIENT_TOL = 1e-12
MERGE_TOL = 1e-8


@dataclass(frozen=True)
class EquilibriumPoint:
    position: tuple[float, float]
    jacobi_value: float
    label: str  # "collinear" | "non-collinear"

    @property
    def x(self) -> float:
        return self.position[0]

    @property
    def y(self) -> float:
        return self.position[1]


def _make_point(cfg: SystemConfig, x: float, y: float) -> EquilibriumPoint:
    label = "collinear" if y == 0.0 else "non-collinear"
    return EquilibriumPoint((x, y), 2.0 * effective_potential(cfg, (x, y)), label)


def _omega_x_axis(cfg: SystemConfig, x: float) -> float:
    return gradient(cfg, (x, 0.0))[0]


def _polish_axis_root(cfg: SystemConfig, a: float, b: float) -> float:
    x = brentq(lambda t: _omega_x_axis(cfg, t), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(4):
        g = _omega_x_axis(cfg, x)
        if abs(g) < 1e-15:
            break
        h = 1.0 + potential_derivatives(cfg, (x, 0.0), 2)[(2, 0)]
        x_new = x - g / h
        if abs(_omega_x_axis(cfg, x_new)) >= abs(g):
            break
        x = x_new
    return x


def find_collinear(cfg: SystemConfig, extent: float = 3.0, n_grid: int = 6000) -> list[EquilibriumPoint]:
    """All equilibria on the x-axis, sorted by x.

    Scans ``Omega_x(x, 0)`` for sign changes on a uniform grid over
    ``[-extent, extent]``; brackets that straddle the on-axis primary
    (where ``Omega_x`` jumps through infinity) are discarded.
    """
    if not (0.0 < cfg.mu <= 1.0 / 3.0 + 1e-15):
        raise ValueError("find_collinear requires mu in (0, 1/3]")
    x1 = cfg.positions[0, 0]
    xs = np.linspace(-extent, extent, n_grid + 1)
    xs = xs[np.abs(xs - x1) > 1e-9]
    g = _grad_hess(cfg, xs, np.zeros_like(xs))[0]
    out = []
    for k in range(len(xs) - 1):
        a, b = xs[k], xs[k + 1]
        if a < x1 < b:
            continue
        if g[k] == 0.0:
            out.append(a)
        elif g[k] * g[k + 1] < 0:
            out.append(_polish_axis_root(cfg, a, b))
    return [_make_point(cfg, float(x), 0.0) for x in sorted(out)]


def find_l2(cfg: SystemConfig) -> EquilibriumPoint:
    """The collinear point on the far side of ``m2``/``m3`` (smallest x).

    This is the point whose spectrum undergoes the 1:1 collision at ``mu_b``.
    """
    pts = find_collinear(cfg)
    return min(pts, key=lambda p: p.x)


def _grad_hess(cfg: SystemConfig, x: np.ndarray, y: np.ndarray):
    gx, gy = x.copy(), y.copy()
    hxx, hxy, hyy = np.ones_like(x), np.zeros_like(x), np.ones_like(x)
    for (u, v), m in zip(cfg.positions, cfg.masses):
        dx, dy = x - u, y - v
        r2 = dx * dx + dy * dy
        r3 = r2 * np.sqrt(r2)
        r5 = r3 * r2
        gx -= m * dx / r3
        gy -= m * dy / r3
        hxx += m * (3 * dx * dx / r5 - 1 / r3)
        hyy += m * (3 * dy * dy / r5 - 1 / r3)
        hxy += m * 3 * dx * dy / r5
    return gx, gy, hxx, hxy, hyy


def _seeds(cfg: SystemConfig) -> np.ndarray:
    seeds = []
    ang = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    rad = np.linspace(0.1, 1.6, 12)
    centers = list(cfg.positions) + [np.zeros(2)]
    for c in centers:
        rr, aa = np.meshgrid(rad, ang)
        seeds.append(np.column_stack([c[0] + (rr * np.cos(aa)).ravel(), c[1] + (rr * np.sin(aa)).ravel()]))
    g = np.linspace(-2, 2, 50)
    gx, gy = np.meshgrid(g, g)
    seeds.append(np.column_stack([gx.ravel(), gy.ravel()]))
    return np.vstack(seeds)


def _newton(cfg: SystemConfig, pts: np.ndarray, iters: int = 80) -> np.ndarray:
    x, y = pts[:, 0].copy(), pts[:, 1].copy()
    for _ in range(iters):
        gx, gy, hxx, hxy, hyy = _grad_hess(cfg, x, y)
        det = hxx * hyy - hxy * hxy
        with np.errstate(divide="ignore", invalid="ignore"):
            sx = (hyy * gx - hxy * gy) / det
            sy = (hxx * gy - hxy * gx) / det
        step = np.hypot(sx, sy)
        # damp long steps so seeds cannot jump across a primary
        scale = np.where(step > 0.2, 0.2 / np.where(step > 0, step, 1), 1.0)
        x = x - scale * sx
        y = y - scale * sy
    return np.column_stack([x, y])


def find_all(cfg: SystemConfig) -> list[EquilibriumPoint]:
    """Every equilibrium of the synodic flow, collinear first then by (x, y).

    Multi-start damped Newton on the gradient over rings around each
    primary and the origin plus a box grid; distinct roots are merged within
    ``1e-8`` and the set is closed under ``y -> -y``.
    """
    if not (0.0 < cfg.mu <= 1.0 / 3.0 + 1e-15):
        raise ValueError("find_all requires mu in (0, 1/3]")
    sol = _newton(cfg, _seeds(cfg))
    ok = np.all(np.isfinite(sol), axis=1)
    sol = sol[ok]
    d = np.min(np.hypot(sol[:, :1] - cfg.positions[:, 0], sol[:, 1:] - cfg.positions[:, 1]), axis=1)
    sol = sol[d > 1e-6]
    gx, gy, *_ = _grad_hess(cfg, sol[:, 0], sol[:, 1])
    sol = sol[np.hypot(gx, gy) < 1e-9]

    found: list[tuple[float, float]] = []
    for x, y in sol:
        if abs(y) < 1e-8:
            continue
        if all(math.hypot(x - a, y - b) > MERGE_TOL for a, b in found):
            found.append((float(x), float(y)))
    off_axis = []
    for x, y in found:
        # one polishing Newton step keeps ||grad|| below GRADIENT_TOL
        p = _newton(cfg, np.array([[x, abs(y)]]), iters=3)[0]
        if all(math.hypot(p[0] - a, p[1] - b) > MERGE_TOL for a, b in off_axis):
            off_axis.append((float(p[0]), float(p[1])))
    pts = list(find_collinear(cfg))
    for x, y in sorted(off_axis):
        pts.append(_make_point(cfg, x, y))
        pts.append(_make_point(cfg, x, -y))
    return pts


@dataclass
class HillRegions:
    """Grid classification of the plane at a given Jacobi constant.

    ``allowed[i, j]`` refers to the cell centred at ``(xs[j], ys[i])``.
    """

    C: float
    xs: np.ndarray
    ys: np.ndarray
    allowed: np.ndarray
    contours: list[np.ndarray]

    @property
    def n_allowed_components(self) -> int:
        return int(ndimage.label(self.allowed)[1])

    @property
    def n_forbidden_cells(self) -> int:
        return int(np.count_nonzero(~self.allowed))

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        dx = self.xs[1] - self.xs[0]
        dy = self.ys[1] - self.ys[0]
        j = int(np.clip(round((x - self.xs[0]) / dx), 0, len(self.xs) - 1))
        i = int(np.clip(round((y - self.ys[0]) / dy), 0, len(self.ys) - 1))
        return i, j


def two_omega_grid(cfg: SystemConfig, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    val = X**2 + Y**2
    for (u, v), m in zip(cfg.positions, cfg.masses):
        r = np.hypot(X - u, Y - v)
        with np.errstate(divide="ignore"):
            val = val + 2 * m / r
    return val


def hill_regions(
    cfg: SystemConfig,
    C: float,
    bounds: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0),
    resolution: tuple[int, int] | int = 401,
) -> HillRegions:
    """Classify grid cells as allowed (``2 Omega >= C``) or forbidden.

    Cells are sampled at their centres; a cell that contains a primary is
    always allowed since ``Omega`` is unbounded there. The zero-velocity
    curve is returned as polylines in (x, y).

    Parameters
    ----------
    bounds : (xmin, xmax, ymin, ymax)
    resolution : int or (nx, ny)
        Cells per axis, at least 2.
    """
    nx, ny = (resolution, resolution) if isinstance(resolution, int) else resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be >= 2 per axis")
    xmin, xmax, ymin, ymax = bounds
    xs = np.linspace(xmin, xmax, nx)
    ys = np.linspace(ymin, ymax, ny)
    X, Y = np.meshgrid(xs, ys)
    f = two_omega_grid(cfg, X, Y) - C
    allowed = f >= 0
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]
    for u, v in cfg.positions:
        j = int(round((u - xmin) / dx))
        i = int(round((v - ymin) / dy))
        if 0 <= i < ny and 0 <= j < nx:
            allowed[i, j] = True
    finite = np.where(np.isfinite(f), f, np.nanmax(np.where(np.isfinite(f), f, np.nan)))
    contours = []
    for c in measure.find_contours(finite, 0.0):
        contours.append(np.column_stack([xmin + c[:, 1] * dx, ymin + c[:, 0] * dy]))
    return HillRegions(C, xs, ys, allowed, contours)
