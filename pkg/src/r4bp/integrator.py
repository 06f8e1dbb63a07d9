"""
Adaptive integration of the synodic equations with section-crossing events.

Stepping is done with scipy's DOP853 (8(5,3) embedded pair with a 7th order
interpolant). Crossings of ``y = 0`` are detected from sign changes between
accepted steps and refined on the dense output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853, OdeSolution
from scipy.optimize import brentq

from .model import COLLISION_FLOOR, State, SystemConfig, make_rhs

EVENT_Y_TOL = 1e-10


class IntegrationError(RuntimeError):
    """Base class; ``events`` holds whatever crossings were collected before failing."""

    def __init__(self, message: str, time: float, events=None):
        super().__init__(message)
        self.time = time
        self.events = list(events or [])


class ProximityError(IntegrationError):
    def __init__(self, time: float, primary: int, distance: float, events=None):
        self.primary = primary
        self.distance = distance
        super().__init__(
            f"trajectory came within {distance:.3e} of primary m{primary + 1} at t={time:.6g}",
            time,
            events,
        )


class EscapeError(IntegrationError):
    pass


class MaxTimeError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegrationSettings:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-12
    max_step: float = 1.0
    proximity_floor: float = 1e-3
    max_time: float = 1000.0
    escape_radius: float = 10.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.proximity_floor <= COLLISION_FLOOR:
            raise ValueError("proximity_floor must exceed the collision floor")
        if self.max_step <= 0 or self.max_time <= 0:
            raise ValueError("max_step and max_time must be positive")


@dataclass(frozen=True)
class SectionEvent:
    time: float
    state: State
    direction: int
    index: int


@dataclass(frozen=True)
class Exclusion:
    """Ball in the (x, y) plane inside which section crossings are not counted."""

    center: tuple[float, float]
    radius: float

    def contains(self, x: float, y: float) -> bool:
        return math.hypot(x - self.center[0], y - self.center[1]) < self.radius


class Trajectory:
    """Dense-output handle over ``[t0, t_final]`` (either time direction)."""

    def __init__(self, ts: list[float], ys: list[np.ndarray], interpolants: list):
        self.t = np.asarray(ts)
        self.y = np.asarray(ys)
        self._sol = OdeSolution(self.t, interpolants) if interpolants else None

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    def __call__(self, t):
        lo, hi = sorted((self.t0, self.t_final))
        tt = np.asarray(t, dtype=float)
        if np.any(tt < lo - 1e-12) or np.any(tt > hi + 1e-12):
            raise ValueError(f"t outside the integrated span [{lo}, {hi}]")
        if self._sol is None:
            return self.y[0].copy() if tt.ndim == 0 else np.repeat(self.y[:1].T, tt.size, axis=1)
        return self._sol(tt)

    def state(self, t: float) -> State:
        return State.from_array(self(t))


def _stepper(cfg: SystemConfig, s0, t_bound: float, settings: IntegrationSettings):
    y0 = np.asarray(s0, dtype=float)
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    return DOP853(
        make_rhs(cfg),
        0.0,
        y0,
        t_bound,
        max_step=settings.max_step,
        rtol=settings.rel_tol,
        atol=settings.abs_tol,
    )


def _check_proximity(cfg: SystemConfig, settings: IntegrationSettings, t: float, y: np.ndarray, events=None):
    d = np.hypot(y[0] - cfg.positions[:, 0], y[1] - cfg.positions[:, 1])
    i = int(np.argmin(d))
    if d[i] < settings.proximity_floor:
        raise ProximityError(t, i, float(d[i]), events)


def integrate(cfg: SystemConfig, s0, t_final: float, settings: IntegrationSettings | None = None) -> Trajectory:
    """Integrate from ``t = 0`` to ``t_final`` (negative for backward time).

    Raises
    ------
    ProximityError
        An accepted step lands closer than ``settings.proximity_floor`` to a primary.
    MaxTimeError
        ``|t_final|`` exceeds ``settings.max_time``.
    """
    settings = settings or IntegrationSettings()
    if not math.isfinite(t_final):
        raise ValueError("t_final must be finite")
    if abs(t_final) > settings.max_time:
        raise MaxTimeError(f"|t_final|={abs(t_final)} exceeds max_time={settings.max_time}", 0.0)
    y0 = np.asarray(s0, dtype=float)
    _check_proximity(cfg, settings, 0.0, y0)
    ts, ys, interps = [0.0], [y0.copy()], []
    if t_final == 0.0:
        return Trajectory(ts, ys, interps)
    solver = _stepper(cfg, y0, t_final, settings)
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"step failure: {msg}", solver.t)
        interps.append(solver.dense_output())
        ts.append(solver.t)
        ys.append(solver.y.copy())
        _check_proximity(cfg, settings, solver.t, solver.y)
    return Trajectory(ts, ys, interps)


def _refine_crossing(dense, t_a: float, t_b: float) -> float:
    t = brentq(lambda tt: dense(tt)[1], t_a, t_b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    # Newton polish on the interpolant; brentq already brackets tightly
    for _ in range(3):
        yv = dense(t)
        if abs(yv[1]) < 1e-15 or yv[3] == 0.0:
            break
        t_new = t - yv[1] / yv[3]
        if not (min(t_a, t_b) <= t_new <= max(t_a, t_b)):
            break
        t = t_new
    return t


def crossings(
    cfg: SystemConfig,
    s0,
    settings: IntegrationSettings | None = None,
    n: int = 1,
    exclusion: Exclusion | None = None,
    time_direction: int = 1,
) -> list[SectionEvent]:
    """First ``n`` countable crossings of the section ``y = 0``.

    A crossing is a strict sign change of ``y`` after the start; its
    ``direction`` is the sign of ``vy`` there. Crossings strictly inside
    ``exclusion`` are skipped and do not consume an index.

    Raises
    ------
    EscapeError, ProximityError, MaxTimeError
        With ``.events`` holding the crossings found so far.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    settings = settings or IntegrationSettings()
    y0 = np.asarray(s0, dtype=float)
    events: list[SectionEvent] = []
    _check_proximity(cfg, settings, 0.0, y0, events)
    t_bound = math.copysign(settings.max_time, time_direction)
    solver = _stepper(cfg, y0, t_bound, settings)
    last_sign = 0.0 if y0[1] == 0.0 else math.copysign(1.0, y0[1])
    last_nonzero_t = 0.0
    while solver.status == "running":
        t_old = solver.t
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"step failure: {msg}", solver.t, events)
        y = solver.y
        _check_proximity(cfg, settings, solver.t, y, events)
        if y[1] != 0.0:
            sign = math.copysign(1.0, y[1])
            if last_sign != 0.0 and sign != last_sign:
                dense = solver.dense_output()
                t_a = t_old if last_nonzero_t == t_old else last_nonzero_t
                if not (min(dense.t_min, dense.t_max) <= t_a <= max(dense.t_min, dense.t_max)):
                    t_a = t_old
                te = _refine_crossing(dense, t_a, solver.t)
                st = State.from_array(dense(te))
                if abs(st.y) >= EVENT_Y_TOL:
                    raise IntegrationError(f"event refinement failed (|y|={abs(st.y):.2e})", te, events)
                if exclusion is None or not exclusion.contains(st.x, st.y):
                    events.append(SectionEvent(te, st, 1 if st.vy > 0 else -1, len(events) + 1))
                    if len(events) == n:
                        return events
            last_sign = sign
            last_nonzero_t = solver.t
        if math.hypot(y[0], y[1]) > settings.escape_radius:
            raise EscapeError(
                f"trajectory left radius {settings.escape_radius} at t={solver.t:.6g}", solver.t, events
            )
    raise MaxTimeError(
        f"only {len(events)} of {n} crossings within max_time={settings.max_time}", solver.t, events
    )


def integrate_vector_field(fun, y0, t_final: float, rel_tol: float = 1e-12, abs_tol: float = 1e-14,
                           max_step: float = np.inf) -> np.ndarray:
    """Final state of ``y' = fun(t, y)`` from ``t = 0`` to ``t_final``, same stepper as :func:`integrate`."""
    y0 = np.asarray(y0, dtype=float)
    if t_final == 0.0:
        return y0.copy()
    solver = DOP853(fun, 0.0, y0, t_final, max_step=max_step, rtol=rel_tol, atol=abs_tol)
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"step failure: {msg}", solver.t)
    return solver.y.copy()
