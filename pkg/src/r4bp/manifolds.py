"""
Globalisation of the invariant manifolds of L2 and symmetric homoclinic orbits.

For ``mu > mu_b`` the spectrum at L2 is ``+-alpha +- i omega``. Orbits on
the unstable manifold are launched from a small circle in the unstable
plane, followed to their successive crossings of ``y = 0``, and the
crossings are collected per cut index in the ``(x, xdot)`` plane. A
crossing with ``xdot = 0`` is a fixed point of the reversing symmetry, so
the orbit through it is a symmetric homoclinic orbit to L2.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .equilibria import find_l2
from .integrator import (
    EscapeError,
    Exclusion,
    IntegrationError,
    IntegrationSettings,
    MaxTimeError,
    ProximityError,
    SectionEvent,
    crossings,
)
from .linstab import QUADRUPLE, analyze
from .model import State, SystemConfig, potential_derivatives

log = logging.getLogger(__name__)

REFLECTION = np.diag([1.0, -1.0, -1.0, 1.0])
DEFAULT_EPS_IC = 1e-5
EXCLUSION_FACTOR = 5.0
XDOT_TOL = 1e-9


class NoUnstableDirectionError(ValueError):
    pass


class FragileBracketError(RuntimeError):
    def __init__(self, message: str, theta_lo: float, theta_hi: float):
        super().__init__(message)
        self.theta_lo = theta_lo
        self.theta_hi = theta_hi


def state_jacobian(cfg: SystemConfig, point) -> np.ndarray:
    """Jacobian of the synodic vector field at a rest point, variables ``(x, y, vx, vy)``."""
    d = potential_derivatives(cfg, point, 2)
    oxx, oxy, oyy = 1.0 + d[(2, 0)], d[(1, 1)], 1.0 + d[(0, 2)]
    return np.array(
        [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [oxx, oxy, 0.0, 2.0],
            [oxy, oyy, -2.0, 0.0],
        ]
    )


@dataclass(frozen=True)
class EigenFrame:
    """Real basis of the unstable (or stable) plane of L2.

    ``eigenvector`` is the complex eigenvector, scaled so that its x
    component is real and positive and its norm is one. ``v_bar`` is its
    real part normalised; ``w_bar`` is the imaginary part made orthogonal
    to ``v_bar`` and normalised.
    """

    x_l2: float
    eigenvalue: complex
    eigenvector: np.ndarray
    v_bar: np.ndarray
    w_bar: np.ndarray
    stable: bool = False

    @property
    def alpha(self) -> float:
        return abs(self.eigenvalue.real)

    @property
    def omega(self) -> float:
        return abs(self.eigenvalue.imag)

    @property
    def l2_state(self) -> np.ndarray:
        return np.array([self.x_l2, 0.0, 0.0, 0.0])


def _frame_from_eigenpair(x_l2: float, lam: complex, u: np.ndarray, stable: bool) -> EigenFrame:
    u = u / u[0]
    u = u / np.linalg.norm(u)
    v = u.real / np.linalg.norm(u.real)
    w = u.imag - (u.imag @ v) * v
    w = w / np.linalg.norm(w)
    return EigenFrame(x_l2, complex(lam), u, v, w, stable)


def eigen_frame(cfg: SystemConfig, l2=None) -> EigenFrame:
    """Unstable frame at L2 from the eigenvalue ``alpha + i omega`` (``alpha, omega > 0``).

    Also checks the component relation ``y = (lambda^2 - Oxx) / (2 lambda) x``
    of the eigenvector, which holds because ``Oxy = 0`` on the axis.
    """
    l2 = l2 or find_l2(cfg)
    lin = analyze(cfg, l2)
    if lin.regime != QUADRUPLE:
        raise NoUnstableDirectionError(f"mu={cfg.mu} gives regime {lin.regime}; need mu > mu_b")
    J = state_jacobian(cfg, l2.position)
    vals, vecs = np.linalg.eig(J)
    k = max(range(4), key=lambda i: (vals[i].real > 0, vals[i].imag > 0, vals[i].real))
    lam = vals[k]
    frame = _frame_from_eigenpair(l2.x, lam, vecs[:, k], stable=False)
    u = frame.eigenvector
    ratio = (lam * lam - J[2, 0]) / (2 * lam)
    if abs(u[1] - ratio * u[0]) > 1e-8 or abs(u[2] - lam * u[0]) > 1e-8:
        raise ArithmeticError("eigenvector violates the linear-solution coefficient relation")
    return frame


def stable_frame(frame: EigenFrame) -> EigenFrame:
    """Stable frame obtained from the unstable one by ``(x, y, vx, vy) -> (x, -y, -vx, vy)``."""
    return EigenFrame(
        frame.x_l2,
        -frame.eigenvalue,
        REFLECTION @ frame.eigenvector,
        REFLECTION @ frame.v_bar,
        REFLECTION @ frame.w_bar,
        stable=not frame.stable,
    )


def initial_conditions(frame: EigenFrame, eps_ic: float, theta: float) -> State:
    """``L2 + eps_ic (cos(theta) v_bar + sin(theta) w_bar)``."""
    if eps_ic <= 0:
        raise ValueError("eps_ic must be positive")
    s = frame.l2_state + eps_ic * (math.cos(theta) * frame.v_bar + math.sin(theta) * frame.w_bar)
    return State.from_array(s)


@dataclass(frozen=True)
class CutPoint:
    theta: float
    x: float
    xdot: float
    direction: int
    status: str
    time: float
    state: State


@dataclass
class ManifoldCut:
    """All crossings with a given cut index, ordered by the branch parameter."""

    cut_index: int
    points: list[CutPoint]
    eps_ic: float
    mu: float
    exclusion_radius: float
    kind: str = "unstable"
    missing: list[tuple[float, str]] = field(default_factory=list)

    def thetas(self) -> np.ndarray:
        return np.array([p.theta for p in self.points])

    def xy(self) -> np.ndarray:
        return np.array([[p.x, p.xdot] for p in self.points]).reshape(-1, 2)


@dataclass(frozen=True)
class BranchResult:
    theta: float
    events: list[SectionEvent]
    status: str
    message: str = ""


def _status_of(exc: IntegrationError) -> str:
    if isinstance(exc, ProximityError):
        return "proximity"
    if isinstance(exc, EscapeError):
        return "escape"
    if isinstance(exc, MaxTimeError):
        return "max_time"
    return "failed"


def follow_branch(
    cfg: SystemConfig,
    frame: EigenFrame,
    eps_ic: float,
    theta: float,
    n_cuts: int,
    settings: IntegrationSettings,
    exclusion: Exclusion,
) -> BranchResult:
    """Integrate one branch to its ``n_cuts``-th countable crossing (backward in time for a stable frame)."""
    s0 = initial_conditions(frame, eps_ic, theta)
    direction = -1 if frame.stable else 1
    try:
        ev = crossings(cfg, s0, settings, n_cuts, exclusion, time_direction=direction)
        return BranchResult(theta, ev, "ok")
    except IntegrationError as exc:
        return BranchResult(theta, exc.events, _status_of(exc), str(exc))


def _branch_job(args):
    return follow_branch(*args)


def theta_grid(n: int) -> np.ndarray:
    return np.linspace(0.0, 2 * np.pi, n, endpoint=False)


def globalize(
    cfg: SystemConfig,
    frame: EigenFrame,
    eps_ic: float = DEFAULT_EPS_IC,
    thetas=512,
    n_cuts: int = 5,
    settings: IntegrationSettings | None = None,
    exclusion_factor: float = EXCLUSION_FACTOR,
    workers: int = 1,
) -> list[ManifoldCut]:
    """Cuts 1..n_cuts of the manifold branch family.

    Parameters
    ----------
    thetas : int or sequence of float
        Branch parameters, or a count for a uniform grid on ``[0, 2 pi)``.
    exclusion_factor : float
        Crossings closer than ``exclusion_factor * eps_ic`` to L2 are not counted.
    workers : int
        Process count for branch integration; results are merged in theta order.

    Branches stopped by the proximity guard, escape or the time limit keep
    the cuts they reached and are listed in ``ManifoldCut.missing`` for the
    others.
    """
    if n_cuts < 1:
        raise ValueError("n_cuts must be >= 1")
    settings = settings or IntegrationSettings()
    ths = theta_grid(thetas) if isinstance(thetas, (int, np.integer)) else np.asarray(thetas, dtype=float)
    if ths.size == 0:
        raise ValueError("theta grid is empty")
    radius = exclusion_factor * eps_ic
    excl = Exclusion((frame.x_l2, 0.0), radius)
    jobs = [(cfg, frame, eps_ic, float(t), n_cuts, settings, excl) for t in ths]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_branch_job, jobs, chunksize=8))
    else:
        results = [_branch_job(j) for j in jobs]
    return assemble_cuts(results, cfg.mu, eps_ic, radius, n_cuts, "stable" if frame.stable else "unstable")


def assemble_cuts(results: list[BranchResult], mu: float, eps_ic: float, radius: float, n_cuts: int,
                  kind: str = "unstable") -> list[ManifoldCut]:
    cuts = [ManifoldCut(k + 1, [], eps_ic, mu, radius, kind) for k in range(n_cuts)]
    for br in sorted(results, key=lambda b: b.theta):
        for k in range(n_cuts):
            if k < len(br.events):
                ev = br.events[k]
                st = ev.state
                cuts[k].points.append(CutPoint(br.theta, st.x, st.vx, ev.direction, br.status, ev.time, st))
            else:
                cuts[k].missing.append((br.theta, br.status))
    return cuts


def stable_from_unstable(cuts: list[ManifoldCut]) -> list[ManifoldCut]:
    """Map unstable-manifold cuts onto the stable manifold via the reversing symmetry.

    ``(x, xdot) -> (x, -xdot)``; the crossing direction (sign of ``vy``) is
    preserved by the reflection, and crossing times change sign.
    """
    out = []
    for cut in cuts:
        kind = "stable" if cut.kind == "unstable" else "unstable"
        pts = [
            CutPoint(p.theta, p.x, -p.xdot, p.direction, p.status, -p.time,
                     State(p.state.x, -p.state.y, -p.state.vx, p.state.vy))
            for p in cut.points
        ]
        out.append(replace(cut, points=pts, kind=kind, missing=list(cut.missing)))
    return out


@dataclass(frozen=True)
class HomoclinicCandidate:
    theta_star: float
    cut_index: int
    x_cross: float
    state: State
    time: float


def sign_change_brackets(cut: ManifoldCut, periodic: bool = True) -> list[tuple[CutPoint, CutPoint]]:
    """Adjacent pairs (in theta) of cut points whose ``xdot`` changes sign.

    Both points must cross with the same direction: along a continuous arc
    of transversal crossings ``vy`` cannot change sign, so a mismatch means
    the pair straddles a jump in the cut index.
    """
    pts = cut.points
    pairs = list(zip(pts[:-1], pts[1:]))
    if periodic and len(pts) > 2:
        pairs.append((pts[-1], pts[0]))
    out = []
    for a, b in pairs:
        if a.direction != b.direction:
            continue
        if a.xdot == 0.0 or a.xdot * b.xdot < 0:
            out.append((a, b))
    return out


def _xdot_at_cut(cfg, frame, eps_ic, theta, cut_index, settings, exclusion):
    br = follow_branch(cfg, frame, eps_ic, theta, cut_index, settings, exclusion)
    if len(br.events) < cut_index:
        return None
    return br.events[cut_index - 1]


def _illinois(trial, a, fa, xa, b, fb, xb, xdot_tol, max_iter, label):
    """Illinois regula falsi on ``trial(theta) -> SectionEvent``; returns the best ``(theta, event)``."""
    best = None
    side = 0
    for _ in range(max_iter):
        t = b - fb * (b - a) / (fb - fa) if fb != fa else 0.5 * (a + b)
        if not (min(a, b) < t < max(a, b)):
            t = 0.5 * (a + b)
        ev = trial(t)
        f = ev.state.vx
        if best is None or abs(f) < abs(best[1].state.vx):
            best = (t, ev)
        if abs(f) < xdot_tol:
            break
        if (f > 0) == (fa > 0):
            a, fa, xa = t, f, ev.state.x
            if side == -1:
                fb /= 2
            side = -1
        else:
            b, fb, xb = t, f, ev.state.x
            if side == 1:
                fa /= 2
            side = 1
        width = abs(b - a)
        if width < 1e-9 and abs(xb - xa) > 1e-4:
            raise FragileBracketError(f"{label} jumps by {abs(xb - xa):.3g} in x inside the bracket", a, b)
        if width < 4e-16 * max(1.0, abs(a)):
            break
    return best


def refine_bracket(
    cfg: SystemConfig,
    frame: EigenFrame,
    cut: ManifoldCut,
    lo: CutPoint,
    hi: CutPoint,
    settings: IntegrationSettings | None = None,
    xdot_tol: float = XDOT_TOL,
    max_iter: int = 200,
    tighten: bool = True,
) -> HomoclinicCandidate:
    """Locate ``xdot = 0`` at this cut between two branch parameters.

    Each trial re-integrates the branch to the cut index. Uses the Illinois
    variant of regula falsi, which falls back to halving on stalls. When
    ``xdot`` stalls above ``xdot_tol`` (integration noise amplified along
    the branch), the search is repeated with tolerances tightened to
    ``1e-13 / 1e-15``, first on a small bracket around the stall point.

    Raises
    ------
    FragileBracketError
        The branch stops reaching the cut inside the bracket, the crossing
        direction flips, the bracket collapses onto a jump of the cut, or
        ``xdot`` cannot be brought below ``xdot_tol``.
    """
    settings = settings or IntegrationSettings()
    excl = Exclusion((frame.x_l2, 0.0), cut.exclusion_radius)
    label = f"cut {cut.cut_index}"
    t_lo, t_hi = lo.theta, hi.theta
    if t_hi < t_lo:
        t_hi += 2 * np.pi

    def make_trial(st):
        def trial(t):
            ev = _xdot_at_cut(cfg, frame, cut.eps_ic, t, cut.cut_index, st, excl)
            if ev is None:
                raise FragileBracketError(f"branch theta={t:.15g} does not reach {label}", lo.theta, hi.theta)
            if ev.direction != lo.direction:
                raise FragileBracketError(f"crossing direction flips inside the bracket ({label})",
                                          lo.theta, hi.theta)
            return ev
        return trial

    t, ev = _illinois(make_trial(settings), t_lo, lo.xdot, lo.x, t_hi, hi.xdot, hi.x, xdot_tol, max_iter, label)
    if abs(ev.state.vx) >= xdot_tol and tighten:
        fine = replace(settings, rel_tol=min(settings.rel_tol, 1e-13), abs_tol=min(settings.abs_tol, 1e-15))
        trial = make_trial(fine)
        t0, stalled = t, abs(ev.state.vx)
        result = None
        for delta in (1e-11, 1e-9, 1e-7):
            a, b = max(t_lo, t0 - delta), min(t_hi, t0 + delta)
            ea, eb = trial(a), trial(b)
            if ea.state.vx * eb.state.vx < 0:
                result = _illinois(trial, a, ea.state.vx, ea.state.x, b, eb.state.vx, eb.state.x,
                                   xdot_tol, max_iter, label)
                break
        if result is None:
            result = _illinois(trial, t_lo, lo.xdot, lo.x, t_hi, hi.xdot, hi.x, xdot_tol, max_iter, label)
        t, ev = result
        log.debug("tightened refinement: |xdot| %.2e -> %.2e", stalled, abs(ev.state.vx))
    if abs(ev.state.vx) >= xdot_tol:
        raise FragileBracketError(f"xdot stalled at {abs(ev.state.vx):.3e} ({label})", lo.theta, hi.theta)
    return HomoclinicCandidate(float(np.mod(t, 2 * np.pi)), cut.cut_index, ev.state.x, ev.state, ev.time)


def find_orthogonal_crossings(
    cfg: SystemConfig,
    frame: EigenFrame,
    cut: ManifoldCut,
    settings: IntegrationSettings | None = None,
    fragile: list | None = None,
) -> list[HomoclinicCandidate]:
    """Refine every ``xdot`` sign change of a cut to an orthogonal crossing.

    Brackets that fail to refine are logged and appended to ``fragile``
    (if given) as :class:`FragileBracketError` instances.
    """
    out = []
    for lo, hi in sign_change_brackets(cut):
        try:
            out.append(refine_bracket(cfg, frame, cut, lo, hi, settings))
        except FragileBracketError as exc:
            log.info("fragile bracket theta in [%.6f, %.6f]: %s", lo.theta, hi.theta, exc)
            if fragile is not None:
                fragile.append(exc)
    return sorted(out, key=lambda c: c.theta_star)


def homoclinic_search(
    mu: float,
    n_cuts: int = 5,
    n_branches: int = 512,
    eps_ic: float = DEFAULT_EPS_IC,
    settings: IntegrationSettings | None = None,
    cut_indices=None,
    workers: int = 1,
    exclusion_factor: float = EXCLUSION_FACTOR,
):
    """Globalise the unstable manifold and refine the orthogonal crossings of the requested cuts.

    Returns ``(cuts, {cut_index: candidates}, {cut_index: fragile brackets})``.
    """
    cfg = SystemConfig(mu)
    frame = eigen_frame(cfg)
    cuts = globalize(cfg, frame, eps_ic, n_branches, n_cuts, settings, exclusion_factor, workers)
    cut_indices = [n_cuts] if cut_indices is None else list(cut_indices)
    found, fragile = {}, {}
    for k in cut_indices:
        frag: list = []
        found[k] = find_orthogonal_crossings(cfg, frame, cuts[k - 1], settings, frag)
        fragile[k] = frag
    return cuts, found, fragile
