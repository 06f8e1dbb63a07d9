"""
Normal form of the Hamiltonian at L2 through the 1:1 resonance.

The linear part is brought to its real normal form with a symplectic basis
built from the semisimple/nilpotent splitting ``A = Sigma + N``. The cubic
and quartic terms are then normalised with a Lie transform (Deprit's
recursion) written in symplectic polar coordinates, where the homological
operator is ``d/dtheta - r d/dR``.

Two unrelated small parameters appear in this construction and are kept
apart by name: ``eps_sign`` is the +/-1 entry of the normal-form matrix,
``eps_scale`` the Lie-series / rescaling parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .integrator import integrate_vector_field
from .linstab import CriticalMass, find_mu_b, hamiltonian_matrix
from .model import SystemConfig, hamiltonian_taylor_coefficients
from .nf_algebra import (
    CartesianPoly4,
    LaurentFourierPoly as Poly,
    cart_to_polar,
    poisson_bracket,
    solve_homological,
    split_mean,
)

J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

# (i, j, k) exponents of r, R, Theta for the nine monomials of the
# second-order normal form, with their display signs
H02_MONOMIALS = (
    ((4, 0, 0), +1),   # h1 r^4
    ((0, 4, 0), -1),   # h2 R^4
    ((2, 2, 0), +1),   # h3 r^2 R^2
    ((2, 0, 1), -1),   # h4 r^2 Theta
    ((0, 2, 1), +1),   # h5 R^2 Theta
    ((0, 0, 2), -1),   # h6 Theta^2
    ((-2, 2, 2), -1),  # h7 R^2 Theta^2 / r^2
    ((-2, 0, 3), +1),  # h8 Theta^3 / r^2
    ((-4, 0, 4), -1),  # h9 Theta^4 / r^4
)


class NormalFormError(RuntimeError):
    pass


class SecularObstructionError(NormalFormError):
    pass


def symplectic_form(x, y) -> float:
    """``<x, y> = x^T J4 y``."""
    return float(np.asarray(x) @ J4 @ np.asarray(y))


def semisimple_part(a: float, b: float, omega: float) -> np.ndarray:
    w2 = omega * omega
    S = np.array(
        [
            [0.0, 3 * w2 + 2 * b + a - 1, 3 * w2 + a - 3, 0.0],
            [-(3 * w2 + 2 * a + b - 1), 0.0, 0.0, 3 * w2 + b - 3],
            [a * a - b + a * (3 * w2 - 2), 0.0, 0.0, 3 * w2 + 2 * a + b - 1],
            [0.0, -a + b * (3 * w2 + b - 2), -(3 * w2 + 2 * b + a - 1), 0.0],
        ]
    )
    return S / (2 * w2)


def nilpotent_part(a: float, b: float, omega: float) -> np.ndarray:
    w2 = omega * omega
    N = np.array(
        [
            [0.0, -(w2 + 2 * b + a - 1), -(w2 + a - 3), 0.0],
            [w2 + 2 * a + b - 1, 0.0, 0.0, -(w2 + b - 3)],
            [-(a * a - b + a * (w2 - 2)), 0.0, 0.0, -(w2 + 2 * a + b - 1)],
            [0.0, a - b * (w2 + b - 2), w2 + 2 * b + a - 1, 0.0],
        ]
    )
    return N / (2 * w2)


def normal_matrix(omega: float, eps_sign: int) -> np.ndarray:
    """Real normal form of a Hamiltonian matrix with a non-semisimple pair ``+-i omega``."""
    return np.array(
        [
            [0.0, -omega, 0.0, 0.0],
            [omega, 0.0, 0.0, 0.0],
            [eps_sign, 0.0, 0.0, -omega],
            [0.0, eps_sign, omega, 0.0],
        ]
    )


P_ZERO_ENTRIES = ((0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 1), (3, 2))


@dataclass(frozen=True)
class LinearNF:
    A: np.ndarray
    Sigma: np.ndarray
    N: np.ndarray
    eps_sign: int
    P: np.ndarray
    B: np.ndarray
    omega: float

    @property
    def N31(self) -> float:
        return float(self.N[2, 0])

    def invariant_residuals(self) -> dict[str, float]:
        """Max-abs residual of each structural identity."""
        B_pattern = normal_matrix(self.omega, self.eps_sign)
        return {
            "A=Sigma+N": float(np.max(np.abs(self.A - self.Sigma - self.N))),
            "N^2=0": float(np.max(np.abs(self.N @ self.N))),
            "[Sigma,N]=0": float(np.max(np.abs(self.Sigma @ self.N - self.N @ self.Sigma))),
            "P^T J P=J": float(np.max(np.abs(self.P.T @ J4 @ self.P - J4))),
            "B pattern": float(np.max(np.abs(self.B - B_pattern))),
            "P sparsity": float(max(abs(self.P[i, j]) for i, j in P_ZERO_ENTRIES)),
        }


def burgoyne_decompose(A, omega: float, tol: float = 1e-8) -> LinearNF:
    """Symplectic normalising basis for the L2 matrix at the 1:1 resonance.

    Parameters
    ----------
    A : (4, 4) array
        Hamiltonian matrix ``[[0,1,1,0],[-1,0,0,1],[a,0,0,1],[0,b,-1,0]]``
        with a double pair ``+-i omega``.
    omega : float
        The double frequency.
    tol : float
        Bound on every structural residual (see :meth:`LinearNF.invariant_residuals`).

    Returns
    -------
    LinearNF
        ``P`` has columns ``z1..z4`` and ``B = P^-1 A P`` is in normal form.
    """
    A = np.asarray(A, dtype=float)
    a, b = A[2, 0], A[3, 1]
    S = semisimple_part(a, b, omega)
    N = nilpotent_part(a, b, omega)
    e1 = np.eye(4)[0]
    n11 = symplectic_form(e1, N @ e1)
    if n11 == 0.0:
        raise NormalFormError("<e1, N e1> = 0: the initial basis vector is degenerate")
    z0 = e1 / math.sqrt(abs(n11))
    eps_sign = int(np.sign(N[2, 0]))
    z1 = z0 + eps_sign / (2 * omega**2) * symplectic_form(z0, S @ z0) * (N @ S @ z0)
    z2 = S @ z1 / omega
    z3 = eps_sign * (N @ z1)
    z4 = eps_sign / omega * (S @ N @ z1)
    P = np.column_stack([z1, z2, z3, z4])
    B = np.linalg.solve(P, A @ P)
    nf = LinearNF(A, S, N, eps_sign, P, B, omega)
    bad = {k: v for k, v in nf.invariant_residuals().items() if v > tol}
    if bad:
        raise NormalFormError(f"linear normal form invariants violated: {bad}")
    return nf


def taylor_terms(cfg: SystemConfig, point) -> tuple[CartesianPoly4, CartesianPoly4]:
    """Cubic and quartic parts of the Hamiltonian centred at a collinear point.

    Variables are ``(x1, x2, y1, y2)``; the terms come from ``-U`` only.
    Odd powers of ``x2`` vanish by symmetry and are dropped.
    """
    polys = []
    for order in (3, 4):
        coeffs = hamiltonian_taylor_coefficients(cfg, point, order)
        terms = {}
        for (i, j), c in coeffs.items():
            if j % 2:
                if abs(c) > 1e-10:
                    raise NormalFormError(f"odd x2 term {i},{j} = {c:.3e}: point not collinear")
                continue
            terms[(i, j, 0, 0)] = c
        polys.append(CartesianPoly4(terms))
    return polys[0], polys[1]


def cubic_quartic(a3, c3, a4, c4, e4) -> tuple[CartesianPoly4, CartesianPoly4]:
    """``a3 x1^3 + c3 x1 x2^2`` and ``a4 x1^4 + c4 x1^2 x2^2 + e4 x2^4``."""
    H1 = CartesianPoly4({(3, 0, 0, 0): a3, (1, 2, 0, 0): c3})
    H2 = CartesianPoly4({(4, 0, 0, 0): a4, (2, 2, 0, 0): c4, (0, 4, 0, 0): e4})
    return H1, H2


def H00() -> Poly:
    """``Theta + r^2/2``: the quadratic normal form after scaling time so omega = 1."""
    return Poly.Theta() + Poly.r(2) / 2


def quadratic_part_polar(nf: LinearNF) -> Poly:
    """The quadratic Hamiltonian ``z^T S* z / 2`` (``S* = -J4 B``) in polar form."""
    S_star = -J4 @ nf.B
    S_star = (S_star + S_star.T) / 2
    terms = {}
    for i in range(4):
        for j in range(4):
            e = [0, 0, 0, 0]
            e[i] += 1
            e[j] += 1
            terms[tuple(e)] = terms.get(tuple(e), 0.0) + 0.5 * S_star[i, j]
    return cart_to_polar(CartesianPoly4(terms)).chop(1e-13)


@dataclass
class NormalFormResult:
    H00: Poly
    H01: Poly
    H02: Poly
    h: tuple[float, ...]
    W1: Poly
    W2: Poly
    H1_polar: Poly = field(repr=False)
    H2_polar: Poly = field(repr=False)

    def h_dict(self) -> dict[str, float]:
        return {f"h{i + 1}": v for i, v in enumerate(self.h)}


def extract_h(H02: Poly) -> tuple[float, ...]:
    """``h1..h9`` read off with the display signs (+,-,+,-,+,-,-,+,-)."""
    return tuple(sign * float(H02.coefficient(i, j, k)) for (i, j, k), sign in H02_MONOMIALS)


def deprit_normal_form(nf: LinearNF, H1: CartesianPoly4, H2: CartesianPoly4, chop_rel: float = 1e-12) -> NormalFormResult:
    """Second-order Lie-transform normal form.

    ``H1`` (cubic) and ``H2`` (quartic) are mapped to polar coordinates
    through ``x = P z``. Order one: the theta-mean of ``H1`` must vanish,
    ``W1`` solves ``L(W1) = H1``. Order two: ``H2 + {H1, W1}`` is split into
    its theta-mean, which is ``H02``, and the remainder solved for ``W2``.
    Float round-off below ``chop_rel`` times the largest coefficient is
    removed from ``H02``.
    """
    h1p = cart_to_polar(H1, nf.P)
    h2p = cart_to_polar(H2, nf.P)
    star1, prime1 = split_mean(h1p)
    if star1.max_abs_coef() > chop_rel * max(1.0, h1p.max_abs_coef()):
        raise SecularObstructionError(f"cubic term has theta-mean part: {star1}")
    H01 = Poly.zero()
    W1 = solve_homological(prime1)
    ht2 = h2p + poisson_bracket(h1p, W1)
    star2, prime2 = split_mean(ht2)
    H02 = star2.chop(chop_rel * max(1.0, star2.max_abs_coef()))
    W2 = solve_homological(prime2)
    if H1 or H2:
        present = {(i, j, k) for (i, j, k, m, ph) in H02.terms}
        expected = {mono for mono, _ in H02_MONOMIALS}
        if present - expected:
            raise NormalFormError(f"unexpected monomials in H02: {sorted(present - expected)}")
        if H1 and (expected - present):
            raise NormalFormError(f"missing monomials in H02: {sorted(expected - present)}")
    return NormalFormResult(H00(), H01, H02, extract_h(H02), W1, W2, h1p, h2p)


# four-digit Taylor coefficients at mu_b as usually quoted; h6 is sensitive to this rounding
ROUNDED_TAYLOR = {"a3": -0.962, "c3": 1.370, "a4": -1.007, "c4": 3.150, "e4": -0.4686}


def taylor_summary(H1: CartesianPoly4, H2: CartesianPoly4) -> dict[str, float]:
    t1, t2 = H1.terms, H2.terms
    return {
        "a3": float(t1.get((3, 0, 0, 0), 0.0)),
        "c3": float(t1.get((1, 2, 0, 0), 0.0)),
        "a4": float(t2.get((4, 0, 0, 0), 0.0)),
        "c4": float(t2.get((2, 2, 0, 0), 0.0)),
        "e4": float(t2.get((0, 4, 0, 0), 0.0)),
    }


@dataclass
class NormalFormReport:
    critical: CriticalMass
    linear: LinearNF
    taylor: dict[str, float]
    taylor_source: str
    result: NormalFormResult

    def as_dict(self) -> dict:
        nf = self.linear
        return {
            "mu_b": self.critical.mu_b,
            "omega": self.critical.omega,
            "a": self.critical.a,
            "b": self.critical.b,
            "x_l2": self.critical.x_l2,
            "N31": nf.N31,
            "eps_sign": nf.eps_sign,
            "P": nf.P,
            "B": nf.B,
            "invariant_residuals": nf.invariant_residuals(),
            "taylor_source": self.taylor_source,
            "taylor": self.taylor,
            "h": self.result.h_dict(),
            "H01_is_zero": not self.result.H01,
            "W1_terms": len(self.result.W1),
            "W2_terms": len(self.result.W2),
        }


def compute_normal_form(taylor: str = "computed", critical: CriticalMass | None = None) -> NormalFormReport:
    """Full pipeline at ``mu_b``: critical mass, linear normal form, Taylor terms, Lie transform.

    ``taylor="rounded"`` replaces the computed cubic/quartic coefficients by
    :data:`ROUNDED_TAYLOR`.
    """
    if taylor not in ("computed", "rounded"):
        raise ValueError("taylor must be 'computed' or 'rounded'")
    cm = critical or find_mu_b()
    nf = burgoyne_decompose(hamiltonian_matrix(cm.a, cm.b), cm.omega)
    if taylor == "computed":
        H1, H2 = taylor_terms(SystemConfig(cm.mu_b), (cm.x_l2, 0.0))
    else:
        H1, H2 = cubic_quartic(*(ROUNDED_TAYLOR[k] for k in ("a3", "c3", "a4", "c4", "e4")))
    res = deprit_normal_form(nf, H1, H2)
    return NormalFormReport(cm, nf, taylor_summary(H1, H2), taylor, res)


# Lie-transform oracle


def _hamilton_field(W: Poly):
    dWr, dWR, dWtheta, dWTheta = W.d_r(), W.d_R(), W.d_theta(), W.d_Theta()
    return dWr, dWR, dWtheta, dWTheta


def deprit_flow(W1: Poly, W2: Poly, y, eps_scale: float, rel_tol: float = 1e-12) -> np.ndarray:
    """Old coordinates ``X(eps, y)`` generated by ``W = W1 + eps W2``.

    ``y`` and the result are ``(r, theta, R, Theta)``; the flow is
    ``dr/ds = W_R, dR/ds = -W_r, dtheta/ds = W_Theta, dTheta/ds = -W_theta``.
    """
    f1 = _hamilton_field(W1)
    f2 = _hamilton_field(W2)

    def fun(s, u):
        r, th, R, Th = u
        d = [float(p1(r, th, R, Th)) + s * float(p2(r, th, R, Th)) for p1, p2 in zip(f1, f2)]
        dWr, dWR, dWth, dWTh = d
        return np.array([dWR, dWTh, -dWr, -dWth])

    return integrate_vector_field(fun, y, eps_scale, rel_tol=rel_tol, abs_tol=1e-15)


def lie_transform_defect(res: NormalFormResult, y, eps_scale: float) -> float:
    """``|H(eps, X(eps, y)) - G(eps, y)|``; O(eps^3) when the normal form is right.

    ``H = H00 + eps H1 + eps^2/2 H2`` and ``G = H00 + eps^2/2 H02``.
    """
    x = deprit_flow(res.W1, res.W2, y, eps_scale)
    e = eps_scale

    def H(u):
        return float(res.H00(*u) + e * res.H1_polar(*u) + e * e / 2 * res.H2_polar(*u))

    def G(u):
        return float(res.H00(*u) + e * res.H01(*u) + e * e / 2 * res.H02(*u))

    return abs(H(x) - G(np.asarray(y, dtype=float)))


# Versal deformation


@dataclass(frozen=True)
class VersalParams:
    nu1: float
    nu2: float


class VersalError(ValueError):
    pass


def versal_params(a: float, b: float, tol: float = 1e-10) -> VersalParams:
    """Unfolding parameters matching the characteristic polynomial of ``A(a, b)``."""
    rad = a + b + a * b + 1.0
    if rad < 0:
        raise VersalError(f"negative radicand a+b+ab+1 = {rad:.3e}")
    base = 0.5 - 0.25 * (a + b)
    nu2 = base - 0.5 * math.sqrt(rad)
    inner = base + 0.5 * math.sqrt(rad)
    if inner < 0:
        raise VersalError(f"(1+nu1)^2 = {inner:.3e} is negative")
    nu1 = math.sqrt(inner) - 1.0
    if abs((1 + nu1) ** 2 - (1 - 0.5 * (a + b) - nu2)) > tol:
        raise VersalError("versal consistency relation violated")
    return VersalParams(nu1, nu2)


def versal_generators() -> tuple[np.ndarray, np.ndarray]:
    e1 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
    e2 = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0]], dtype=float)
    return e1, e2


def versal_matrix(nu: VersalParams) -> np.ndarray:
    w = 1.0 + nu.nu1
    return np.array(
        [
            [0.0, -w, nu.nu2, 0.0],
            [w, 0.0, 0.0, nu.nu2],
            [-1.0, 0.0, 0.0, -w],
            [0.0, -1.0, w, 0.0],
        ]
    )


def versal_charpoly(nu: VersalParams) -> tuple[float, float, float, float, float]:
    s = (1.0 + nu.nu1) ** 2
    return (1.0, 0.0, 2.0 * (s + nu.nu2), 0.0, (s - nu.nu2) ** 2)


def versal_eigenvalues(nu: VersalParams) -> list[complex]:
    """Roots of the versal characteristic polynomial in closed form.

    ``lambda^2 = -((1+nu1)^2 + nu2) +- 2 |1+nu1| sqrt(nu2)``.
    """
    s = (1.0 + nu.nu1) ** 2
    root = 2.0 * abs(1.0 + nu.nu1) * np.sqrt(complex(nu.nu2))
    out = []
    for eta in (-(s + nu.nu2) + root, -(s + nu.nu2) - root):
        lam = np.sqrt(complex(eta))
        out.extend([complex(lam), complex(-lam)])
    return out


def versal_polar_hamiltonian(nu: VersalParams) -> Poly:
    """``(R^2 + Theta^2/r^2)/2 + nu2 r^2/2 + (1+nu1) Theta``."""
    return (
        Poly.R(2) / 2
        + Poly.monomial(i=-2, k=2) / 2
        + Poly.r(2).scale(nu.nu2 / 2)
        + Poly.Theta().scale(1.0 + nu.nu1)
    )


def rescale_orders(nu: float, H02: Poly) -> dict[int, Poly]:
    """Orders in ``eps_scale`` of the truncated Hamiltonian after rescaling.

    ``H = (R^2 + Theta^2/r^2)/2 + nu r^2/2 + Theta + H02`` under
    ``r -> eps r, R -> eps^2 R, Theta -> eps^3 Theta, nu -> eps^2 nu`` and
    multiplier ``eps^-3``. A term ``r^i R^j Theta^k`` picks up
    ``eps^(i + 2j + 3k - 3)`` (plus 2 for the ``nu`` term).
    """
    pieces = [
        (Poly.R(2) / 2, 0),
        (Poly.monomial(i=-2, k=2) / 2, 0),
        (Poly.r(2).scale(nu / 2), 2),
        (Poly.Theta(), 0),
        (H02, 0),
    ]
    orders: dict[int, Poly] = {}
    for poly, extra in pieces:
        for (i, j, k, m, ph), c in poly.terms.items():
            if m:
                raise ValueError("rescaling expects a theta-free Hamiltonian")
            p = i + 2 * j + 3 * k + extra - 3
            orders[p] = orders.get(p, Poly.zero()) + Poly.monomial(i, j, k, coef=c)
    return dict(sorted(orders.items()))


@dataclass(frozen=True)
class TruncatedSystem:
    """One-degree-of-freedom model ``K(r, R) = (R^2 + Theta^2/r^2)/2 + nu r^2/2 + h1 r^4``."""

    nu: float
    h1: float
    Theta: float = 0.0

    def __post_init__(self):
        if self.h1 <= 0:
            raise ValueError("h1 must be positive")

    def potential(self, r):
        r = np.asarray(r, dtype=float)
        if self.Theta == 0.0:
            cent = np.zeros_like(r)
        else:
            with np.errstate(divide="ignore"):
                cent = np.where(r > 0, self.Theta**2 / (2 * r * r), np.inf)
        return cent + self.nu * r * r / 2 + self.h1 * r**4

    def energy(self, r, R):
        return np.asarray(R, dtype=float) ** 2 / 2 + self.potential(r)

    def radial_force(self, r):
        """``dK/dr`` at ``R = 0``: ``-Theta^2/r^3 + nu r + 4 h1 r^3``."""
        r = np.asarray(r, dtype=float)
        return -self.Theta**2 / r**3 + self.nu * r + 4 * self.h1 * r**3

    def equilibria(self) -> list[float]:
        """Radii ``r >= 0`` of the equilibria on ``R = 0``, ascending."""
        if self.Theta == 0.0:
            out = [0.0]
            if self.nu < 0:
                out.append(math.sqrt(-self.nu / (4 * self.h1)))
            return out
        roots = np.roots([4 * self.h1, self.nu, 0.0, -self.Theta**2])
        s = sorted(float(z.real) for z in roots if abs(z.imag) < 1e-12 * max(1.0, abs(z)) and z.real > 0)
        return [math.sqrt(v) for v in s]

    def classify(self) -> str:
        """Fate of the invariant manifolds of the origin (``Theta = 0`` slice)."""
        return "connected" if self.nu < 0 else "shrunk"

    def level_set(self, value: float, n: int = 200, r_max: float | None = None) -> np.ndarray:
        """Points ``(r, R)`` with ``K(r, R) = value``, both branches ``R >= 0`` and ``R <= 0``."""
        if r_max is None:
            r_max = (abs(value) / self.h1) ** 0.25 + math.sqrt(abs(self.nu) / self.h1) + 1.0
        rs = np.linspace(0.0, r_max, n + 1)[1:] if self.Theta else np.linspace(0.0, r_max, n + 1)
        gap = 2 * (value - self.potential(rs))
        ok = gap >= 0
        R = np.sqrt(np.where(ok, gap, 0.0))
        upper = np.column_stack([rs[ok], R[ok]])
        lower = np.column_stack([rs[ok][::-1], -R[ok][::-1]])
        return np.vstack([upper, lower])

    def homoclinic_loop(self, n: int = 200) -> np.ndarray:
        """The ``K = 0`` loop through the origin (``Theta = 0``, ``nu < 0``); empty otherwise."""
        if self.Theta != 0.0 or self.nu >= 0:
            return np.empty((0, 2))
        r_max = math.sqrt(-self.nu / (2 * self.h1))
        return self.level_set(0.0, n, r_max)
