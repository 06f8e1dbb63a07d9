"""
Polynomial algebra in symplectic polar coordinates ``(r, theta, R, Theta)``.

A :class:`LaurentFourierPoly` is a finite sum of terms

    c * r**i * R**j * Theta**k * cos(m*theta)   (or sin(m*theta))

with ``i`` any integer (``i >= MIN_R_POWER``), ``j, k, m >= 0``. The
conjugate pairs are ``(r, R)`` and ``(theta, Theta)``.

Coefficients may be floats or :class:`fractions.Fraction`. Integer inputs
are promoted to ``Fraction`` so that polynomials built from rationals stay
exact; any float coefficient turns the affected terms into floats.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Number

import numpy as np

MIN_R_POWER = -8
COS, SIN = "c", "s"
_PHASE_ORDER = {COS: 0, SIN: 1}


class AlgebraError(ArithmeticError):
    pass


class MeanObstructionError(AlgebraError):
    """A theta-antiderivative was requested for a function with nonzero theta-mean."""

    def __init__(self, terms):
        self.terms = terms
        listed = ", ".join(_term_str(k, c) for k, c in terms[:6])
        more = "" if len(terms) <= 6 else f" (+{len(terms) - 6} more)"
        super().__init__(f"nonzero theta-mean terms: {listed}{more}")


class VerificationError(AlgebraError):
    pass


def _coef(c):
    if isinstance(c, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, (Fraction, float)):
        return c
    if isinstance(c, np.floating):
        return float(c)
    if isinstance(c, np.integer):
        return Fraction(int(c))
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _fmt_coef(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    return f"{c:.17g}"


def _term_str(key, c) -> str:
    i, j, k, m, ph = key
    trig = "1" if m == 0 else f"{'cos' if ph == COS else 'sin'}({m}*theta)"
    return f"{_fmt_coef(c)} r^{i} R^{j} Theta^{k} {trig}"


def _sort_key(key):
    i, j, k, m, ph = key
    return (i, j, k, m, _PHASE_ORDER[ph])


class LaurentFourierPoly:
    """Immutable canonical polynomial in ``(r, theta, R, Theta)``."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        acc: dict = {}
        for key, c in (terms or {}).items():
            i, j, k, m, ph = key
            if ph not in (COS, SIN):
                raise ValueError(f"phase must be 'c' or 's', got {ph!r}")
            if j < 0 or k < 0:
                raise ValueError("powers of R and Theta must be non-negative")
            if i < MIN_R_POWER:
                raise AlgebraError(f"r-power {i} below the supported minimum {MIN_R_POWER}")
            c = _coef(c)
            if m < 0:
                m = -m
                if ph == SIN:
                    c = -c
            if m == 0 and ph == SIN:
                continue
            key = (int(i), int(j), int(k), int(m), ph)
            acc[key] = acc.get(key, 0) + c
        self._terms = {k: v for k, v in acc.items() if v != 0}

    @classmethod
    def _raw(cls, terms: dict) -> "LaurentFourierPoly":
        obj = cls.__new__(cls)
        obj._terms = {k: v for k, v in terms.items() if v != 0}
        for key in obj._terms:
            if key[0] < MIN_R_POWER:
                raise AlgebraError(f"r-power {key[0]} below the supported minimum {MIN_R_POWER}")
        return obj

    # constructors

    @classmethod
    def zero(cls) -> "LaurentFourierPoly":
        return cls._raw({})

    @classmethod
    def const(cls, c) -> "LaurentFourierPoly":
        return cls({(0, 0, 0, 0, COS): c})

    @classmethod
    def monomial(cls, i=0, j=0, k=0, m=0, phase=COS, coef=1) -> "LaurentFourierPoly":
        return cls({(i, j, k, m, phase): coef})

    @classmethod
    def r(cls, power: int = 1):
        return cls.monomial(i=power)

    @classmethod
    def R(cls, power: int = 1):
        return cls.monomial(j=power)

    @classmethod
    def Theta(cls, power: int = 1):
        return cls.monomial(k=power)

    @classmethod
    def cos(cls, m: int = 1):
        return cls.monomial(m=m, phase=COS)

    @classmethod
    def sin(cls, m: int = 1):
        return cls.monomial(m=m, phase=SIN)

    # container protocol

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items(), key=lambda kv: _sort_key(kv[0]))

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __iter__(self):
        return iter(self.items())

    def coefficient(self, i=0, j=0, k=0, m=0, phase=COS):
        return self._terms.get((i, j, k, m, phase), 0)

    def __eq__(self, other):
        if isinstance(other, Number):
            other = LaurentFourierPoly.const(other)
        if not isinstance(other, LaurentFourierPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # ring operations

    def __add__(self, other):
        if isinstance(other, Number):
            other = LaurentFourierPoly.const(other)
        if not isinstance(other, LaurentFourierPoly):
            return NotImplemented
        acc = dict(self._terms)
        for k, v in other._terms.items():
            acc[k] = acc.get(k, 0) + v
        return LaurentFourierPoly._raw(acc)

    __radd__ = __add__

    def __neg__(self):
        return LaurentFourierPoly._raw({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, Number):
            other = LaurentFourierPoly.const(other)
        if not isinstance(other, LaurentFourierPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "LaurentFourierPoly":
        c = _coef(c)
        if c == 0:
            return LaurentFourierPoly.zero()
        return LaurentFourierPoly._raw({k: v * c for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, LaurentFourierPoly):
            return NotImplemented
        acc: dict = {}
        for (i1, j1, k1, m1, p1), c1 in self._terms.items():
            for (i2, j2, k2, m2, p2), c2 in other._terms.items():
                base = (i1 + i2, j1 + j2, k1 + k2)
                c = c1 * c2
                for m, ph, s in _product_to_sum(m1, p1, m2, p2):
                    key = base + (m, ph)
                    acc[key] = acc.get(key, 0) + (c if s == 1 else (c / 2 if s == 2 else -c / 2))
        return LaurentFourierPoly._raw(acc)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            c = _coef(other)
            return self.scale(1 / c if not isinstance(c, Fraction) else Fraction(1) / c)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = LaurentFourierPoly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    # calculus

    def d_r(self):
        return LaurentFourierPoly._raw(
            {(i - 1, j, k, m, ph): c * i for (i, j, k, m, ph), c in self._terms.items() if i != 0}
        )

    def d_R(self):
        return LaurentFourierPoly._raw(
            {(i, j - 1, k, m, ph): c * j for (i, j, k, m, ph), c in self._terms.items() if j != 0}
        )

    def d_Theta(self):
        return LaurentFourierPoly._raw(
            {(i, j, k - 1, m, ph): c * k for (i, j, k, m, ph), c in self._terms.items() if k != 0}
        )

    def d_theta(self):
        out = {}
        for (i, j, k, m, ph), c in self._terms.items():
            if m == 0:
                continue
            if ph == COS:
                out[(i, j, k, m, SIN)] = -c * m
            else:
                out[(i, j, k, m, COS)] = c * m
        return LaurentFourierPoly._raw(out)

    # inspection

    def is_theta_free(self) -> bool:
        return all(key[3] == 0 for key in self._terms)

    def max_R_degree(self) -> int:
        return max((key[1] for key in self._terms), default=0)

    def max_abs_coef(self) -> float:
        return max((abs(float(c)) for c in self._terms.values()), default=0.0)

    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self._terms.values())

    def chop(self, tol: float) -> "LaurentFourierPoly":
        return LaurentFourierPoly._raw({k: c for k, c in self._terms.items() if abs(c) > tol})

    def to_float(self) -> "LaurentFourierPoly":
        return LaurentFourierPoly._raw({k: float(c) for k, c in self._terms.items()})

    def is_canonical(self) -> bool:
        for (i, j, k, m, ph), c in self._terms.items():
            if c == 0 or ph not in (COS, SIN) or m < 0 or j < 0 or k < 0 or i < MIN_R_POWER:
                return False
            if m == 0 and ph == SIN:
                return False
        return True

    def __call__(self, r, theta, R, Theta):
        """Numerical value at a point (numpy broadcasting)."""
        r, theta, R, Theta = (np.asarray(v, dtype=float) for v in (r, theta, R, Theta))
        acc = np.zeros(np.broadcast(r, theta, R, Theta).shape)
        for (i, j, k, m, ph), c in self._terms.items():
            trig = np.cos(m * theta) if ph == COS else np.sin(m * theta)
            acc = acc + float(c) * r**i * R**j * Theta**k * trig
        return acc

    # serialisation

    def to_text(self) -> str:
        """One term per line in lexicographic ``(i, j, k, m, phase)`` order."""
        return "".join(_term_str(k, c) + "\n" for k, c in self.items())

    @classmethod
    def from_text(cls, text: str) -> "LaurentFourierPoly":
        terms = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            mt = _LINE_RE.fullmatch(line)
            if mt is None:
                raise ValueError(f"cannot parse term: {line!r}")
            cs, i, j, k, trig, m = mt.groups()
            coef = Fraction(cs) if "/" in cs or re.fullmatch(r"-?\d+", cs) else float(cs)
            if trig is None:
                key = (int(i), int(j), int(k), 0, COS)
            else:
                key = (int(i), int(j), int(k), int(m), COS if trig == "cos" else SIN)
            terms[key] = terms.get(key, 0) + coef
        return cls(terms)

    def __str__(self):
        return self.to_text().rstrip("\n") or "0"

    def __repr__(self):
        return f"LaurentFourierPoly({len(self)} terms)"


_LINE_RE = re.compile(
    r"(\S+) r\^(-?\d+) R\^(\d+) Theta\^(\d+) (?:1|(cos|sin)\((\d+)\*theta\))"
)


def _product_to_sum(m1, p1, m2, p2):
    """Harmonic products as (m, phase, s): s=1 whole, s=2 half, s=-2 minus half."""
    if m1 == 0:
        return ((m2, p2, 1),)
    if m2 == 0:
        return ((m1, p1, 1),)
    d, t = m1 - m2, m1 + m2
    if p1 == COS and p2 == COS:
        return ((abs(d), COS, 2), (t, COS, 2))
    if p1 == SIN and p2 == SIN:
        return ((abs(d), COS, 2), (t, COS, -2))
    if p1 == SIN and p2 == COS:
        # sin a cos b = (sin(a+b) + sin(a-b)) / 2
        out = [(t, SIN, 2)]
        if d > 0:
            out.append((d, SIN, 2))
        elif d < 0:
            out.append((-d, SIN, -2))
        return tuple(out)
    # cos a sin b = (sin(a+b) - sin(a-b)) / 2
    out = [(t, SIN, 2)]
    if d > 0:
        out.append((d, SIN, -2))
    elif d < 0:
        out.append((-d, SIN, 2))
    return tuple(out)


Poly = LaurentFourierPoly


def poisson_bracket(f: Poly, g: Poly) -> Poly:
    """``{f, g} = f_r g_R - f_R g_r + f_theta g_Theta - f_Theta g_theta``."""
    return f.d_r() * g.d_R() - f.d_R() * g.d_r() + f.d_theta() * g.d_Theta() - f.d_Theta() * g.d_theta()


def d_theta(f: Poly) -> Poly:
    return f.d_theta()


def antiderivative_theta(f: Poly) -> Poly:
    """Zero-mean theta-antiderivative (the inverse of ``d/dtheta`` on zero-mean functions)."""
    bad = [(k, c) for k, c in f.items() if k[3] == 0]
    if bad:
        raise MeanObstructionError(bad)
    out = {}
    for (i, j, k, m, ph), c in f.terms.items():
        if ph == COS:
            out[(i, j, k, m, SIN)] = c / m
        else:
            out[(i, j, k, m, COS)] = -c / m
    return Poly._raw(out)


def op_LN(f: Poly) -> Poly:
    """Nilpotent part of the homological operator: ``-r * df/dR``."""
    return Poly.r() * f.d_R() * -1


def homological_operator(w: Poly) -> Poly:
    """``{W, Theta + r^2/2} = dW/dtheta - r dW/dR``."""
    return w.d_theta() + op_LN(w)


def split_mean(f: Poly) -> tuple[Poly, Poly]:
    """Split into the theta-free part and the zero-mean remainder."""
    star = {k: c for k, c in f.terms.items() if k[3] == 0}
    prime = {k: c for k, c in f.terms.items() if k[3] != 0}
    return Poly._raw(star), Poly._raw(prime)


def homological_series(rhs: Poly) -> list[Poly]:
    """Nonzero terms ``(-LS^-1 LN)^k LS^-1 rhs``, k = 0, 1, ...

    The list is finite because ``op_LN`` lowers the R-degree.
    """
    terms = []
    t = antiderivative_theta(rhs)
    while t:
        terms.append(t)
        t = -antiderivative_theta(op_LN(t))
    return terms


def solve_homological(rhs: Poly, rel_tol: float = 1e-12) -> Poly:
    """Solve ``dW/dtheta - r dW/dR = rhs`` for zero-mean ``rhs``.

    The result is checked by substitution: exactly for rational input,
    to ``rel_tol`` (relative to the largest coefficient) otherwise.

    Raises
    ------
    MeanObstructionError
        ``rhs`` has theta-free (secular) terms.
    VerificationError
        Back-substitution does not reproduce ``rhs``.
    """
    w = Poly.zero()
    for t in homological_series(rhs):
        w = w + t
    resid = homological_operator(w) - rhs
    if rhs.is_exact() and w.is_exact():
        if resid:
            raise VerificationError(f"homological residual has {len(resid)} terms")
    elif resid.max_abs_coef() > rel_tol * max(1.0, rhs.max_abs_coef()):
        raise VerificationError(f"homological residual {resid.max_abs_coef():.3e}")
    return w


class CartesianPoly4:
    """Polynomial of degree <= 4 in four variables, stored as ``{(e1, e2, e3, e4): coef}``."""

    MAX_DEGREE = 4

    def __init__(self, terms=None):
        self._terms = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != 4 or min(exps) < 0:
                raise ValueError(f"bad exponent tuple {exps}")
            if sum(exps) > self.MAX_DEGREE:
                raise ValueError(f"degree {sum(exps)} exceeds {self.MAX_DEGREE}")
            if c != 0:
                self._terms[exps] = self._terms.get(exps, 0) + c

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def __bool__(self):
        return bool(self._terms)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        acc = np.zeros(z.shape[1:])
        for e, c in self._terms.items():
            acc = acc + float(c) * z[0] ** e[0] * z[1] ** e[1] * z[2] ** e[2] * z[3] ** e[3]
        return acc


def polar_coordinates() -> tuple[Poly, Poly, Poly, Poly]:
    """The symplectic polar map ``z = (r cos, r sin, R cos - Theta/r sin, R sin + Theta/r cos)``."""
    c, s = Poly.cos(), Poly.sin()
    r, R = Poly.r(), Poly.R()
    th_over_r = Poly.monomial(i=-1, k=1)
    return r * c, r * s, R * c - th_over_r * s, R * s + th_over_r * c


def cart_to_polar(p: CartesianPoly4, P=None) -> Poly:
    """Substitute ``x = P z`` and then the polar map into ``p(x)``."""
    zs = polar_coordinates()
    if P is None:
        xs = list(zs)
    else:
        P = np.asarray(P) if not isinstance(P, (list, tuple)) else P
        xs = []
        for row in range(4):
            acc = Poly.zero()
            for col in range(4):
                pij = P[row][col]
                if pij != 0:
                    acc = acc + zs[col].scale(pij.item() if hasattr(pij, "item") else pij)
            xs.append(acc)
    powers = [[Poly.const(1)] for _ in range(4)]
    for v in range(4):
        for _ in range(CartesianPoly4.MAX_DEGREE):
            powers[v].append(powers[v][-1] * xs[v])
    out = Poly.zero()
    for e, c in p.terms.items():
        term = Poly.const(1)
        for v in range(4):
            if e[v]:
                term = term * powers[v][e[v]]
        out = out + term.scale(c)
    return out


def random_poly(rng, n_terms: int = 4, max_i: int = 2, max_j: int = 2, max_k: int = 2, max_m: int = 3,
                exact: bool = True, min_i: int = -2) -> Poly:
    """Small random polynomial; exact coefficients are small-denominator Fractions."""
    terms = {}
    for _ in range(n_terms):
        key = (
            int(rng.integers(min_i, max_i + 1)),
            int(rng.integers(0, max_j + 1)),
            int(rng.integers(0, max_k + 1)),
            int(rng.integers(0, max_m + 1)),
            COS if rng.integers(0, 2) == 0 else SIN,
        )
        if exact:
            c = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
        else:
            c = float(rng.normal())
        terms[key] = c
    return Poly(terms)


__all__ = [
    "AlgebraError",
    "CartesianPoly4",
    "LaurentFourierPoly",
    "MeanObstructionError",
    "VerificationError",
    "antiderivative_theta",
    "cart_to_polar",
    "d_theta",
    "homological_operator",
    "homological_series",
    "op_LN",
    "poisson_bracket",
    "polar_coordinates",
    "random_poly",
    "solve_homological",
    "split_mean",
]
