"""Closed family of test functions on a window.

Every member is vectorised (``f(points) -> values``), knows where it is not
smooth (``breakpoints``, used to split quadrature panels) and can enclose its
range on a window (``bounds``), which is what the domain checks such as
``phi > -1`` or ``phi < 1`` rely on.  Arithmetic between polynomials stays
polynomial (so exact rational integration remains available); anything else
builds an expression node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from numbers import Real

import numpy as np

from .errors import DomainError
from .window import Window

_AXIS_NAMES = ("x", "y")


def as_points(x, dim):
    """Coerce ``x`` to an ``(n, dim)`` float array; also return the output shape."""
    a = np.asarray(x, dtype=float)
    if dim == 1:
        shape = a.shape[:-1] if a.ndim == 2 and a.shape[1] == 1 else a.shape
        return a.reshape(-1, 1), shape
    if a.shape[-1] != dim:
        raise ValueError(f"expected points with trailing dimension {dim}, got shape {a.shape}")
    return a.reshape(-1, dim), a.shape[:-1]


def _is_number(v):
    return isinstance(v, (Real, Fraction)) and not isinstance(v, bool)


def _exactify(v):
    if isinstance(v, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(v, int):
        return Fraction(v)
    return v


def fmt_number(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            s = str(v.numerator)
        else:
            s = f"{v.numerator}/{v.denominator}"
        return f"({s})" if v < 0 or v.denominator != 1 else s
    s = repr(float(v))
    return f"({s})" if float(v) < 0 or s in ("inf", "nan") else s


class TestFunction:
    """Base class of the test-function family."""

    __test__ = False  # keep pytest from collecting the class by name
    dim: int

    def __call__(self, x):
        pts, shape = as_points(x, self.dim)
        out = self._eval(pts)
        if shape == ():
            return float(out[0])
        return out.reshape(shape)

    # subclasses implement
    def _eval(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounds(self, window: Window) -> tuple[float, float]:
        raise NotImplementedError

    def breakpoints(self) -> tuple[frozenset, ...]:
        return tuple(frozenset() for _ in range(self.dim))

    def to_expr(self) -> str:
        raise NotImplementedError

    @property
    def is_polynomial(self) -> bool:
        return False

    def sup_abs(self, window: Window) -> float:
        lo, hi = self.bounds(window)
        return max(abs(lo), abs(hi))

    # arithmetic -------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, TestFunction):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        if _is_number(other):
            return Polynomial.constant(other, self.dim)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if isinstance(other, Polynomial) and other.is_zero:
            return self
        left = self.terms if isinstance(self, Sum) else (self,)
        right = other.terms if isinstance(other, Sum) else (other,)
        return Sum(left + right)

    def __radd__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + self

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if _is_number(other):
            c = _exactify(other)
            if isinstance(c, Fraction) and c == 1:
                return self
            return Scale(c, self)
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if isinstance(other, Polynomial) and other.constant_value is not None:
            return self * other.constant_value
        left = self.factors if isinstance(self, Product) else (self,)
        right = other.factors if isinstance(other, Product) else (other,)
        return Product(left + right)

    def __rmul__(self, other):
        if _is_number(other):
            return self * other
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other * self

    def __truediv__(self, other):
        if not _is_number(other):
            return NotImplemented
        other = _exactify(other)
        return self * (1 / other)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are in the family")
        if k == 0:
            return Polynomial.constant(Fraction(1), self.dim)
        if k == 1:
            return self
        return Power(self, k)


def _union_breaks(children, dim):
    out = [set() for _ in range(dim)]
    for c in children:
        for i, b in enumerate(c.breakpoints()):
            out[i] |= b
    return tuple(frozenset(s) for s in out)


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True, eq=True)
class Polynomial(TestFunction):
    """Sparse multivariate polynomial ``sum c_e x^e`` (tensor exponents)."""

    terms: tuple
    dim: int = 1

    def __post_init__(self):
        acc: dict = {}
        for exps, c in self.terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.dim or min(exps) < 0:
                raise ValueError(f"bad exponent {exps} for dim {self.dim}")
            acc[exps] = acc.get(exps, 0) + _exactify(c)
        norm = tuple(sorted((e, c) for e, c in acc.items() if c != 0))
        object.__setattr__(self, "terms", norm)

    @classmethod
    def constant(cls, c, dim=1) -> "Polynomial":
        return cls((((0,) * dim, c),), dim)

    @classmethod
    def coordinate(cls, axis=0, dim=1) -> "Polynomial":
        e = [0] * dim
        e[axis] = 1
        return cls(((tuple(e), Fraction(1)),), dim)

    @classmethod
    def from_coefficients(cls, coeffs) -> "Polynomial":
        """1-D polynomial ``c0 + c1 x + c2 x^2 + ...``."""
        return cls(tuple(((k,), c) for k, c in enumerate(coeffs)), 1)

    @property
    def is_polynomial(self):
        return True

    @property
    def is_zero(self):
        return not self.terms

    @property
    def constant_value(self):
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and not any(self.terms[0][0]):
            return self.terms[0][1]
        return None

    @property
    def is_exact(self):
        return all(isinstance(c, Fraction) for _, c in self.terms)

    def degree(self, axis=0) -> int:
        return max((e[axis] for e, _ in self.terms), default=0)

    def coefficient_array(self) -> np.ndarray:
        shape = tuple(self.degree(i) + 1 for i in range(self.dim))
        arr = np.zeros(shape)
        for e, c in self.terms:
            arr[e] = float(c)
        return arr

    def _eval(self, pts):
        out = np.zeros(pts.shape[0])
        for e, c in self.terms:
            t = np.full(pts.shape[0], float(c))
            for i, k in enumerate(e):
                if k:
                    t = t * pts[:, i] ** k
            out += t
        return out

    def evaluate_exact(self, point):
        """Evaluate with exact arithmetic at a point given as numbers."""
        point = tuple(np.atleast_1d(point)) if not isinstance(point, tuple) else point
        total = Fraction(0)
        for e, c in self.terms:
            t = c
            for xi, k in zip(point, e):
                t = t * _exactify(xi) ** k
            total = total + t
        return total

    def integrate_box(self, window: Window):
        """Exact integral over the window against Lebesgue measure."""
        total = 0
        for e, c in self.terms:
            t = c
            for (lo, hi), k in zip(window.bounds, e):
                t = t * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
            total = total + t
        return total

    def bounds(self, window):
        if not self.terms:
            return (0.0, 0.0)
        if self.dim == 1:
            return _poly_range_1d(self.coefficient_array(), *window.bounds[0])
        return _poly_enclosure_nd(self.coefficient_array(), window)

    def to_expr(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            factors = [] if (isinstance(c, Fraction) and c == 1 and any(e)) else [fmt_number(c)]
            for i, k in enumerate(e):
                if k == 1:
                    factors.append(_AXIS_NAMES[i])
                elif k > 1:
                    factors.append(f"{_AXIS_NAMES[i]}**{k}")
            parts.append("*".join(factors))
        s = " + ".join(parts)
        return f"({s})" if ("*" in s or " + " in s) else s

    # closed arithmetic
    def __add__(self, other):
        if _is_number(other):
            other = Polynomial.constant(other, self.dim)
        if isinstance(other, Polynomial):
            return Polynomial(self.terms + other.terms, self.dim)
        return super().__add__(other)

    def __mul__(self, other):
        if _is_number(other):
            other = _exactify(other)
            if self.constant_value is None or isinstance(other, Real):
                return Polynomial(tuple((e, c * other) for e, c in self.terms), self.dim)
        if isinstance(other, Polynomial):
            terms = tuple(
                (tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
                for (e1, c1), (e2, c2) in iproduct(self.terms, other.terms)
            )
            return Polynomial(terms, self.dim)
        if isinstance(other, TestFunction) and self.constant_value is not None:
            return other * self.constant_value
        return super().__mul__(other)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are in the family")
        out = Polynomial.constant(Fraction(1), self.dim)
        for _ in range(k):
            out = out * self
        return out

    def __hash__(self):
        return hash((self.terms, self.dim))


def _poly_range_1d(coeffs, lo, hi):
    lo, hi = float(lo), float(hi)
    p = np.polynomial.Polynomial(coeffs)
    cand = [lo, hi]
    if len(coeffs) > 2:
        for r in p.deriv().roots():
            if abs(r.imag) < 1e-12 and lo < r.real < hi:
                cand.append(r.real)
    vals = p(np.array(cand))
    return float(vals.min()), float(vals.max())


def _affine_matrix(deg, a, h):
    # m[k, i] = coefficient of u^k in (a + h u)^i
    m = np.zeros((deg + 1, deg + 1))
    for i in range(deg + 1):
        for k in range(i + 1):
            m[k, i] = math.comb(i, k) * a ** (i - k) * h ** k
    return m


def _bernstein_matrix(deg):
    # b_i = sum_{k<=i} C(i,k)/C(n,k) c_k
    m = np.zeros((deg + 1, deg + 1))
    for i in range(deg + 1):
        for k in range(i + 1):
            m[i, k] = math.comb(i, k) / math.comb(deg, k)
    return m


def _poly_enclosure_nd(coeffs, window, pieces=8):
    """Range enclosure from Bernstein coefficients on a uniform subdivision."""
    lo_all, hi_all = math.inf, -math.inf
    edges = [np.linspace(float(a), float(b), pieces + 1) for a, b in window.bounds]
    bern = [_bernstein_matrix(n - 1) for n in coeffs.shape]
    for cell in iproduct(range(pieces), repeat=coeffs.ndim):
        c = coeffs
        for ax, j in enumerate(cell):
            a = edges[ax][j]
            h = edges[ax][j + 1] - a
            m = bern[ax] @ _affine_matrix(coeffs.shape[ax] - 1, a, h)
            c = np.moveaxis(np.tensordot(m, np.moveaxis(c, ax, 0), axes=(1, 0)), 0, ax)
        lo_all = min(lo_all, float(c.min()))
        hi_all = max(hi_all, float(c.max()))
    return lo_all, hi_all


# ---------------------------------------------------------------------------
# non-polynomial atoms


def _tuple_of_numbers(v, dim=None):
    if _is_number(v):
        return (float(v),)
    return tuple(float(t) for t in v)


@dataclass(frozen=True)
class Indicator(TestFunction):
    """``height`` on the closed box ``[lo, hi]``, zero elsewhere."""

    lo: tuple
    hi: tuple
    height: float = 1.0

    def __post_init__(self):
        lo, hi = _tuple_of_numbers(self.lo), _tuple_of_numbers(self.hi)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"bad indicator box {lo}..{hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "height", _exactify(self.height))

    @property
    def dim(self):
        return len(self.lo)

    def _eval(self, pts):
        inside = np.all((pts >= np.array(self.lo)) & (pts <= np.array(self.hi)), axis=1)
        return np.where(inside, float(self.height), 0.0)

    def bounds(self, window):
        h = float(self.height)
        covers = all(a <= float(wl) and b >= float(wh) for a, b, (wl, wh) in zip(self.lo, self.hi, window.bounds))
        if covers:
            return (h, h)
        disjoint = any(b < float(wl) or a > float(wh) for a, b, (wl, wh) in zip(self.lo, self.hi, window.bounds))
        if disjoint:
            return (0.0, 0.0)
        return (min(0.0, h), max(0.0, h))

    def breakpoints(self):
        return tuple(frozenset((a, b)) for a, b in zip(self.lo, self.hi))

    def to_expr(self):
        if self.dim == 1:
            return f"indicator({fmt_number(self.lo[0])}, {fmt_number(self.hi[0])}, {fmt_number(self.height)})"
        lo = ", ".join(fmt_number(v) for v in self.lo)
        hi = ", ".join(fmt_number(v) for v in self.hi)
        return f"indicator(({lo}), ({hi}), {fmt_number(self.height)})"


@dataclass(frozen=True)
class Bump(TestFunction):
    """Smooth compactly supported bump ``A exp(1 - 1/(1 - r^2))``, ``r = |x - c| / radius``."""

    center: tuple
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _tuple_of_numbers(self.center))
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "amplitude", _exactify(self.amplitude))

    @property
    def dim(self):
        return len(self.center)

    def _eval(self, pts):
        r2 = np.sum((pts - np.array(self.center)) ** 2, axis=1) / self.radius ** 2
        out = np.zeros(pts.shape[0])
        inside = r2 < 1.0
        out[inside] = float(self.amplitude) * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    def bounds(self, window):
        a = float(self.amplitude)
        return (min(0.0, a), max(0.0, a))

    def breakpoints(self):
        # interior splits near the edges keep Gauss-Legendre at machine precision on the flat tails
        r = self.radius
        return tuple(frozenset(c + k * r for k in (-1.0, -0.9, 0.0, 0.9, 1.0)) for c in self.center)

    def to_expr(self):
        c = fmt_number(self.center[0]) if self.dim == 1 else "(" + ", ".join(fmt_number(v) for v in self.center) + ")"
        return f"bump({c}, {fmt_number(self.radius)}, {fmt_number(self.amplitude)})"


# ---------------------------------------------------------------------------
# composite nodes


def _imul(a, b):
    c = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    c = [0.0 if math.isnan(v) else v for v in c]
    return (min(c), max(c))


def _ipow(a, k):
    lo, hi = a
    if k % 2 == 1:
        return (lo ** k, hi ** k)
    if lo >= 0:
        return (lo ** k, hi ** k)
    if hi <= 0:
        return (hi ** k, lo ** k)
    return (0.0, max(lo ** k, hi ** k))


@dataclass(frozen=True)
class Sum(TestFunction):
    terms: tuple

    @property
    def dim(self):
        return self.terms[0].dim

    def _eval(self, pts):
        out = self.terms[0]._eval(pts)
        for t in self.terms[1:]:
            out = out + t._eval(pts)
        return out

    def bounds(self, window):
        lo = hi = 0.0
        for t in self.terms:
            a, b = t.bounds(window)
            lo, hi = lo + a, hi + b
        return (lo, hi)

    def breakpoints(self):
        return _union_breaks(self.terms, self.dim)

    def to_expr(self):
        return "(" + " + ".join(t.to_expr() for t in self.terms) + ")"


@dataclass(frozen=True)
class Product(TestFunction):
    factors: tuple

    @property
    def dim(self):
        return self.factors[0].dim

    def _eval(self, pts):
        out = self.factors[0]._eval(pts)
        for f in self.factors[1:]:
            out = out * f._eval(pts)
        return out

    def bounds(self, window):
        acc = (1.0, 1.0)
        for f in self.factors:
            acc = _imul(acc, f.bounds(window))
        return acc

    def breakpoints(self):
        return _union_breaks(self.factors, self.dim)

    def to_expr(self):
        return "(" + " * ".join(f.to_expr() for f in self.factors) + ")"


@dataclass(frozen=True)
class Scale(TestFunction):
    factor: object
    inner: TestFunction

    def __post_init__(self):
        if isinstance(self.inner, Scale):
            object.__setattr__(self, "factor", self.factor * self.inner.factor)
            object.__setattr__(self, "inner", self.inner.inner)

    @property
    def dim(self):
        return self.inner.dim

    def _eval(self, pts):
        return float(self.factor) * self.inner._eval(pts)

    def bounds(self, window):
        return _imul((float(self.factor), float(self.factor)), self.inner.bounds(window))

    def breakpoints(self):
        return self.inner.breakpoints()

    def to_expr(self):
        return f"({fmt_number(self.factor)} * {self.inner.to_expr()})"


@dataclass(frozen=True)
class Power(TestFunction):
    base: TestFunction
    exponent: int

    @property
    def dim(self):
        return self.base.dim

    def _eval(self, pts):
        return self.base._eval(pts) ** self.exponent

    def bounds(self, window):
        return _ipow(self.base.bounds(window), self.exponent)

    def breakpoints(self):
        return self.base.breakpoints()

    def to_expr(self):
        return f"({self.base.to_expr()})**{self.exponent}"


# elementwise maps: name -> (function, monotone direction, domain test on (lo, hi))
_MAPS = {
    "log1p": (np.log1p, 1, lambda lo, hi: lo > -1.0),
    "log1m": (lambda v: np.log1p(-v), -1, lambda lo, hi: hi < 1.0),
    "ratio": (lambda v: v / (v - 1.0), -1, lambda lo, hi: hi < 1.0),
    "recip1p": (lambda v: 1.0 / (1.0 + v), -1, lambda lo, hi: lo > -1.0),
    "exp": (np.exp, 1, lambda lo, hi: True),
}


@dataclass(frozen=True)
class Mapped(TestFunction):
    """A monotone elementwise map applied to a family member.

    ``log1p`` is log(1+f), ``log1m`` is log(1-f), ``ratio`` is f/(f-1),
    ``recip1p`` is 1/(1+f).
    """

    name: str
    inner: TestFunction

    def __post_init__(self):
        if self.name not in _MAPS:
            raise ValueError(f"unknown map {self.name!r}")

    @property
    def dim(self):
        return self.inner.dim

    def _eval(self, pts):
        fn = _MAPS[self.name][0]
        with np.errstate(divide="ignore", invalid="ignore"):
            return fn(self.inner._eval(pts))

    def bounds(self, window):
        fn, sign, ok = _MAPS[self.name]
        lo, hi = self.inner.bounds(window)
        if not ok(lo, hi):
            raise DomainError(f"{self.name} undefined on range [{lo}, {hi}]")
        a, b = float(fn(np.float64(lo))), float(fn(np.float64(hi)))
        return (a, b) if sign > 0 else (b, a)

    def breakpoints(self):
        return self.inner.breakpoints()

    def to_expr(self):
        return f"{self.name}({self.inner.to_expr()})"


# convenience constructors -------------------------------------------------


def constant(c, dim=1) -> Polynomial:
    return Polynomial.constant(c, dim)


def coordinate(axis=0, dim=1) -> Polynomial:
    return Polynomial.coordinate(axis, dim)


def poly(*coeffs) -> Polynomial:
    """1-D polynomial from ascending coefficients."""
    return Polynomial.from_coefficients(coeffs)


def log1p(f):
    return Mapped("log1p", f)


def log1m(f):
    return Mapped("log1m", f)


def ratio(f):
    return Mapped("ratio", f)


def recip1p(f):
    return Mapped("recip1p", f)


def exp(f):
    return Mapped("exp", f)
