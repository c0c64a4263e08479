"""Truncated power series and set-partition combinatorics.

Coefficients may be ``Fraction`` (exact mode), ``float``, or numpy arrays of
equal shape (one series per Monte Carlo sample, evaluated in lockstep).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, SizeError

MAX_PARTITION_N = 10


@dataclass(frozen=True)
class TruncatedSeries:
    """c_0 + c_1 t + ... + c_N t^N modulo t^{N+1}."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if not self.coeffs:
            raise ValueError("a series needs at least one coefficient")

    @classmethod
    def zeros(cls, order, exact=True):
        z = Fraction(0) if exact else 0.0
        return cls((z,) * (order + 1))

    @classmethod
    def one(cls, order, exact=True):
        return cls(((Fraction(1) if exact else 1.0),) + cls.zeros(order, exact).coeffs[1:])

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries) or other.order != self.order:
            return NotImplemented
        return all(np.all(a == b) for a, b in zip(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(tuple(c if np.ndim(c) == 0 else c.tobytes() for c in self.coeffs))

    def __add__(self, other):
        return series_add(self, other)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return series_scale(self, other)

    __rmul__ = __mul__


def _check_orders(f, g):
    if f.order != g.order:
        raise ValueError("series orders differ")


def series_add(f, g):
    _check_orders(f, g)
    return TruncatedSeries(tuple(a + b for a, b in zip(f.coeffs, g.coeffs)))


def series_scale(f, c):
    return TruncatedSeries(tuple(c * a for a in f.coeffs))


def series_mul(f, g):
    """Cauchy product truncated at the common order."""
    _check_orders(f, g)
    n = f.order
    out = []
    for k in range(n + 1):
        acc = f.coeffs[0] * g.coeffs[k]
        for j in range(1, k + 1):
            acc = acc + f.coeffs[j] * g.coeffs[k - j]
        out.append(acc)
    return TruncatedSeries(tuple(out))


def _exp0(c):
    if isinstance(c, Fraction):
        if c != 0:
            raise DomainError("exact exp needs a zero constant term")
        return Fraction(1)
    return np.exp(c)


def series_exp(f: TruncatedSeries) -> TruncatedSeries:
    """g = exp(f) via g_n = (1/n) sum_{k=1}^n k f_k g_{n-k}."""
    g = [_exp0(f.coeffs[0])]
    for n in range(1, f.order + 1):
        acc = 1 * f.coeffs[1] * g[n - 1]
        for k in range(2, n + 1):
            acc = acc + k * f.coeffs[k] * g[n - k]
        g.append(acc / n if not isinstance(acc, Fraction) else acc / Fraction(n))
    return TruncatedSeries(tuple(g))


def series_log(f: TruncatedSeries) -> TruncatedSeries:
    """Inverse of series_exp: needs f_0 = 1 (exact) or f_0 > 0."""
    c0 = f.coeffs[0]
    if isinstance(c0, Fraction):
        if c0 != 1:
            raise DomainError("exact log needs constant term 1")
        l0 = Fraction(0)
    else:
        if np.any(np.asarray(c0) <= 0):
            raise DomainError("log needs a positive constant term")
        l0 = np.log(c0)
    # f' = f l'  =>  n f_n = sum_{k=1}^n k l_k f_{n-k}
    l = [l0]
    for n in range(1, f.order + 1):
        acc = n * f.coeffs[n]
        for k in range(1, n):
            acc = acc - k * l[k] * f.coeffs[n - k]
        l.append(acc / (n * c0))
    return TruncatedSeries(tuple(l))


def nth_derivative_at_zero(f: TruncatedSeries, n: int):
    """n! [t^n] f."""
    return math.factorial(n) * f.coeffs[n]


# ---------------------------------------------------------------------------
# set partitions


@dataclass(frozen=True)
class SetPartition:
    """Partition of {0, ..., n-1} into sorted blocks, blocks ordered by least element."""

    n: int
    blocks: tuple

    def __post_init__(self):
        seen = sorted(i for b in self.blocks for i in b)
        if seen != list(range(self.n)) or any(len(b) == 0 for b in self.blocks):
            raise ValueError("blocks must be nonempty and cover 0..n-1 exactly once")

    @property
    def type(self) -> tuple:
        return partition_type_of(self)

    def to_json(self):
        return [list(b) for b in self.blocks]


def _check_n(n):
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > MAX_PARTITION_N:
        raise SizeError(f"partition enumeration is capped at n = {MAX_PARTITION_N}")


def _rgs(n):
    """Restricted growth strings of length n in lexicographic order."""
    if n == 0:
        yield ()
        return
    a = [0] * n
    while True:
        yield tuple(a)
        # increment: rightmost position that may grow
        m = [0] * n
        for i in range(1, n):
            m[i] = max(m[i - 1], a[i - 1])
        i = n - 1
        while i > 0 and a[i] == m[i] + 1:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, n):
            a[j] = 0


@lru_cache(maxsize=None)
def _partitions_cached(n):
    out = []
    for s in _rgs(n):
        k = max(s) + 1 if s else 0
        blocks = [[] for _ in range(k)]
        for i, b in enumerate(s):
            blocks[b].append(i)
        out.append(SetPartition(n, tuple(tuple(b) for b in blocks)))
    return tuple(out)


def enumerate_set_partitions(n: int):
    """All set partitions of {0..n-1}, restricted-growth-string lexicographic order."""
    _check_n(n)
    return list(_partitions_cached(n))


def bell_number(n: int) -> int:
    """Bell number via the Bell triangle (independent of the enumeration)."""
    if n == 0:
        return 1
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1]


def partition_type_of(p: SetPartition) -> tuple:
    """Multiplicities (i_1, ..., i_n)."""
    mult = [0] * p.n
    for b in p.blocks:
        mult[len(b) - 1] += 1
    return tuple(mult)


def partition_types(n: int):
    """All (i_1..i_n) with sum k i_k = n, in lexicographic order of the integer partitions."""
    out = []

    def rec(remaining, largest, acc):
        if remaining == 0:
            mult = [0] * n
            for part in acc:
                mult[part - 1] += 1
            out.append(tuple(mult))
            return
        for part in range(min(remaining, largest), 0, -1):
            rec(remaining - part, part, acc + [part])

    if n == 0:
        return [()]
    rec(n, n, [])
    return out


def _check_type(t):
    n = len(t)
    if any(i < 0 for i in t) or sum((k + 1) * i for k, i in enumerate(t)) != n:
        raise ValueError(f"invalid partition type {t}")
    return n


def count_of_type(t) -> int:
    """n! / prod_k ((k!)^{i_k} i_k!)."""
    n = _check_type(tuple(t))
    den = 1
    for k, i in enumerate(t, start=1):
        den *= math.factorial(k) ** i * math.factorial(i)
    return math.factorial(n) // den


def type_series_coefficient(t) -> Fraction:
    """n! / prod_k (i_k! k^{i_k}): the per-type weight of the factorised Gamma inner product."""
    n = _check_type(tuple(t))
    den = 1
    for k, i in enumerate(t, start=1):
        den *= math.factorial(i) * k ** i
    return Fraction(math.factorial(n), den)


def block_weight(t) -> int:
    """prod_k ((k-1)!)^{i_k}: weight carried by each partition of the given type."""
    _check_type(tuple(t))
    w = 1
    for k, i in enumerate(t, start=1):
        w *= math.factorial(k - 1) ** i
    return w


def weight_simplification_holds(t) -> bool:
    """Check type_series_coefficient / count_of_type == block_weight exactly."""
    return type_series_coefficient(t) / count_of_type(t) == block_weight(t)


def faa_di_bruno_exp(derivs, f_value=0):
    """n-th derivative of exp(f) from f', ..., f^{(n)} at a point.

    sum over types of n!/(i_1! ... i_n!) prod_k (f^{(k)}/k!)^{i_k} times e^{f}.
    Exact when the derivatives are Fractions and ``f_value == 0``.
    """
    derivs = [Fraction(d) if isinstance(d, int) else d for d in derivs]
    n = len(derivs)
    _check_n(n)
    total = Fraction(0)
    for t in partition_types(n):
        term = Fraction(math.factorial(n))
        for i in t:
            term /= math.factorial(i)
        for k, i in enumerate(t, start=1):
            if i:
                term = term * (derivs[k - 1] / math.factorial(k)) ** i
        total = total + term
    if isinstance(f_value, (int, Fraction)) and f_value == 0:
        return total
    return total * math.exp(f_value)
