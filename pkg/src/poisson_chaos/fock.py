"""Symmetric Fock space over L2(sigma) on finite linear combinations of factorised kernels.

Level ``n`` carries the weighted norm ``n! |f|^2`` of the symmetrised kernel,
so for factorised vectors

    <f_1 (x) ... (x) f_n, g_1 (x) ... (x) g_n> = per[(f_i, g_j)],

and the chaos map F = sum_n <C_n, f^(n)> is an isometry onto L2 of the
Poisson measure.  With this norm a^- and a^+ are mutually adjoint and obey
|a^-(phi) f^(n)| <= sqrt(n) |phi| |f^(n)|, |a^+(phi) f^(n)| <= sqrt(n+1) |phi| |f^(n)|.
"""
from __future__ import annotations

import math
import numpy as np

from .errors import SizeError
from .functions import TestFunction

DEFAULT_NMAX = 10


def permanent(a) -> float:
    """Row expansion memoised over column subsets, O(2^n n).

    Ryser's inclusion-exclusion has the same cost but alternating signs that
    cancel badly in floating point; this recursion adds no signs of its own.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return 1.0
    dp = np.zeros(1 << n)
    dp[0] = 1.0
    for mask in range(1, 1 << n):
        row = bin(mask).count("1") - 1
        acc = 0.0
        for j in range(n):
            if mask >> j & 1:
                acc += a[row, j] * dp[mask ^ (1 << j)]
        dp[mask] = acc
    return float(dp[-1])


class FockVector:
    """sum over levels of sum_j c_j f_{j,1} (x) ... (x) f_{j,n} (symmetrisation implicit)."""

    def __init__(self, terms=None, nmax=DEFAULT_NMAX):
        self.nmax = nmax
        self.terms = {}
        for level, items in (terms or {}).items():
            if level > nmax:
                raise SizeError(f"level {level} exceeds nmax = {nmax}")
            for c, fs in items:
                if len(fs) != level:
                    raise ValueError("kernel length must equal its level")
                self.terms.setdefault(level, []).append((float(c), tuple(fs)))

    @classmethod
    def vacuum(cls, nmax=DEFAULT_NMAX):
        return cls({0: [(1.0, ())]}, nmax)

    @classmethod
    def factorized(cls, fs, coeff=1.0, nmax=DEFAULT_NMAX):
        return cls({len(fs): [(coeff, tuple(fs))]}, nmax)

    @property
    def levels(self):
        return sorted(self.terms)

    def __add__(self, other):
        out = FockVector(nmax=max(self.nmax, other.nmax))
        for src in (self, other):
            for lvl, items in src.terms.items():
                out.terms.setdefault(lvl, []).extend(items)
        return out

    def scale(self, c):
        return FockVector({l: [(c * a, fs) for a, fs in items] for l, items in self.terms.items()}, self.nmax)

    def level(self, n):
        return FockVector({n: list(self.terms.get(n, []))}, self.nmax)

    def annihilate(self, phi: TestFunction, sigma):
        """a^-(phi): level n -> n-1, f_1..f_n -> sum_j (phi, f_j) prod_{i != j} f_i."""
        out = {}
        for lvl, items in self.terms.items():
            if lvl == 0:
                continue
            for c, fs in items:
                for j in range(lvl):
                    out.setdefault(lvl - 1, []).append((c * sigma.inner(phi, fs[j]), fs[:j] + fs[j + 1 :]))
        return FockVector(out, self.nmax)

    def create(self, phi: TestFunction):
        """a^+(phi): level n -> n+1, prepending phi."""
        out = {}
        for lvl, items in self.terms.items():
            if lvl + 1 > self.nmax:
                raise SizeError(f"creation would exceed nmax = {self.nmax}")
            out[lvl + 1] = [(c, (phi,) + fs) for c, fs in items]
        return FockVector(out, self.nmax)

    def to_function(self, sigma):
        """The chaos image gamma -> sum_n sum_j c_j <C_n(gamma), f_j>."""
        from .charlier import charlier_kernel_eval, charlier_kernel_eval_batch

        def value(gamma):
            return sum(c * charlier_kernel_eval(gamma, fs, sigma) for items in self.terms.values() for c, fs in items)

        def batch(b):
            out = np.zeros(b.size)
            for items in self.terms.values():
                for c, fs in items:
                    out = out + c * charlier_kernel_eval_batch(b, fs, sigma)
            return out

        value.batch = batch
        return value


def _gram(fs, gs, sigma, cache):
    n = len(fs)
    g = np.empty((n, n))
    for i, f in enumerate(fs):
        for j, h in enumerate(gs):
            key = (f, h)
            if key not in cache:
                cache[key] = sigma.inner(f, h)
            g[i, j] = cache[key]
    return g


def fock_inner(v: FockVector, w: FockVector, sigma) -> float:
    cache = {}
    total = 0.0
    for lvl, items in v.terms.items():
        for c, fs in items:
            for d, gs in w.terms.get(lvl, []):
                total += c * d * permanent(_gram(fs, gs, sigma, cache))
    return total


def fock_norm(v: FockVector, sigma) -> float:
    return math.sqrt(max(fock_inner(v, v, sigma), 0.0))


def fock_apply(op: str, phi, v: FockVector, sigma=None) -> FockVector:
    if op == "annihilate":
        return v.annihilate(phi, sigma)
    if op == "create":
        return v.create(phi)
    raise ValueError(f"unknown Fock operation {op!r}")


def coherent_vector(psi: TestFunction, nmax=DEFAULT_NMAX) -> FockVector:
    """Exp psi truncated at nmax: level n holds psi^{(x)n} / n!."""
    return FockVector({n: [(1.0 / math.factorial(n), (psi,) * n)] for n in range(nmax + 1)}, nmax)
