"""Bounded axis-aligned observation windows."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np

from .errors import DomainError


def _num(v):
    if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
        return Fraction(v)
    if isinstance(v, Real):
        return float(v)
    raise TypeError(f"not a real number: {v!r}")


@dataclass(frozen=True)
class Window:
    """A closed box ``[a_1, b_1] x ... x [a_d, b_d]`` with d in {1, 2}.

    Bounds may be given as ints/Fractions (kept exact, used by exact
    polynomial integration) or floats.
    """

    bounds: tuple

    def __post_init__(self):
        b = tuple((_num(lo), _num(hi)) for lo, hi in self.bounds)
        if len(b) not in (1, 2):
            raise DomainError(f"window dimension must be 1 or 2, got {len(b)}")
        for lo, hi in b:
            if not lo < hi:
                raise DomainError(f"empty window axis [{lo}, {hi}]")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def interval(cls, a, b) -> "Window":
        return cls(((a, b),))

    @classmethod
    def box(cls, *axes) -> "Window":
        return cls(tuple(axes))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([float(lo) for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([float(hi) for _, hi in self.bounds])

    @property
    def volume(self):
        v = 1
        for lo, hi in self.bounds:
            v = v * (hi - lo)
        return v

    @property
    def is_exact(self) -> bool:
        return all(isinstance(x, Fraction) for ax in self.bounds for x in ax)

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def contains_box(self, lo, hi) -> bool:
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        return bool(np.all(lo >= self.lower) and np.all(hi <= self.upper))

    def __str__(self):
        return " x ".join(f"[{_fmt(lo)}, {_fmt(hi)}]" for lo, hi in self.bounds)


def _fmt(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(v)
