"""Finite atomic measures: configurations, signed discrete measures, marked configurations.

All three store atoms sorted lexicographically by position and are immutable;
atom surgery returns new objects.  ``AtomBatch`` packs many independent
samples into flat arrays so Monte Carlo code can evaluate test functions once
per batch and reduce per sample with ``bincount``.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import AtomClash, AtomMissing, DomainError
from .window import Window


def _sort_order(points):
    if points.shape[1] == 1:
        return np.argsort(points[:, 0], kind="stable")
    return np.lexsort(points.T[::-1])


def _as_points(points, dim=None):
    a = np.asarray(points, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1) if dim in (None, 1) else a.reshape(-1, dim)
    if dim is not None and a.shape[1] != dim:
        raise ValueError(f"points have dimension {a.shape[1]}, expected {dim}")
    return a


def _find(points, x):
    hits = np.flatnonzero(np.all(points == x, axis=1))
    return int(hits[0]) if hits.size else -1


class _Atomic:
    """Shared machinery: sorted positions plus optional per-atom values."""

    _value_name: str | None = None

    def __init__(self, points, values=None, window: Window | None = None, *, _trusted=False):
        dim = window.dim if window is not None else None
        raw = np.asarray(points, dtype=float)
        if raw.size == 0:
            pts = np.zeros((0, dim or (raw.shape[1] if raw.ndim == 2 else 1)))
        else:
            pts = _as_points(raw, dim)
        vals = None if values is None else np.asarray(values, dtype=float).reshape(-1)
        if vals is not None and vals.shape[0] != pts.shape[0]:
            raise ValueError("one value per atom required")
        if not _trusted:
            order = _sort_order(pts)
            pts = pts[order]
            if vals is not None:
                vals = vals[order]
            if pts.shape[0] > 1:
                same = np.all(pts[1:] == pts[:-1], axis=1)
                if same.any():
                    raise AtomClash(f"duplicate atom position {pts[1:][same][0]}")
            if window is not None and pts.shape[0] and not window.contains(pts).all():
                raise DomainError("atom outside the window")
            if vals is not None and np.any(vals == 0):
                raise DomainError("atom weights/marks must be nonzero")
        pts.setflags(write=False)
        if vals is not None:
            vals.setflags(write=False)
        self.points = pts
        self._values = vals
        self.window = window

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def _rebuild(self, points, values):
        raise NotImplementedError

    def _value_for_new(self, s):
        return None

    def add_atom(self, x, s=None):
        x = np.asarray(x, dtype=float).reshape(self.dim)
        if _find(self.points, x) >= 0:
            raise AtomClash(f"atom already at {x}")
        if self.window is not None and not self.window.contains(x).all():
            raise DomainError("atom outside the window")
        pts = np.vstack([self.points, x[None, :]])
        vals = None if self._values is None else np.append(self._values, self._value_for_new(s))
        order = _sort_order(pts)
        return self._rebuild(pts[order], None if vals is None else vals[order])

    def remove_atom(self, x):
        x = np.asarray(x, dtype=float).reshape(self.dim)
        i = _find(self.points, x)
        if i < 0:
            raise AtomMissing(f"no atom at {x}")
        keep = np.arange(len(self)) != i
        return self._rebuild(self.points[keep], None if self._values is None else self._values[keep])

    def count_in_region(self, lo, hi) -> int:
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.window is not None and not self.window.contains_box(lo, hi):
            raise DomainError("region must lie inside the window")
        inside = np.all((self.points >= lo) & (self.points <= hi), axis=1)
        return int(inside.sum())

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        same_vals = (self._values is None and other._values is None) or (
            self._values is not None and other._values is not None and np.array_equal(self._values, other._values)
        )
        return self.points.shape == other.points.shape and np.array_equal(self.points, other.points) and same_vals

    __hash__ = None

    # serialization ----------------------------------------------------
    def to_text(self) -> str:
        """Line-oriented form: a header line, then one atom per line in hex floats."""
        head = f"{type(self).__name__} dim={self.dim} n={len(self)}"
        if self.window is not None:
            head += " window=" + ";".join(f"{float(a).hex()},{float(b).hex()}" for a, b in self.window.bounds)
        lines = [head]
        for j in range(len(self)):
            fields = [float(v).hex() for v in self.points[j]]
            if self._values is not None:
                fields.append(float(self._values[j]).hex())
            lines.append(" ".join(fields))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        d = {"type": type(self).__name__, "points": [[float(v).hex() for v in p] for p in self.points]}
        if self._values is not None:
            d[self._value_name] = [float(v).hex() for v in self._values]
        if self.window is not None:
            d["window"] = [[float(a).hex(), float(b).hex()] for a, b in self.window.bounds]
        return d


class Configuration(_Atomic):
    """A finite simple point configuration gamma = {x_1, ..., x_n}."""

    def __init__(self, points=(), window: Window | None = None, *, _trusted=False):
        super().__init__(points, None, window, _trusted=_trusted)

    def _rebuild(self, points, values):
        return Configuration(points, self.window, _trusted=True)

    def pairing(self, f) -> float:
        if not len(self):
            return 0.0
        return float(np.sum(f(self.points)))

    def power_sum(self, f, k: int) -> float:
        if not len(self):
            return 0.0
        return float(np.sum(f(self.points) ** k))

    def __repr__(self):
        return f"Configuration(n={len(self)}, dim={self.dim})"


class DiscreteMeasure(_Atomic):
    """Signed atomic measure omega = sum_j s_j eps_{x_j} with distinct positions."""

    _value_name = "weights"

    def __init__(self, points=(), weights=(), window: Window | None = None, *, _trusted=False):
        super().__init__(points, weights, window, _trusted=_trusted)
        if self._values is None:
            self._values = np.zeros(0)

    @property
    def weights(self):
        return self._values

    def _value_for_new(self, s):
        if s is None or s == 0:
            raise DomainError("new atom needs a nonzero weight")
        return float(s)

    def _rebuild(self, points, values):
        return DiscreteMeasure(points, values, self.window, _trusted=True)

    def pairing(self, f) -> float:
        if not len(self):
            return 0.0
        return float(np.sum(self.weights * f(self.points)))

    def power_sum(self, f, k: int) -> float:
        if not len(self):
            return 0.0
        return float(np.sum(self.weights * f(self.points) ** k))

    def as_configuration(self) -> Configuration:
        return Configuration(self.points, self.window, _trusted=True)

    def __repr__(self):
        return f"DiscreteMeasure(n={len(self)}, dim={self.dim})"


class MarkedConfiguration(_Atomic):
    """Marked configuration {(s_j, x_j)} with distinct positions and nonzero marks."""

    _value_name = "marks"

    def __init__(self, points=(), marks=(), window: Window | None = None, *, _trusted=False):
        super().__init__(points, marks, window, _trusted=_trusted)
        if self._values is None:
            self._values = np.zeros(0)

    @property
    def marks(self):
        return self._values

    def _value_for_new(self, s):
        if s is None or s == 0:
            raise DomainError("new atom needs a nonzero mark")
        return float(s)

    def _rebuild(self, points, values):
        return MarkedConfiguration(points, values, self.window, _trusted=True)

    def pairing(self, fhat) -> float:
        """<gamma_hat, fhat> for fhat(s, x) given as a callable of (marks (n,), points (n, dim))."""
        if not len(self):
            return 0.0
        return float(np.sum(fhat(self.marks, self.points)))

    def positions(self) -> Configuration:
        return Configuration(self.points, self.window, _trusted=True)

    def __repr__(self):
        return f"MarkedConfiguration(n={len(self)}, dim={self.dim})"


def sigma_map(gh: MarkedConfiguration) -> DiscreteMeasure:
    """(s, x) -> s eps_x."""
    return DiscreteMeasure(gh.points, gh.marks, gh.window, _trusted=True)


def sigma_inverse(om: DiscreteMeasure) -> MarkedConfiguration:
    return MarkedConfiguration(om.points, om.weights, om.window, _trusted=True)


def pairing(m, f) -> float:
    return m.pairing(f)


def power_sum(m, f, k: int) -> float:
    if k < 1:
        raise ValueError("k must be positive")
    return m.power_sum(f, k)


def add_atom(m, x, s=None):
    return m.add_atom(x, s) if not isinstance(m, Configuration) else m.add_atom(x)


def remove_atom(m, x):
    return m.remove_atom(x)


def count_in_region(m, lo, hi) -> int:
    return m.count_in_region(lo, hi)


# ---------------------------------------------------------------------------
# (de)serialization


_KINDS = {"Configuration": Configuration, "DiscreteMeasure": DiscreteMeasure, "MarkedConfiguration": MarkedConfiguration}


def _window_from_pairs(pairs):
    return Window(tuple((float.fromhex(a), float.fromhex(b)) for a, b in pairs))


def from_text(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    cls = _KINDS[head[0]]
    meta = dict(tok.split("=", 1) for tok in head[1:])
    dim, n = int(meta["dim"]), int(meta["n"])
    window = None
    if "window" in meta:
        window = _window_from_pairs([ax.split(",") for ax in meta["window"].split(";")])
    rows = [[float.fromhex(t) for t in ln.split()] for ln in lines[1 : 1 + n]]
    arr = np.array(rows, dtype=float).reshape(n, dim + (cls is not Configuration))
    if cls is Configuration:
        return Configuration(arr[:, :dim], window)
    return cls(arr[:, :dim], arr[:, dim], window)


def from_json(d: dict):
    cls = _KINDS[d["type"]]
    window = _window_from_pairs(d["window"]) if "window" in d else None
    pts = np.array([[float.fromhex(v) for v in p] for p in d["points"]], dtype=float)
    if pts.size == 0:
        pts = np.zeros((0, window.dim if window else 1))
    if cls is Configuration:
        return Configuration(pts, window)
    vals = [float.fromhex(v) for v in d[cls._value_name]]
    return cls(pts, vals, window)


def dumps(m) -> str:
    return json.dumps(m.to_json(), sort_keys=True)


# ---------------------------------------------------------------------------
# batches


class AtomBatch:
    """Many independent atomic samples stored flat, atoms grouped by owner.

    ``values`` holds weights (compound/Gamma noise) or marks (marked samples);
    ``None`` means unit weights (plain configurations).
    """

    def __init__(self, points, owner, size, values=None, window=None, kind="configuration"):
        self.points = np.asarray(points, dtype=float)
        self.owner = np.asarray(owner, dtype=np.int64)
        self.size = int(size)
        self.values = None if values is None else np.asarray(values, dtype=float)
        self.window = window
        self.kind = kind
        self.counts = np.bincount(self.owner, minlength=self.size)
        self.starts = np.concatenate([[0], np.cumsum(self.counts)[:-1]]).astype(np.int64)

    def __len__(self):
        return self.size

    def reduce_sum(self, vals):
        return np.bincount(self.owner, weights=vals, minlength=self.size)

    def reduce_prod(self, vals):
        out = np.ones(self.size)
        nz = self.counts > 0
        if vals.size:
            out[nz] = np.multiply.reduceat(vals, self.starts[nz])
        return out

    def pairing(self, f):
        v = f(self.points) if self.points.shape[0] else np.zeros(0)
        if self.values is not None:
            v = self.values * v
        return self.reduce_sum(v)

    def power_sums(self, f, kmax, weighted=True):
        """Array ``S[k-1, i] = sum over atoms of sample i of (w) f(x)^k`` for k = 1..kmax."""
        v = f(self.points) if self.points.shape[0] else np.zeros(0)
        out = np.empty((kmax, self.size))
        p = np.ones_like(v)
        for k in range(kmax):
            p = p * v
            out[k] = self.reduce_sum(self.values * p if (weighted and self.values is not None) else p)
        return out

    def sample(self, i):
        sl = slice(self.starts[i], self.starts[i] + self.counts[i])
        pts = self.points[sl]
        if self.kind == "configuration":
            return Configuration(pts, self.window)
        if self.kind == "marked":
            return MarkedConfiguration(pts, self.values[sl], self.window)
        return DiscreteMeasure(pts, self.values[sl], self.window)

    def __iter__(self):
        for i in range(self.size):
            yield self.sample(i)
