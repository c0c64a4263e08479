"""Intensity and Levy measures, quadrature, Laplace functionals and samplers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from .configuration import AtomBatch, Configuration, DiscreteMeasure, MarkedConfiguration, sigma_map
from .errors import DIVERGES, DomainError
from .functions import Polynomial, TestFunction, constant, log1m
from .window import Window

DEFAULT_ORDER = 32


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=None)
def _gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


@lru_cache(maxsize=256)
def _axis_rule(lo, hi, order, breaks):
    cuts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    x, w = _gauss_legendre(order)
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        h = 0.5 * (b - a)
        nodes.append(a + h * (x + 1.0))
        weights.append(h * w)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class QuadratureRule:
    """Composite tensor Gauss-Legendre rule, panels split at the given breakpoints.

    With ``order`` nodes per panel the rule integrates polynomials of degree
    ``2 * order - 1`` per axis exactly against Lebesgue measure.
    """

    window: Window
    order: int = DEFAULT_ORDER
    breaks: tuple = ()

    @cached_property
    def _rule(self):
        axes = []
        for i, (lo, hi) in enumerate(self.window.bounds):
            b = self.breaks[i] if i < len(self.breaks) else ()
            axes.append(_axis_rule(float(lo), float(hi), self.order, tuple(sorted(b))))
        if len(axes) == 1:
            return axes[0][0].reshape(-1, 1), axes[0][1]
        (x0, w0), (x1, w1) = axes
        X0, X1 = np.meshgrid(x0, x1, indexing="ij")
        nodes = np.column_stack([X0.ravel(), X1.ravel()])
        weights = np.outer(w0, w1).ravel()
        return nodes, weights

    @property
    def nodes(self) -> np.ndarray:
        return self._rule[0]

    @property
    def weights(self) -> np.ndarray:
        return self._rule[1]

    @property
    def exact_degree(self) -> int:
        return 2 * self.order - 1


def _breaks_of(*fns):
    dims = fns[0].dim
    acc = [set() for _ in range(dims)]
    for f in fns:
        for i, b in enumerate(f.breakpoints()):
            acc[i] |= set(b)
    return tuple(tuple(sorted(s)) for s in acc)


# ---------------------------------------------------------------------------
# intensity measures


@dataclass(frozen=True)
class IntensityMeasure:
    """sigma(dx) = density(x) dx restricted to a window."""

    window: Window
    density: TestFunction = None
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.density is None:
            object.__setattr__(self, "density", constant(Fraction(1), self.window.dim))
        if self.density.dim != self.window.dim:
            raise DomainError("density dimension does not match the window")
        vals = self.density(self.rule().nodes)
        if not np.all(vals > 0):
            raise DomainError("density must be strictly positive on the window")
        if not self.mass > 0:
            raise DomainError("total mass must be positive")

    @classmethod
    def lebesgue(cls, window: Window, scale=Fraction(1), order=DEFAULT_ORDER):
        return cls(window, constant(scale, window.dim), order)

    def rule(self, *fns) -> QuadratureRule:
        return QuadratureRule(self.window, self.order, _breaks_of(self.density, *fns))

    @cached_property
    def mass(self) -> float:
        return self.integrate(constant(1.0, self.window.dim))

    def nodes_weights(self, *fns):
        """Nodes and density-weighted weights for integrating functions with these breakpoints."""
        r = self.rule(*fns)
        return r.nodes, r.weights * self.density(r.nodes)

    def integrate(self, f) -> float:
        if not isinstance(f, TestFunction):
            f = constant(f, self.window.dim)
        x, w = self.nodes_weights(f)
        return float(np.dot(w, f(x)))

    def inner(self, f, g) -> float:
        """(f, g) in L2(sigma)."""
        x, w = self.nodes_weights(f, g)
        return float(np.dot(w, f(x) * g(x)))

    def norm(self, f) -> float:
        return math.sqrt(max(self.inner(f, f), 0.0))

    @property
    def is_exact(self) -> bool:
        return self.window.is_exact and isinstance(self.density, Polynomial) and self.density.is_exact

    def integrate_exact(self, f: Polynomial) -> Fraction:
        """Exact rational integral of a rational polynomial (needs exact window and density)."""
        if not (self.is_exact and isinstance(f, Polynomial) and f.is_exact):
            raise DomainError("exact integration needs rational polynomial integrand, density and window")
        return (f * self.density).integrate_box(self.window)

    @cached_property
    def _envelope(self):
        lo, hi = self.density.bounds(self.window)
        return hi

    @cached_property
    def is_uniform(self) -> bool:
        return isinstance(self.density, Polynomial) and self.density.constant_value is not None

    def sample_positions(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` i.i.d. points with density proportional to ``density`` (rejection sampling)."""
        lo, hi = self.window.lower, self.window.upper
        d = self.window.dim
        if self.is_uniform:
            return lo + (hi - lo) * rng.random((count, d))
        out = np.empty((0, d))
        env = self._envelope
        while out.shape[0] < count:
            need = count - out.shape[0]
            m = max(16, int(need * 1.3) + 16)
            cand = lo + (hi - lo) * rng.random((m, d))
            keep = rng.random(m) * env < self.density(cand)
            out = np.vstack([out, cand[keep]])
        return out[:count]


def integrate(f, sigma: IntensityMeasure) -> float:
    return sigma.integrate(f)


def perturb_sigma(sigma: IntensityMeasure, eta: TestFunction) -> IntensityMeasure:
    """sigma_eta with density (1 + eta) * density."""
    lo, _ = eta.bounds(sigma.window)
    if not lo > -1.0:
        raise DomainError(f"perturbation needs eta > -1, range starts at {lo}")
    if isinstance(eta, Polynomial) and eta.is_zero:
        return sigma
    return IntensityMeasure(sigma.window, (1 + eta) * sigma.density, sigma.order)


# ---------------------------------------------------------------------------
# Levy measures


class LevyMeasure:
    """Jump-size measure rho on R without atom at 0."""

    is_finite: bool = True

    @property
    def mass(self):
        raise NotImplementedError

    def sample_marks(self, count, rng):
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteDiscrete(LevyMeasure):
    """rho = sum_i w_i eps_{s_i}."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(s), float(w)) for s, w in self.atoms)
        if not atoms:
            raise DomainError("a discrete Levy measure needs at least one atom")
        for s, w in atoms:
            if s == 0:
                raise DomainError("rho must not charge s = 0")
            if not w > 0:
                raise DomainError("atom weights must be positive")
        if len({s for s, _ in atoms}) != len(atoms):
            raise DomainError("repeated jump size")
        object.__setattr__(self, "atoms", tuple(sorted(atoms)))

    @classmethod
    def unit(cls):
        """rho = eps_1, the plain Poisson case."""
        return cls(((1.0, 1.0),))

    @classmethod
    def telegraph(cls):
        return cls(((-1.0, 0.5), (1.0, 0.5)))

    @property
    def jumps(self):
        return np.array([s for s, _ in self.atoms])

    @property
    def weights(self):
        return np.array([w for _, w in self.atoms])

    @property
    def mass(self):
        return float(np.sum(self.weights))

    def sample_marks(self, count, rng):
        if len(self.atoms) == 1:
            return np.full(count, self.atoms[0][0])
        p = self.weights / self.weights.sum()
        return self.jumps[rng.choice(len(self.atoms), size=count, p=p)]

    def pieces(self):
        """Independent components for superposition sampling: (mass, mark sampler)."""
        return [(w, (lambda n, rng, s=s: np.full(n, s))) for s, w in self.atoms]

    def integrate_marks(self, g):
        """sum_i w_i g(s_i) for vectorised g."""
        return float(np.dot(self.weights, g(self.jumps)))

    def __str__(self):
        if self == FiniteDiscrete.unit():
            return "poisson"
        if self == FiniteDiscrete.telegraph():
            return "telegraph"
        return "discrete(" + ", ".join(f"{s!r}:{w!r}" for s, w in self.atoms) + ")"


_GAMMA_SMAX = 50.0
_GAMMA_TABLE = 1024


@dataclass(frozen=True)
class GammaLevy(LevyMeasure):
    """rho(ds) = 1{s >= eps} e^{-s}/s ds on (0, inf).

    ``epsilon = 0`` stands for the untruncated measure: infinite mass, not
    sampleable, but moments, the Kolmogorov characteristic and the
    annihilation quadrature are all defined.
    """

    epsilon: float = 1e-3

    def __post_init__(self):
        e = float(self.epsilon)
        if not (0.0 <= e < 1.0):
            raise DomainError("Gamma truncation must lie in [0, 1)")
        object.__setattr__(self, "epsilon", e)

    @property
    def is_finite(self):
        return self.epsilon > 0

    @property
    def truncated_mass(self):
        return float(special.exp1(self.epsilon)) if self.epsilon > 0 else DIVERGES

    @property
    def mass(self):
        return self.truncated_mass

    @cached_property
    def _inverse_table(self):
        # tail probability T(s) = E1(s)/E1(eps); tabulate log s against y = -log T(s)
        s = np.geomspace(self.epsilon, _GAMMA_SMAX, _GAMMA_TABLE)
        y = -(np.log(special.exp1(s)) - math.log(special.exp1(self.epsilon)))
        y[0] = 0.0
        return PchipInterpolator(y, np.log(s), extrapolate=True), float(y[-1])

    def _invert_tail(self, y):
        """Solve -log(E1(s)/E1(eps)) = y for s (table guess plus two Newton steps in log s)."""
        interp, ymax = self._inverse_table
        logs = interp(np.minimum(y, ymax))
        le = math.log(special.exp1(self.epsilon))
        for _ in range(2):
            s = np.exp(logs)
            e1 = special.exp1(s)
            g = np.log(e1) - le + y
            # d/dlog s of log E1(s) = -e^{-s}/E1(s)
            dg = -np.exp(-s) / e1
            logs = logs - g / dg
        return np.maximum(np.exp(logs), self.epsilon)

    def sample_marks(self, count, rng, lo=None, hi=None):
        """Marks i.i.d. from rho restricted to [lo, hi) (defaults: the whole support)."""
        if self.epsilon <= 0:
            raise DomainError("cannot sample the untruncated Gamma measure")
        le = math.log(special.exp1(self.epsilon))
        ylo = 0.0 if lo is None else -(math.log(special.exp1(lo)) - le)
        yhi = math.inf if hi is None else -(math.log(special.exp1(hi)) - le)
        u = rng.random(count)
        # T uniform on [T(hi), T(lo)] -> y = -log T
        tlo, thi = math.exp(-ylo), (0.0 if math.isinf(yhi) else math.exp(-yhi))
        t = thi + (tlo - thi) * (1.0 - u)
        return self._invert_tail(-np.log(t))

    def pieces(self):
        """Split at s = 1 into two independent Poisson components."""
        if self.epsilon <= 0:
            raise DomainError("cannot sample the untruncated Gamma measure")
        if self.epsilon >= 1.0:
            return [(self.mass, self.sample_marks)]
        m_low = float(special.exp1(self.epsilon) - special.exp1(1.0))
        m_high = float(special.exp1(1.0))
        return [
            (m_low, lambda n, rng: self.sample_marks(n, rng, None, 1.0)),
            (m_high, lambda n, rng: self.sample_marks(n, rng, 1.0, None)),
        ]

    def __str__(self):
        return f"gamma({self.epsilon!r})"


def kolmogorov_characteristic(rho: LevyMeasure, u):
    """psi_rho(u) = int (e^{su} - 1) rho(ds)."""
    u_arr = np.asarray(u, dtype=float)
    if isinstance(rho, FiniteDiscrete):
        out = np.expm1(np.multiply.outer(u_arr, rho.jumps)) @ rho.weights
    else:
        if np.any(u_arr >= 1.0):
            raise DomainError("Gamma characteristic needs u < 1")
        if rho.epsilon == 0:
            out = -np.log1p(-u_arr)
        else:
            # int_eps^inf (e^{-s(1-u)} - e^{-s})/s ds = E1(eps(1-u)) - E1(eps)
            out = special.exp1(rho.epsilon * (1.0 - u_arr)) - special.exp1(rho.epsilon)
    return float(out) if np.ndim(out) == 0 else out


def levy_moment(rho: LevyMeasure, n: int, absolute=True, truncated=True):
    """int |s|^n rho(ds) (or the signed moment); n = 0 gives the mass.

    For Gamma, ``truncated=False`` uses the untruncated measure: the mass is
    ``DIVERGES`` and m_n = (n-1)!.
    """
    if n < 0:
        raise ValueError("moment order must be nonnegative")
    if isinstance(rho, FiniteDiscrete):
        s = np.abs(rho.jumps) if absolute else rho.jumps
        return float(np.dot(rho.weights, s ** n))
    eps = rho.epsilon if truncated else 0.0
    if n == 0:
        return float(special.exp1(eps)) if eps > 0 else DIVERGES
    # int_eps^inf s^{n-1} e^{-s} ds = Gamma(n, eps)
    return float(special.gamma(n) * special.gammaincc(n, eps))


def analyticity_constant(rho: LevyMeasure, nmax=10, truncated=True):
    """Smallest C with m_n <= C^n n! for 1 <= n <= nmax, and whether the bound holds."""
    ms = [levy_moment(rho, n, True, truncated) for n in range(1, nmax + 1)]
    c = max((m / math.factorial(n)) ** (1.0 / n) for n, m in enumerate(ms, start=1))
    holds = all(m <= c ** n * math.factorial(n) * (1 + 1e-12) for n, m in enumerate(ms, start=1))
    return {"C": c, "holds": holds, "moments": ms}


def laplace(kind: str, phi: TestFunction, sigma: IntensityMeasure, rho: LevyMeasure | None = None) -> float:
    """Closed-form Laplace functional E exp<., phi>."""
    if kind == "poisson":
        x, w = sigma.nodes_weights(phi)
        return math.exp(float(np.dot(w, np.expm1(phi(x)))))
    if kind == "compound":
        if rho is None:
            raise ValueError("compound kind needs rho")
        x, w = sigma.nodes_weights(phi)
        return math.exp(float(np.dot(w, kolmogorov_characteristic(rho, phi(x)))))
    if kind == "gamma":
        _, hi = phi.bounds(sigma.window)
        if not hi < 1.0:
            raise DomainError("Gamma Laplace transform needs sup phi < 1")
        return math.exp(-sigma.integrate(log1m(phi)))
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# samplers (batch forms are the primitive; single-sample forms wrap them)


def sample_poisson_batch(sigma: IntensityMeasure, size: int, rng) -> AtomBatch:
    counts = rng.poisson(sigma.mass, size=size)
    pts = sigma.sample_positions(int(counts.sum()), rng)
    owner = np.repeat(np.arange(size), counts)
    return AtomBatch(pts, owner, size, None, sigma.window, "configuration")


def sample_marked_poisson_batch(rho: LevyMeasure, sigma: IntensityMeasure, size: int, rng) -> AtomBatch:
    if not rho.is_finite:
        raise DomainError("marked sampling needs a finite Levy measure")
    counts = rng.poisson(rho.mass * sigma.mass, size=size)
    total = int(counts.sum())
    pts = sigma.sample_positions(total, rng)
    marks = rho.sample_marks(total, rng)
    owner = np.repeat(np.arange(size), counts)
    return AtomBatch(pts, owner, size, marks, sigma.window, "marked")


def sample_compound_poisson_batch(rho, sigma, size, rng, method="marked") -> AtomBatch:
    """Compound-Poisson samples as weighted atoms.

    ``method="marked"`` pushes a marked Poisson sample through Sigma;
    ``method="superposition"`` builds the same law independently as a sum of
    Poisson components, one per piece of rho (each atom of a discrete rho, or
    the two halves of the Gamma measure split at s = 1).
    """
    if method == "marked":
        b = sample_marked_poisson_batch(rho, sigma, size, rng)
        return AtomBatch(b.points, b.owner, size, b.values, sigma.window, "compound")
    if method != "superposition":
        raise ValueError(f"unknown method {method!r}")
    pts, vals, owner = [], [], []
    for mass, draw in rho.pieces():
        counts = rng.poisson(mass * sigma.mass, size=size)
        total = int(counts.sum())
        pts.append(sigma.sample_positions(total, rng))
        vals.append(draw(total, rng))
        owner.append(np.repeat(np.arange(size), counts))
    owner = np.concatenate(owner)
    order = np.argsort(owner, kind="stable")
    return AtomBatch(np.vstack(pts)[order], owner[order], size, np.concatenate(vals)[order], sigma.window, "compound")


def sample_poisson(sigma: IntensityMeasure, rng) -> Configuration:
    return sample_poisson_batch(sigma, 1, rng).sample(0)


def sample_marked_poisson(rho, sigma, rng) -> MarkedConfiguration:
    return sample_marked_poisson_batch(rho, sigma, 1, rng).sample(0)


def sample_compound_poisson(rho, sigma, rng, method="marked") -> DiscreteMeasure:
    if method == "marked":
        return sigma_map(sample_marked_poisson(rho, sigma, rng))
    return sample_compound_poisson_batch(rho, sigma, 1, rng, method).sample(0)
