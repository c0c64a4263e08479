"""Compound-Poisson calculus transported through the Sigma map.

A compound-Poisson sample omega = sum s_x eps_x is the Sigma image of a
marked Poisson configuration {(s_x, x)}.  Cylinder functions of omega
(``charlier.CylinderFunction`` evaluated with weighted pairings) are pulled
back by U_Sigma h = h o Sigma.  For rho = eps_1 every formula below performs
exactly the same floating-point operations as its Poisson counterpart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .charlier import CylinderFunction, _nudge, charlier_from_symbols, _check_order
from .configuration import DiscreteMeasure, MarkedConfiguration, sigma_inverse, sigma_map
from .errors import DIVERGES, Diverges, DomainError
from .functions import TestFunction
from .measures import FiniteDiscrete, GammaLevy, LevyMeasure, levy_moment
from .mc import identity_report, run_batches
from .measures import sample_compound_poisson_batch, sample_marked_poisson_batch

GL_ORDER_SMALL = 64
LAGUERRE_ORDER = 64


@dataclass(frozen=True)
class MarkedDirection:
    """phi_hat(s, x) = p(s) phi(x) with p(s) = sum_k p_k s^k."""

    p: tuple
    phi: TestFunction

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(c) for c in self.p))

    @classmethod
    def unit(cls, phi):
        """p = 1."""
        return cls((1.0,), phi)

    @classmethod
    def linear(cls, phi):
        """p(s) = s, the direction that reproduces <omega, phi>."""
        return cls((0.0, 1.0), phi)

    def mark_factor(self, s):
        s = np.asarray(s, dtype=float)
        if len(self.p) == 1:
            return np.full(s.shape, self.p[0])
        return np.polynomial.polynomial.polyval(s, self.p)

    def __call__(self, marks, points):
        return self.mark_factor(marks) * self.phi(points)


def mark_mean(p: MarkedDirection, rho: LevyMeasure):
    """<p>_rho; DIVERGES when p_0 != 0 and rho is infinite."""
    if isinstance(rho, FiniteDiscrete):
        return float(np.dot(rho.weights, p.mark_factor(rho.jumps)))
    total = 0.0
    for k, c in enumerate(p.p):
        if c == 0:
            continue
        mk = levy_moment(rho, k, absolute=False, truncated=True)
        if isinstance(mk, Diverges):
            return DIVERGES
        total += c * mk
    return total


# ---------------------------------------------------------------------------
# U_Sigma


def u_sigma(h):
    """U_Sigma h: a function on marked configurations."""

    def fhat(gh: MarkedConfiguration):
        return h(sigma_map(gh))

    return fhat


def u_sigma_inverse(fhat):
    def h(om: DiscreteMeasure):
        return fhat(sigma_inverse(om))

    return h


def marked_pairings(h: CylinderFunction, gh: MarkedConfiguration) -> np.ndarray:
    """Arguments of h at Sigma(gh) computed on the marked side as <gh, s phi_i(x)>."""
    return np.array([gh.pairing(lambda s, x, d=d: s * d(x)) for d in h.directions], dtype=float)


# ---------------------------------------------------------------------------
# operators


@lru_cache(maxsize=None)
def _gamma_s_rule(eps):
    """Nodes/weights for int_{eps}^{inf} g(s) e^{-s}/s ds, split at s = 1."""
    x, w = np.polynomial.legendre.leggauss(GL_ORDER_SMALL)
    a, b = eps, 1.0
    s_small = a + 0.5 * (b - a) * (x + 1.0)
    w_small = 0.5 * (b - a) * w * np.exp(-s_small) / s_small
    t, wl = special.roots_laguerre(LAGUERRE_ORDER)
    s_big = 1.0 + t
    w_big = wl * math.exp(-1.0) / s_big
    return np.concatenate([s_small, s_big]), np.concatenate([w_small, w_big])


def mark_rule(rho: LevyMeasure):
    """(jumps, weights) so that int g d rho ~ sum weights * g(jumps)."""
    if isinstance(rho, FiniteDiscrete):
        return rho.jumps, rho.weights
    return _gamma_s_rule(rho.epsilon)


def _annihilation(h: CylinderFunction, direction: MarkedDirection, om, rho, sigma) -> float:
    phi = direction.phi
    x, w = sigma.nodes_weights(phi, *h.directions)
    x = _nudge(x, om.points)
    wphi = w * phi(x)
    jumps, jw = mark_rule(rho)
    coef = jw * direction.mark_factor(jumps)
    u = h.pairings(om)
    Phi = h.dir_values(x)
    # diffs[q, i] = h(om + s_i eps_{x_q}) - h(om)
    shifted = h.F(u[None, None, :] + jumps[None, :, None] * Phi[:, None, :])
    diffs = shifted - h.F(u)
    return float(np.dot(wphi, diffs @ coef))


def cp_annihilation(h: CylinderFunction, direction: MarkedDirection, om, rho, sigma) -> float:
    """int int (h(om + s eps_x) - h(om)) p(s) phi(x) rho(ds) sigma(dx)."""
    if not rho.is_finite and direction.p and direction.p[0] != 0:
        raise DomainError("p_0 must vanish when rho has infinite mass")
    return _annihilation(h, direction, om, rho, sigma)


def cp_creation(g: CylinderFunction, direction: MarkedDirection, om, rho, sigma):
    """sum_atoms g(om - s eps_x) p(s) phi(x) - g(om) <p>_rho <phi>_sigma."""
    pm = mark_mean(direction, rho)
    if isinstance(pm, Diverges):
        return DIVERGES
    phi = direction.phi
    mean = pm * sigma.integrate(phi)
    u = g.pairings(om)
    if len(om):
        s = om.weights
        terms = g.F(u[None, :] - s[:, None] * g.dir_values(om.points)) * (direction.mark_factor(s) * phi(om.points))
        first = float(np.sum(terms))
    else:
        first = 0.0
    return first - float(g.F(u)) * mean


def cp_charlier_eval(om, direction: MarkedDirection, n: int, rho, sigma):
    """Charlier kernel of the marked space at Sigma^{-1}(om) in direction p(s) phi(x)."""
    _check_order(n)
    pm = mark_mean(direction, rho)
    if isinstance(pm, Diverges):
        return DIVERGES
    if n == 0:
        return 1.0
    vals = direction.mark_factor(om.weights) * direction.phi(om.points)
    S = [float(np.sum(vals ** k)) if len(om) else 0.0 for k in range(1, n + 1)]
    return float(charlier_from_symbols(S, pm * sigma.integrate(direction.phi), n))


def cp_charlier_eval_batch(batch, direction: MarkedDirection, n, rho, sigma):
    _check_order(n)
    pm = mark_mean(direction, rho)
    if isinstance(pm, Diverges):
        return DIVERGES
    if n == 0:
        return np.ones(batch.size)
    vals = direction.mark_factor(batch.values) * direction.phi(batch.points)
    S, p = [], np.ones_like(vals)
    for _ in range(n):
        p = p * vals
        S.append(batch.reduce_sum(p))
    return charlier_from_symbols(S, pm * sigma.integrate(direction.phi), n)


def cp_annihilation_batch(h: CylinderFunction, direction, batch, rho, sigma) -> np.ndarray:
    phi = direction.phi
    x, w = sigma.nodes_weights(phi, *h.directions)
    wphi = w * phi(x)
    jumps, jw = mark_rule(rho)
    coef = jw * direction.mark_factor(jumps)
    U = h.pairings_batch(batch)
    Phi = h.dir_values(x)
    base = h.F(U)
    out = np.zeros(batch.size)
    for q in range(x.shape[0]):
        shifted = h.F(U[:, None, :] + jumps[None, :, None] * Phi[q][None, None, :])
        out += wphi[q] * ((shifted - base[:, None]) @ coef)
    return out


def cp_creation_batch(g: CylinderFunction, direction, batch, rho, sigma) -> np.ndarray:
    pm = mark_mean(direction, rho)
    if isinstance(pm, Diverges):
        raise DomainError("creation term diverges for this direction and rho")
    phi = direction.phi
    U = g.pairings_batch(batch)
    s = batch.values
    per_atom = g.F(U[batch.owner] - s[:, None] * g.dir_values(batch.points)) * (direction.mark_factor(s) * phi(batch.points))
    return batch.reduce_sum(per_atom) - g.F(U) * (pm * sigma.integrate(phi))


# ---------------------------------------------------------------------------
# Monte Carlo checks


def usigma_isometry_check(h: CylinderFunction, rho, sigma, samples, seed, key=(), threads=1) -> dict:
    """||h||^2 under direct compound-Poisson sampling versus ||U_Sigma h||^2 under marked sampling."""

    def direct(rng, size):
        b = sample_compound_poisson_batch(rho, sigma, size, rng, method="superposition")
        return h.eval_batch(b) ** 2

    def transported(rng, size):
        b = sample_marked_poisson_batch(rho, sigma, size, rng)
        # <Sigma(gh), phi_i> evaluated as <gh, s phi_i(x)>
        U = np.column_stack([b.reduce_sum(b.values * d(b.points)) for d in h.directions]) if h.directions else np.zeros((size, 0))
        return h.F(U) ** 2

    L = run_batches(direct, samples, seed, tuple(key) + (0,), threads=threads)
    R = run_batches(transported, samples, seed, tuple(key) + (1,), threads=threads)
    (l, ls), (r, rs) = L.scalar(), R.scalar()
    return identity_report("usigma-isometry", l, r, ls, rs, rho=str(rho), samples=samples)


def cp_adjoint_check(h, g, direction, rho, sigma, samples, seed, key=(), threads=1) -> dict:
    """(grad^CP h, g) versus (h, (grad^CP)^* g) in L2 of the compound-Poisson measure."""

    def lhs(rng, size):
        b = sample_compound_poisson_batch(rho, sigma, size, rng)
        return cp_annihilation_batch(h, direction, b, rho, sigma) * g.eval_batch(b)

    def rhs(rng, size):
        b = sample_compound_poisson_batch(rho, sigma, size, rng)
        return h.eval_batch(b) * cp_creation_batch(g, direction, b, rho, sigma)

    L = run_batches(lhs, samples, seed, tuple(key) + (0,), threads=threads)
    R = run_batches(rhs, samples, seed, tuple(key) + (1,), threads=threads)
    (l, ls), (r, rs) = L.scalar(), R.scalar()
    return identity_report("cp-adjointness", l, r, ls, rs, rho=str(rho), samples=samples)


def cp_orthogonality_mc(direction, other, n, m, rho, sigma, samples, seed, key=(), threads=1) -> dict:
    """E[cp_charlier_n cp_charlier_m] against delta_{nm} n! (phi_hat, psi_hat)^n in L2(rho x sigma)."""
    jumps, jw = mark_rule(rho)
    mark_inner = float(np.dot(jw, direction.mark_factor(jumps) * other.mark_factor(jumps)))
    expected = math.factorial(n) * (mark_inner * sigma.inner(direction.phi, other.phi)) ** n if n == m else 0.0

    def fn(rng, size):
        b = sample_compound_poisson_batch(rho, sigma, size, rng)
        return cp_charlier_eval_batch(b, direction, n, rho, sigma) * cp_charlier_eval_batch(b, other, m, rho, sigma)

    est = run_batches(fn, samples, seed, key, threads=threads)
    v, se = est.scalar()
    return identity_report(f"cp-charlier-orth n={n} m={m}", v, expected, se, 0.0, rho=str(rho), samples=samples)
