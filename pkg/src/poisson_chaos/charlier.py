"""Poisson-side calculus: normalized exponentials, Charlier kernels, gradient and creation.

Functions of a configuration are represented by cylinder functions
``F(<gamma, phi_1>, ..., <gamma, phi_N>)``.  Adding an atom at ``x`` shifts
the arguments by ``phi_i(x)``, which gives exact vectorised formulas for the
difference gradient and the creation operator; the generic paths, which
rebuild configurations atom by atom, are kept as an independent route.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .configuration import AtomBatch, Configuration
from .errors import DomainError, SizeError
from .functions import TestFunction, log1p
from .mc import identity_report, run_batches
from .measures import IntensityMeasure, perturb_sigma, sample_poisson_batch
from .series import TruncatedSeries, enumerate_set_partitions, series_exp

MAX_ORDER = 10


# ---------------------------------------------------------------------------
# cylinder functions


class CylinderFunction:
    """F(<m, phi_1>, ..., <m, phi_N>) for an atomic measure m."""

    directions: tuple = ()

    def F(self, U):
        raise NotImplementedError

    def derivative_bound(self, center, radius):
        """Upper bounds on |dF/du_i| over the box ``center +- radius``."""
        raise NotImplementedError

    def pairings(self, m) -> np.ndarray:
        return np.array([m.pairing(d) for d in self.directions], dtype=float)

    def pairings_batch(self, batch: AtomBatch) -> np.ndarray:
        if not self.directions:
            return np.zeros((batch.size, 0))
        return np.column_stack([batch.pairing(d) for d in self.directions])

    def dir_values(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if not self.directions:
            return np.zeros((pts.shape[0], 0))
        return np.column_stack([d(pts) for d in self.directions])

    def __call__(self, m) -> float:
        return float(self.F(self.pairings(m)))

    def eval_batch(self, batch) -> np.ndarray:
        return self.F(self.pairings_batch(batch))

    def lagrange_constant(self, m, window, smax) -> float:
        """C with |h(m + s eps_x) - h(m)| <= C |s| for |s| <= smax and x in the window."""
        u = self.pairings(m)
        sups = np.array([d.sup_abs(window) for d in self.directions])
        return float(np.dot(self.derivative_bound(u, smax * sups), sups))


class PolynomialCylinder(CylinderFunction):
    """F(u) = sum_e c_e u^e."""

    def __init__(self, directions, terms):
        self.directions = tuple(directions)
        self.terms = {tuple(e): float(c) for e, c in dict(terms).items()}
        for e in self.terms:
            if len(e) != len(self.directions):
                raise ValueError("exponent length must match the number of directions")

    def F(self, U):
        U = np.asarray(U, dtype=float)
        out = np.zeros(U.shape[:-1])
        for e, c in self.terms.items():
            t = np.full(U.shape[:-1], c)
            for i, k in enumerate(e):
                if k:
                    t = t * U[..., i] ** k
            out = out + t
        return out

    def derivative_bound(self, center, radius):
        a = np.abs(np.asarray(center, dtype=float)) + np.asarray(radius, dtype=float)
        out = np.zeros(len(self.directions))
        for e, c in self.terms.items():
            for i, k in enumerate(e):
                if k:
                    t = abs(c) * k
                    for j, kj in enumerate(e):
                        t *= a[j] ** (kj - (1 if j == i else 0))
                    out[i] += t
        return out


class ExpAffineCylinder(CylinderFunction):
    """F(u) = scale * exp(offset + a . u)."""

    def __init__(self, directions, coeffs, offset=0.0, scale=1.0):
        self.directions = tuple(directions)
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(len(self.directions))
        self.offset = float(offset)
        self.scale = float(scale)

    def F(self, U):
        U = np.asarray(U, dtype=float)
        # explicit left-to-right sum keeps results independent of array layout
        arg = np.full(U.shape[:-1], self.offset)
        for i, a in enumerate(self.coeffs):
            arg = arg + a * U[..., i]
        return self.scale * np.exp(arg)

    def derivative_bound(self, center, radius):
        top = self.offset + float(np.dot(self.coeffs, center)) + float(np.dot(np.abs(self.coeffs), radius))
        return abs(self.scale) * np.abs(self.coeffs) * math.exp(top)


def constant_cylinder(c=1.0) -> PolynomialCylinder:
    return PolynomialCylinder((), {(): c})


def linear_cylinder(psi: TestFunction, c=1.0) -> PolynomialCylinder:
    """m -> c <m, psi>."""
    return PolynomialCylinder((psi,), {(1,): c})


def exp_cylinder(psi: TestFunction, a=1.0, offset=0.0) -> ExpAffineCylinder:
    """m -> exp(offset + a <m, psi>)."""
    return ExpAffineCylinder((psi,), (a,), offset)


def normalized_exp_cylinder(psi: TestFunction, sigma: IntensityMeasure) -> ExpAffineCylinder:
    """The normalized exponential written as exp(<gamma, log(1+psi)> - <psi>_sigma)."""
    _check_above_minus_one(psi, sigma)
    return ExpAffineCylinder((log1p(psi),), (1.0,), -sigma.integrate(psi))


def _check_above_minus_one(phi, sigma):
    lo, _ = phi.bounds(sigma.window)
    if not lo > -1.0:
        raise DomainError(f"need phi > -1 on the window, range starts at {lo}")


# ---------------------------------------------------------------------------
# normalized exponential and Charlier kernels


def normalized_exp_poisson(phi: TestFunction, gamma: Configuration, sigma: IntensityMeasure) -> float:
    """e^{-<phi>_sigma} prod_{x in gamma} (1 + phi(x))."""
    _check_above_minus_one(phi, sigma)
    return math.exp(-sigma.integrate(phi)) * float(np.prod(1.0 + phi(gamma.points)))


def normalized_exp_poisson_batch(phi, batch: AtomBatch, sigma) -> np.ndarray:
    _check_above_minus_one(phi, sigma)
    return math.exp(-sigma.integrate(phi)) * batch.reduce_prod(1.0 + phi(batch.points))


def _check_order(n):
    if n < 0:
        raise ValueError("order must be nonnegative")
    if n > MAX_ORDER:
        raise SizeError(f"polynomial order is capped at {MAX_ORDER}")


def charlier_from_symbols(S, mean, n):
    """n! [t^n] exp(sum_k (-1)^{k+1} S_k t^k / k - t mean) with S = (S_1, ..., S_n)."""
    if n == 0:
        return np.ones_like(np.asarray(S[0], dtype=float)) if len(S) else 1.0
    zero = np.zeros_like(np.asarray(S[0], dtype=float))
    coeffs = [zero, S[0] - mean]
    for k in range(2, n + 1):
        coeffs.append((-1) ** (k + 1) * S[k - 1] / k)
    g = series_exp(TruncatedSeries(tuple(coeffs)))
    return math.factorial(n) * g[n]


def charlier_symbols(gamma, phi, n, sigma):
    S = [gamma.power_sum(phi, k) for k in range(1, n + 1)]
    return S, sigma.integrate(phi)


def charlier_eval(gamma, phi: TestFunction, n: int, sigma: IntensityMeasure) -> float:
    """<C_n(gamma), phi^{(x)n}> via the Taylor coefficients of the normalized exponential."""
    _check_order(n)
    if n == 0:
        return 1.0
    S, mean = charlier_symbols(gamma, phi, n, sigma)
    return float(charlier_from_symbols(S, mean, n))


def charlier_eval_batch(batch: AtomBatch, phi, n, sigma) -> np.ndarray:
    _check_order(n)
    if n == 0:
        return np.ones(batch.size)
    S = batch.power_sums(phi, n, weighted=False)
    return charlier_from_symbols(list(S), sigma.integrate(phi), n)


def _block_pairings(vals_per_factor, reduce):
    """Pairings of the product of the factors in each index subset, keyed by subset bitmask."""
    n = len(vals_per_factor)
    out = {}
    for mask in range(1, 1 << n):
        prod = None
        for j in range(n):
            if mask >> j & 1:
                prod = vals_per_factor[j] if prod is None else prod * vals_per_factor[j]
        out[mask] = reduce(prod)
    return out


def _block_integrals(fs, sigma):
    n = len(fs)
    x, w = sigma.nodes_weights(*fs)
    vals = [f(x) for f in fs]
    return _block_pairings(vals, lambda v: float(np.dot(w, v)))


def _mask(block):
    m = 0
    for j in block:
        m |= 1 << j
    return m


def charlier_kernel_from_blocks(pair, integ, n, size_like=1.0):
    """sum over set partitions of prod over blocks of
    (-1)^{|B|+1} (|B|-1)! <gamma, prod_B f> - [|B| = 1] <f>_sigma."""
    total = 0.0 * size_like
    for p in enumerate_set_partitions(n):
        term = 1.0
        for b in p.blocks:
            k = len(b)
            mk = _mask(b)
            lb = (-1) ** (k + 1) * math.factorial(k - 1) * pair[mk]
            if k == 1:
                lb = lb - integ[mk]
            term = term * lb
        total = total + term
    return total


def charlier_kernel_eval(gamma, fs, sigma) -> float:
    """<C_n(gamma), f_1 (x) ... (x) f_n> for a factorised kernel (symmetrised implicitly)."""
    n = len(fs)
    _check_order(n)
    if n == 0:
        return 1.0
    pts = gamma.points
    pair = _block_pairings([f(pts) for f in fs], lambda v: float(np.sum(v)))
    return float(charlier_kernel_from_blocks(pair, _block_integrals(fs, sigma), n))


def charlier_kernel_eval_batch(batch: AtomBatch, fs, sigma) -> np.ndarray:
    n = len(fs)
    _check_order(n)
    if n == 0:
        return np.ones(batch.size)
    pair = _block_pairings([f(batch.points) for f in fs], batch.reduce_sum)
    return charlier_kernel_from_blocks(pair, _block_integrals(fs, sigma), n, np.zeros(batch.size))


# ---------------------------------------------------------------------------
# gradient, directional gradient, creation


def poisson_gradient(f, gamma: Configuration, x) -> float:
    """f(gamma + eps_x) - f(gamma); AtomClash if x is already an atom."""
    return f(gamma.add_atom(x)) - f(gamma)


def _nudge(nodes, atoms):
    """Shift quadrature nodes that coincide with atoms by one ulp along the first axis."""
    if atoms.shape[0] == 0:
        return nodes
    hit = (nodes[:, None, :] == atoms[None, :, :]).all(axis=2).any(axis=1)
    if not hit.any():
        return nodes
    nodes = nodes.copy()
    nodes[hit, 0] = np.nextafter(nodes[hit, 0], np.inf)
    return nodes


def directional_gradient(f, phi: TestFunction, gamma, sigma: IntensityMeasure, generic=False, aux=()) -> float:
    """int (f(gamma + eps_x) - f(gamma)) phi(x) sigma(dx) by quadrature.

    ``aux``: test functions whose breakpoints the quadrature should respect
    when ``f`` is an arbitrary callable built from them.
    """
    dirs = f.directions if isinstance(f, CylinderFunction) else ()
    x, w = sigma.nodes_weights(phi, *dirs, *aux)
    x = _nudge(x, gamma.points)
    wphi = w * phi(x)
    if isinstance(f, CylinderFunction) and not generic:
        u = f.pairings(gamma)
        vals = f.F(u[None, :] + f.dir_values(x)) - f.F(u)
    else:
        base = f(gamma)
        vals = np.array([f(gamma.add_atom(xq)) - base for xq in x])
    return float(np.dot(wphi, vals))


def directional_gradient_batch(f: CylinderFunction, phi, batch: AtomBatch, sigma) -> np.ndarray:
    x, w = sigma.nodes_weights(phi, *f.directions)
    U = f.pairings_batch(batch)
    shifted = f.F(U[:, None, :] + f.dir_values(x)[None, :, :])
    return (shifted - f.F(U)[:, None]) @ (w * phi(x))


def creation_apply(g, phi: TestFunction, gamma, sigma: IntensityMeasure, generic=False) -> float:
    """sum_{x in gamma} g(gamma - eps_x) phi(x) - g(gamma) <phi>_sigma."""
    mean = sigma.integrate(phi)
    pts = gamma.points
    if isinstance(g, CylinderFunction) and not generic:
        u = g.pairings(gamma)
        first = float(np.sum(g.F(u[None, :] - g.dir_values(pts)) * phi(pts))) if len(gamma) else 0.0
        return first - float(g.F(u)) * mean
    first = sum(g(gamma.remove_atom(p)) * float(phi(p[None, :])[0]) for p in pts)
    return first - g(gamma) * mean


def creation_apply_batch(g: CylinderFunction, phi, batch: AtomBatch, sigma) -> np.ndarray:
    mean = sigma.integrate(phi)
    U = g.pairings_batch(batch)
    per_atom = g.F(U[batch.owner] - g.dir_values(batch.points)) * phi(batch.points)
    return batch.reduce_sum(per_atom) - g.F(U) * mean


def creation_iterate(n: int, phi: TestFunction, gamma, sigma: IntensityMeasure) -> float:
    """(creation operator)^n applied to the constant 1, evaluated at gamma.

    Each application uses the defining formula on sub-configurations of gamma;
    values of the previous iterate are memoised by the set of surviving atoms.
    """
    _check_order(n)
    vals = [float(v) for v in phi(gamma.points)] if len(gamma) else []
    mean = sigma.integrate(phi)
    N = len(vals)

    @lru_cache(maxsize=None)
    def it(k, mask):
        if k == 0:
            return 1.0
        s = 0.0
        for j in range(N):
            if mask >> j & 1:
                s += it(k - 1, mask & ~(1 << j)) * vals[j]
        return s - it(k - 1, mask) * mean

    return it(n, (1 << N) - 1)


# ---------------------------------------------------------------------------
# Monte Carlo identity checks


def mecke_check(phi, h: CylinderFunction | None, sigma, samples, seed, key=(), threads=1) -> dict:
    """E sum_{x in gamma} phi(x) h(gamma) versus E int phi(x) h(gamma + eps_x) sigma(dx)."""
    h = h if h is not None else constant_cylinder(1.0)
    x, w = sigma.nodes_weights(phi, *h.directions)
    wphi = w * phi(x)
    Phi = h.dir_values(x)

    def lhs(rng, size):
        b = sample_poisson_batch(sigma, size, rng)
        return b.pairing(phi) * h.eval_batch(b)

    def rhs(rng, size):
        b = sample_poisson_batch(sigma, size, rng)
        U = h.pairings_batch(b)
        return h.F(U[:, None, :] + Phi[None, :, :]) @ wphi

    L = run_batches(lhs, samples, seed, tuple(key) + (0,), threads=threads)
    R = run_batches(rhs, samples, seed, tuple(key) + (1,), threads=threads)
    (l, ls), (r, rs) = L.scalar(), R.scalar()
    return identity_report("mecke", l, r, ls, rs, samples=samples)


def rn_check(eta, F: CylinderFunction, sigma, samples, seed, key=(), threads=1) -> dict:
    """E_sigma[F e(eta)] versus E_{sigma_eta}[F]."""
    _check_above_minus_one(eta, sigma)
    sig_eta = perturb_sigma(sigma, eta)

    def lhs(rng, size):
        b = sample_poisson_batch(sigma, size, rng)
        return F.eval_batch(b) * normalized_exp_poisson_batch(eta, b, sigma)

    def rhs(rng, size):
        return F.eval_batch(sample_poisson_batch(sig_eta, size, rng))

    L = run_batches(lhs, samples, seed, tuple(key) + (0,), threads=threads)
    R = run_batches(rhs, samples, seed, tuple(key) + (1,), threads=threads)
    (l, ls), (r, rs) = L.scalar(), R.scalar()
    return identity_report("radon-nikodym", l, r, ls, rs, samples=samples)


def adjoint_check(f: CylinderFunction, g: CylinderFunction, phi, sigma, samples, seed, key=(), threads=1) -> dict:
    """(grad_phi f, g) versus (f, grad_phi^* g) in L2 of the Poisson measure."""

    def lhs(rng, size):
        b = sample_poisson_batch(sigma, size, rng)
        return directional_gradient_batch(f, phi, b, sigma) * g.eval_batch(b)

    def rhs(rng, size):
        b = sample_poisson_batch(sigma, size, rng)
        return f.eval_batch(b) * creation_apply_batch(g, phi, b, sigma)

    L = run_batches(lhs, samples, seed, tuple(key) + (0,), threads=threads)
    R = run_batches(rhs, samples, seed, tuple(key) + (1,), threads=threads)
    (l, ls), (r, rs) = L.scalar(), R.scalar()
    return identity_report("adjointness", l, r, ls, rs, samples=samples)


def charlier_orthogonality_mc(phi, psi, n, m, sigma, samples, seed, key=(), threads=1) -> dict:
    """MC of E[<C_n, phi^n><C_m, psi^m>] against delta_{nm} n! (phi, psi)^n."""
    if n > 5 or m > 5:
        raise SizeError("orthogonality checks are capped at order 5")
    expected = math.factorial(n) * sigma.inner(phi, psi) ** n if n == m else 0.0
    if n == 0 and m == 0:
        return identity_report(f"charlier-orth n={n} m={m}", 1.0, expected, n=n, m=m, samples=0)

    def fn(rng, size):
        b = sample_poisson_batch(sigma, size, rng)
        return charlier_eval_batch(b, phi, n, sigma) * charlier_eval_batch(b, psi, m, sigma)

    est = run_batches(fn, samples, seed, key, threads=threads)
    v, se = est.scalar()
    return identity_report(f"charlier-orth n={n} m={m}", v, expected, se, 0.0, n=n, m=m, samples=samples)


def coherent_pairing_check(psi, eta, sigma, samples, seed, phi=None, key=(), threads=1) -> dict:
    """E[e(psi) e(eta)] = exp((psi, eta)); with phi, E[grad_phi e(psi) . e(eta)] = (psi, phi) exp((psi, eta))."""
    e_psi = normalized_exp_cylinder(psi, sigma)
    target = math.exp(sigma.inner(psi, eta))
    if phi is not None:
        target *= sigma.inner(psi, phi)

    def fn(rng, size):
        b = sample_poisson_batch(sigma, size, rng)
        left = e_psi.eval_batch(b) if phi is None else directional_gradient_batch(e_psi, phi, b, sigma)
        return left * normalized_exp_poisson_batch(eta, b, sigma)

    est = run_batches(fn, samples, seed, key, threads=threads)
    v, se = est.scalar()
    return identity_report("coherent-pairing" if phi is None else "coherent-pairing-gradient", v, target, se, 0.0)
