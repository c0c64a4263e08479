"""Gamma-noise calculus: Laguerre kernels, the partition-weighted inner product,
the Gamma annihilation operator and the classical-Laguerre cross-check."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np
from scipy import special

from .charlier import _block_pairings, _check_order, _mask, CylinderFunction
from .compound import MarkedDirection, _annihilation
from .errors import DomainError, SizeError
from .functions import Indicator, Polynomial, TestFunction, log1m, ratio
from .mc import identity_report, run_batches
from .measures import GammaLevy, sample_compound_poisson_batch
from .series import (
    TruncatedSeries,
    enumerate_set_partitions,
    partition_types,
    series_exp,
    type_series_coefficient,
)

MAX_PARTITION_INNER = 8


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class RankDecomposedKernel:
    """sum_j c_j f_{j,1} (x) ... (x) f_{j,n}."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((c, tuple(fs)) for c, fs in self.terms)
        if not terms:
            raise ValueError("empty kernel")
        n = len(terms[0][1])
        if any(len(fs) != n for _, fs in terms):
            raise ValueError("all rank terms must have the same level")
        object.__setattr__(self, "terms", terms)

    @property
    def level(self) -> int:
        return len(self.terms[0][1])

    @classmethod
    def rank_one(cls, phi, n, coeff=1):
        return cls(((coeff, (phi,) * n),))

    def symmetrize(self) -> "RankDecomposedKernel":
        """Average over all orderings of each term (n! terms per rank term)."""
        n = self.level
        w = Fraction(1, math.factorial(n))
        out = []
        for c, fs in self.terms:
            for perm in permutations(range(n)):
                out.append((c * w, tuple(fs[i] for i in perm)))
        return RankDecomposedKernel(tuple(out))


# ---------------------------------------------------------------------------
# normalized exponential and Laguerre kernels


def _check_sup_below_one(phi, sigma):
    if not phi.sup_abs(sigma.window) < 1.0:
        raise DomainError("Gamma normalized exponential needs sup |phi| < 1")


def normalized_exp_gamma(phi: TestFunction, om, sigma) -> float:
    """exp(<om, phi/(phi-1)> - <log(1-phi)>_sigma)."""
    _check_sup_below_one(phi, sigma)
    return math.exp(om.pairing(ratio(phi)) - sigma.integrate(log1m(phi)))


def normalized_exp_gamma_batch(phi, batch, sigma) -> np.ndarray:
    _check_sup_below_one(phi, sigma)
    return np.exp(batch.pairing(ratio(phi)) - sigma.integrate(log1m(phi)))


def laguerre_from_symbols(T, I, n):
    """n! [t^n] exp(sum_k t^k (I_k / k - T_k)), T_k = <om, phi^k>, I_k = <phi^k>_sigma."""
    if n == 0:
        return 1.0
    zero = np.zeros_like(np.asarray(T[0], dtype=float)) if not isinstance(T[0], Fraction) else Fraction(0)
    coeffs = [zero]
    for k in range(1, n + 1):
        coeffs.append(I[k - 1] / k - T[k - 1])
    g = series_exp(TruncatedSeries(tuple(coeffs)))
    return math.factorial(n) * g[n]


def _moments_sigma(phi, n, sigma):
    return [sigma.integrate(phi ** k) for k in range(1, n + 1)]


def laguerre_eval(om, phi: TestFunction, n: int, sigma) -> float:
    """<L_n(om), phi^{(x)n}>."""
    _check_order(n)
    if n == 0:
        return 1.0
    T = [om.power_sum(phi, k) for k in range(1, n + 1)]
    return float(laguerre_from_symbols(T, _moments_sigma(phi, n, sigma), n))


def laguerre_eval_batch(batch, phi, n, sigma) -> np.ndarray:
    _check_order(n)
    if n == 0:
        return np.ones(batch.size)
    T = list(batch.power_sums(phi, n, weighted=True))
    return laguerre_from_symbols(T, _moments_sigma(phi, n, sigma), n)


def laguerre_kernel_eval(om, fs, sigma) -> float:
    """<L_n(om), f_1 (x) ... (x) f_n>: sum over set partitions of prod over blocks of
    -|B|! <om, prod_B f> + (|B|-1)! <prod_B f>_sigma."""
    n = len(fs)
    _check_order(n)
    if n == 0:
        return 1.0
    w = om.weights
    pair = _block_pairings([f(om.points) for f in fs], lambda v: float(np.sum(w * v)))
    x, qw = sigma.nodes_weights(*fs)
    integ = _block_pairings([f(x) for f in fs], lambda v: float(np.dot(qw, v)))
    total = 0.0
    for p in enumerate_set_partitions(n):
        term = 1.0
        for b in p.blocks:
            k, mk = len(b), _mask(b)
            term *= -math.factorial(k) * pair[mk] + math.factorial(k - 1) * integ[mk]
        total += term
    return total


# ---------------------------------------------------------------------------
# inner products


def _integrator(sigma, exact):
    if exact:
        return sigma.integrate_exact
    return sigma.integrate


def _power_integrals(phi, psi, n, sigma, exact):
    integ = _integrator(sigma, exact)
    prod = phi * psi
    return [integ(prod ** k) for k in range(1, n + 1)]


def _check_inner_n(n, cap=10):
    if n < 0:
        raise ValueError("level must be nonnegative")
    if n > cap:
        raise SizeError(f"level is capped at {cap}")


def gamma_inner_factorized(phi, psi, n, sigma, exact=False):
    """sum over types n!/(prod i_k!) prod_k k^{-i_k} (int (phi psi)^k)^{i_k}."""
    _check_inner_n(n)
    if n == 0:
        return Fraction(1) if exact else 1.0
    a = _power_integrals(phi, psi, n, sigma, exact)
    total = Fraction(0) if exact else 0.0
    for t in partition_types(n):
        coef = type_series_coefficient(t)
        term = coef if exact else float(coef)
        for k, i in enumerate(t, start=1):
            if i:
                term = term * a[k - 1] ** i
        total = total + term
    return total


def gamma_inner_oracle(phi, psi, n, sigma, exact=False):
    """n! [t^n] exp(sum_k t^k int (phi psi)^k / k)."""
    _check_inner_n(n)
    if n == 0:
        return Fraction(1) if exact else 1.0
    a = _power_integrals(phi, psi, n, sigma, exact)
    zero = Fraction(0) if exact else 0.0
    coeffs = [zero] + [a[k - 1] / k for k in range(1, n + 1)]
    g = series_exp(TruncatedSeries(tuple(coeffs)))
    return math.factorial(n) * g[n]


def gamma_inner_partition(K1: RankDecomposedKernel, K2: RankDecomposedKernel, sigma, exact=False):
    """sum over set partitions of prod_B (|B|-1)! int prod_{j in B} f_j g_j d sigma, bilinear in the rank terms.

    This is the inner product of symmetric kernels; pass ``K.symmetrize()`` for
    a kernel that is not symmetric (one side suffices).
    """
    n = K1.level
    if K2.level != n:
        raise ValueError("kernel levels differ")
    _check_inner_n(n, MAX_PARTITION_INNER)
    if n == 0:
        return Fraction(1) if exact else 1.0
    integ = _integrator(sigma, exact)
    parts = enumerate_set_partitions(n)
    weights = [[(b, math.factorial(len(b) - 1)) for b in p.blocks] for p in parts]
    total = Fraction(0) if exact else 0.0
    for c1, fs in K1.terms:
        for c2, gs in K2.terms:
            cache = {}

            def block(b):
                mk = _mask(b)
                if mk not in cache:
                    prod = None
                    for j in b:
                        fg = fs[j] * gs[j]
                        prod = fg if prod is None else prod * fg
                    cache[mk] = integ(prod)
                return cache[mk]

            acc = Fraction(0) if exact else 0.0
            for blocks in weights:
                term = 1
                for b, wgt in blocks:
                    term = term * (wgt * block(b))
                acc = acc + term
            coef = Fraction(c1) * Fraction(c2) if exact else float(c1) * float(c2)
            total = total + coef * acc
    return total


def standard_fock_value(phi, psi, n, sigma):
    """(phi, psi)^n: the symmetric-tensor value the Gamma inner product is compared to."""
    return sigma.inner(phi, psi) ** n


# ---------------------------------------------------------------------------
# annihilation


def gamma_annihilation(h: CylinderFunction, phi: TestFunction, om, sigma) -> float:
    """int_W int_0^inf (h(om + s eps_x) - h(om)) e^{-s}/s ds phi(x) sigma(dx), no truncation."""
    return _annihilation(h, MarkedDirection.unit(phi), om, GammaLevy(0.0), sigma)


# ---------------------------------------------------------------------------
# classical Laguerre


def laguerre_classical(n: int, alpha, x):
    """Generalised Laguerre polynomial L_n^{(alpha)}(x) by the three-term recurrence."""
    exact = isinstance(x, Fraction) or (isinstance(x, int) and isinstance(alpha, (int, Fraction)))
    one = Fraction(1) if exact else 1.0
    x = x if exact else np.asarray(x, dtype=float)
    prev = one + 0 * x
    if n == 0:
        return prev
    cur = 1 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def _laguerre_abs_scale(n, alpha, x):
    """sum_j C(n+alpha, n-j) x^j / j!: the value with all coefficients made positive."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for j in range(n + 1):
        binom = special.gamma(n + alpha + 1) / (special.gamma(n - j + 1) * special.gamma(alpha + j + 1))
        out = out + binom * np.abs(x) ** j / math.factorial(j)
    return out


def measure_kappa(n, T, x0=Fraction(1, 3)):
    """kappa_n from exact series arithmetic at one rational point: picks 1 or n!."""
    T = Fraction(T)
    if n == 0:
        return 1
    lag = laguerre_from_symbols([x0] * n, [T] * n, n)
    cl = laguerre_classical(n, T - 1, x0)
    r = lag / cl
    for cand in (1, math.factorial(n)):
        if r == cand:
            return cand
    raise AssertionError(f"ratio {r} matches neither 1 nor n!")


def laguerre_classical_check(T, c, batch, sigma, nmax=6, gen_tol=1e-12, res_tol=1e-10) -> dict:
    """Closed generating identity and kappa_n measurement on sampled Gamma noise."""
    if not 0 < c < 1:
        raise DomainError("need 0 < c < 1")
    if not sigma.window.contains_box([0.0], [float(T)]):
        raise DomainError("window must contain [0, T]")
    ind = Indicator(0.0, float(T))
    phi = c * ind
    x = batch.pairing(ind)
    lhs = normalized_exp_gamma_batch(phi, batch, sigma)
    rhs = (1 - c) ** (-T) * np.exp(-x * c / (1 - c))
    gen_rel = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
    kappas, residuals, ratios = {}, {}, []
    for n in range(nmax + 1):
        kappa = measure_kappa(n, Fraction(T).limit_denominator(10 ** 12))
        kappas[n] = kappa
        lag = laguerre_eval_batch(batch, ind, n, sigma)
        cl = laguerre_classical(n, T - 1, x)
        scale = kappa * _laguerre_abs_scale(n, T - 1, x)
        residuals[n] = float(np.max(np.abs(lag - kappa * cl) / scale))
        ok = np.abs(cl) * kappa > 1e-6 * scale
        ratios.append(lag[ok] / (math.factorial(n) * cl[ok]))
    ratios = np.concatenate(ratios)
    ratio_var = float(np.var(ratios))
    rep = {
        "identity": "laguerre-classical",
        "T": T,
        "c": c,
        "samples": int(batch.size),
        "generating_max_rel_error": gen_rel,
        "kappa": {str(n): k for n, k in kappas.items()},
        "kappa_is_factorial": all(k == math.factorial(n) for n, k in kappas.items()),
        "max_rel_residual": residuals,
        "normalized_ratio_mean": float(np.mean(ratios)),
        "normalized_ratio_variance": ratio_var,
        "pass": bool(gen_rel <= gen_tol and max(residuals.values()) <= res_tol and ratio_var <= res_tol),
    }
    return rep


# ---------------------------------------------------------------------------
# truncated-noise covariance and the orthogonality check


def _bmul(X, Y):
    N, M = X.shape[-2] - 1, X.shape[-1] - 1
    out = np.zeros(np.broadcast_shapes(X.shape, Y.shape))
    for a in range(N + 1):
        for b in range(M + 1):
            out[..., a:, b:] += X[..., a, b, None, None] * Y[..., : N + 1 - a, : M + 1 - b]
    return out


def truncated_covariance(phi, psi, n, m, sigma, epsilon) -> float:
    """Exact E[<L_n, phi^n><L_m, psi^m>] under Gamma noise truncated at epsilon (0: untruncated).

    Bivariate Taylor coefficient of E[e(l1 phi) e(l2 psi)] = exp(A) with
    A = int [-log(1-l1 phi) - log(1-l2 psi) + sum_k u^k Gamma(k, eps)/k!] d sigma,
    u = -sum_j (l1 phi)^j - sum_j (l2 psi)^j.
    """
    x, w = sigma.nodes_weights(phi, psi)
    f, g = phi(x), psi(x)
    Q = x.shape[0]
    base = np.zeros((Q, n + 1, m + 1))
    u = np.zeros((Q, n + 1, m + 1))
    for j in range(1, n + 1):
        base[:, j, 0] += f ** j / j
        u[:, j, 0] -= f ** j
    for j in range(1, m + 1):
        base[:, 0, j] += g ** j / j
        u[:, 0, j] -= g ** j
    upow = np.zeros_like(u)
    upow[:, 0, 0] = 1.0
    for k in range(1, n + m + 1):
        upow = _bmul(upow, u)
        gk = special.gamma(k) * (special.gammaincc(k, epsilon) if epsilon > 0 else 1.0)
        base += upow * (gk / math.factorial(k))
    A = np.tensordot(w, base, axes=(0, 0))
    # exp of a series without constant term
    E = np.zeros((n + 1, m + 1))
    E[0, 0] = 1.0
    term = E.copy()
    for j in range(1, n + m + 1):
        term = _bmul(term, A) / j
        E += term
    return math.factorial(n) * math.factorial(m) * float(E[n, m])


def gamma_orthogonality_mc(phi, psi, n, m, sigma, epsilon, samples, seed, key=(), threads=1) -> dict:
    """MC of E[<L_n, phi^n><L_m, psi^m>] under truncated noise versus delta_{nm} n! gamma_inner_factorized."""
    if n > 4 or m > 4:
        raise SizeError("orthogonality checks are capped at order 4")
    for f in (phi, psi):
        _check_sup_below_one(f, sigma)
    expected = math.factorial(n) * gamma_inner_factorized(phi, psi, n, sigma) if n == m else 0.0
    truncated = truncated_covariance(phi, psi, n, m, sigma, epsilon)
    untruncated = truncated_covariance(phi, psi, n, m, sigma, 0.0)
    budget = abs(truncated - untruncated)
    rho = GammaLevy(epsilon)
    if n == 0 and m == 0:
        return identity_report(f"laguerre-orth n={n} m={m}", 1.0, expected, n=n, m=m, samples=0)

    def fn(rng, size):
        b = sample_compound_poisson_batch(rho, sigma, size, rng)
        return laguerre_eval_batch(b, phi, n, sigma) * laguerre_eval_batch(b, psi, m, sigma)

    est = run_batches(fn, samples, seed, key, threads=threads)
    v, se = est.scalar()
    return identity_report(
        f"laguerre-orth n={n} m={m}", v, expected, se, 0.0, budget,
        n=n, m=m, epsilon=epsilon, truncated_expectation=truncated, untruncated_expectation=untruncated,
        samples=samples,
    )
