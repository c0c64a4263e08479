"""Verification suites shared by the command line runner and the test-suite.

Each suite returns a dict with a list of identity reports under
``"identities"``; the suite passes iff every identity passes.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import charlier as ch
from . import compound as cp
from . import gamma as gm
from .configuration import DiscreteMeasure
from .fock import FockVector, fock_inner, fock_norm
from .functions import Bump, Indicator, Polynomial, coordinate, log1p
from .mc import exact_report, identity_report, run_batches
from .measures import (
    FiniteDiscrete,
    GammaLevy,
    IntensityMeasure,
    laplace,
    kolmogorov_characteristic,
    sample_compound_poisson_batch,
    sample_poisson_batch,
)
from .rng import stream
from .window import Window

SUITES = (
    "laplace-check",
    "mecke",
    "rn",
    "charlier-orth",
    "creation-iterate",
    "fock-bounds",
    "usigma-isometry",
    "cp-operators",
    "gamma-inner-threepath",
    "laguerre-orth",
    "laguerre-classical",
)

X = coordinate()


def default_sigma():
    return IntensityMeasure.lebesgue(Window.interval(0, 2))


def _finish(suite, identities, **extra):
    out = {"suite": suite, "identities": identities, "pass": all(r["pass"] for r in identities)}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Laplace functionals


def default_laplace_functions(kind):
    if kind == "gamma":
        # sup phi < 1/2 keeps exp<omega, phi> square integrable
        return [Fraction(1, 5) * X - Fraction(1, 10), Indicator(0.5, 1.5, 0.35), Bump(1.0, 0.6, 0.4)]
    return [Fraction(1, 2) * X - Fraction(3, 10), Indicator(0.5, 1.5, 0.7), Bump(1.0, 0.6, -0.8)]


def laplace_kind(rho):
    if rho is None or rho == FiniteDiscrete.unit():
        return "poisson"
    if isinstance(rho, GammaLevy):
        return "gamma"
    return "compound"


def laplace_check(sigma, rho, functions, samples, seed, threads=1, key=()):
    kind = laplace_kind(rho)
    reps = []
    for i, phi in enumerate(functions):
        if kind == "poisson":
            closed = laplace("poisson", phi, sigma)
            budget = 0.0

            def fn(rng, size, phi=phi):
                return np.exp(sample_poisson_batch(sigma, size, rng).pairing(phi))
        else:
            if kind == "gamma":
                closed = laplace("gamma", phi, sigma)
                # mean jump mass below eps is at most eps per unit of sigma
                budget = phi.sup_abs(sigma.window) * sigma.mass * rho.epsilon
            else:
                closed = laplace("compound", phi, sigma, rho)
                budget = 0.0

            def fn(rng, size, phi=phi):
                return np.exp(sample_compound_poisson_batch(rho, sigma, size, rng).pairing(phi))

        est = run_batches(fn, samples, seed, tuple(key) + (i,), threads=threads)
        v, se = est.scalar()
        extra = {"kind": kind, "phi": phi.to_expr(), "samples": samples}
        if kind == "gamma":
            x, w = sigma.nodes_weights(phi)
            extra["truncated_closed_form"] = math.exp(float(np.dot(w, kolmogorov_characteristic(rho, phi(x)))))
        reps.append(identity_report(f"laplace-{kind}[{i}]", v, closed, se, 0.0, budget, **extra))
    return _finish("laplace-check", reps)


# ---------------------------------------------------------------------------
# Poisson-side suites


def default_mecke_cases():
    phi = Fraction(1, 2) + Fraction(1, 4) * X
    psi = Indicator(0.0, 1.0, 1.0) + X
    return [
        (phi, None),
        (phi, ch.linear_cylinder(psi)),
        (phi, ch.exp_cylinder(Fraction(3, 10) * X, -1.0)),
    ]


def mecke_suite(sigma, cases, samples, seed, threads=1, key=()):
    reps = []
    for i, (phi, h) in enumerate(cases):
        r = ch.mecke_check(phi, h, sigma, samples, seed, tuple(key) + (i,), threads)
        r["identity"] = f"mecke[{i}]"
        reps.append(r)
    return _finish("mecke", reps)


def default_rn_cases():
    etas = [Fraction(1, 2) * X - Fraction(2, 5), Indicator(0.5, 1.5, 0.8) - Fraction(1, 5)]
    psi = Fraction(1, 4) + Fraction(1, 2) * X
    Fs = [
        ch.constant_cylinder(1.0),
        ch.linear_cylinder(psi),
        ch.PolynomialCylinder((psi, Indicator(0.0, 1.0, 1.0)), {(1, 1): 1.0, (0, 2): 0.5}),
    ]
    return etas, Fs


def rn_suite(sigma, etas, Fs, samples, seed, threads=1, key=()):
    reps = []
    for i, eta in enumerate(etas):
        for j, F in enumerate(Fs):
            r = ch.rn_check(eta, F, sigma, samples, seed, tuple(key) + (i, j), threads)
            r["identity"] = f"radon-nikodym[eta{i},F{j}]"
            reps.append(r)
    return _finish("rn", reps)


def default_charlier_pairs():
    return [
        (Fraction(1, 2) * X - Fraction(3, 10), Indicator(0.5, 1.5, 0.7) + Fraction(1, 10) * X),
        (Bump(1.0, 0.8, 0.6), Fraction(3, 10) - Fraction(1, 5) * X),
    ]


def charlier_orth_suite(sigma, pairs, orders, samples, seed, threads=1, key=()):
    reps = []
    for p, (phi, psi) in enumerate(pairs):
        for n, m in orders:
            r = ch.charlier_orthogonality_mc(phi, psi, n, m, sigma, samples, seed, tuple(key) + (p, n, m), threads)
            r["identity"] = f"charlier-orth[pair{p}] n={n} m={m}"
            reps.append(r)
    return _finish("charlier-orth", reps)


def creation_iterate_suite(sigma, phi, nmax, configs, seed, rel_tol=1e-8, key=()):
    """Iterated creation on 1 versus the series Charlier value, per configuration."""
    batch = sample_poisson_batch(sigma, configs, stream(seed, tuple(key) + (0,)))
    worst = 0.0
    worst_case = None
    for i in range(configs):
        g = batch.sample(i)
        for n in range(nmax + 1):
            a = ch.creation_iterate(n, phi, g, sigma)
            b = ch.charlier_eval(g, phi, n, sigma)
            scale = max(abs(a), abs(b), 1e-300)
            rel = abs(a - b) / scale if a != b else 0.0
            if rel > worst:
                worst, worst_case = rel, (i, n, a, b)
    rep = {
        "identity": "creation-iterate = series Charlier",
        "configurations": configs,
        "nmax": nmax,
        "max_relative_deviation": worst,
        "worst_case": worst_case,
        "deterministic_budget": rel_tol,
        "pass": worst <= rel_tol,
    }
    return _finish("creation-iterate", [rep])


def _random_function(rng, sigma):
    lo, hi = float(sigma.window.lower[0]), float(sigma.window.upper[0])
    kind = rng.integers(3)
    if kind == 0:
        c = rng.normal(size=3)
        return Polynomial.from_coefficients([float(v) for v in c])
    if kind == 1:
        a, b = np.sort(rng.uniform(lo, hi, 2))
        return Indicator(float(a), float(b) + 1e-3, float(rng.normal()))
    return Bump(float(rng.uniform(lo, hi)), float(rng.uniform(0.2, 1.0)), float(rng.normal()))


def fock_bounds_suite(sigma, vectors, samples, seed, nmax=5, threads=1, key=()):
    """Fock bounds on random factorised vectors, exact Fock adjointness, and MC adjointness of the gradient."""
    rng = stream(seed, tuple(key) + (0,))
    viol_minus = viol_plus = 0
    worst_minus = worst_plus = 0.0
    worst_adj = 0.0
    for _ in range(vectors):
        n = int(rng.integers(1, nmax + 1))
        fs = [_random_function(rng, sigma) for _ in range(n)]
        phi = _random_function(rng, sigma)
        v = FockVector.factorized(fs)
        nv, nphi = fock_norm(v, sigma), sigma.norm(phi)
        am = fock_norm(v.annihilate(phi, sigma), sigma)
        ap = fock_norm(v.create(phi), sigma)
        bm, bp = math.sqrt(n) * nphi * nv, math.sqrt(n + 1) * nphi * nv
        tol = 1e-12 * max(bp, 1e-300)
        viol_minus += am > bm + tol
        viol_plus += ap > bp + tol
        worst_minus = max(worst_minus, am / bp if bm else 0.0)
        worst_plus = max(worst_plus, ap / bp if bp else 0.0)
        # (a+ v, w) = (v, a- w) on a random partner one level up
        w = FockVector.factorized([_random_function(rng, sigma) for _ in range(n + 1)])
        lhs = fock_inner(v.create(phi), w, sigma)
        rhs = fock_inner(v, w.annihilate(phi, sigma), sigma)
        # scaled by the Cauchy-Schwarz bound, so near-orthogonal pairs do not divide by ~0
        scale = ap * fock_norm(w, sigma)
        worst_adj = max(worst_adj, abs(lhs - rhs) / scale if scale else abs(lhs - rhs))
    reps = [
        {"identity": "annihilation bound", "vectors": vectors, "violations": int(viol_minus), "pass": viol_minus == 0},
        {"identity": "creation bound", "vectors": vectors, "violations": int(viol_plus), "pass": viol_plus == 0},
        {"identity": "fock adjointness", "vectors": vectors, "max_relative_deviation": worst_adj,
         "deterministic_budget": 1e-10, "pass": worst_adj <= 1e-10},
    ]
    phi = Fraction(1, 2) * X - Fraction(3, 10)
    f = ch.exp_cylinder(Indicator(0.5, 1.5, 0.7), 0.5)
    g = ch.PolynomialCylinder((Fraction(1, 4) + Fraction(1, 2) * X,), {(1,): 1.0, (2,): -0.25})
    r = ch.adjoint_check(f, g, phi, sigma, samples, seed, tuple(key) + (1,), threads)
    reps.append(r)
    return _finish("fock-bounds", reps)


# ---------------------------------------------------------------------------
# compound-Poisson suites


def default_cylinders():
    psi = Fraction(1, 4) + Fraction(1, 4) * X
    return [
        ch.linear_cylinder(psi),
        ch.exp_cylinder(Indicator(0.5, 1.5, 0.5), 0.5),
        ch.PolynomialCylinder((psi, Bump(1.0, 0.7, 1.0)), {(2, 0): 1.0, (1, 1): 0.5, (0, 0): 1.0}),
    ]


def reduction_checks(sigma, cylinders, phi, configs, seed, key=()):
    """rho = eps_1: compound operator formulas equal the Poisson ones bit for bit."""
    unit = FiniteDiscrete.unit()
    batch = sample_compound_poisson_batch(unit, sigma, configs, stream(seed, tuple(key) + (0,)))
    d = cp.MarkedDirection.unit(phi)
    mismatches = 0
    for i in range(configs):
        om = batch.sample(i)
        g = om.as_configuration()
        for h in cylinders:
            mismatches += cp.cp_annihilation(h, d, om, unit, sigma) != ch.directional_gradient(h, phi, g, sigma)
            mismatches += cp.cp_creation(h, d, om, unit, sigma) != ch.creation_apply(h, phi, g, sigma)
        for n in range(6):
            mismatches += cp.cp_charlier_eval(om, d, n, unit, sigma) != ch.charlier_eval(g, phi, n, sigma)
    return {"identity": "eps_1 reduction (bit-identical)", "configurations": configs,
            "mismatches": int(mismatches), "pass": mismatches == 0}


def usigma_suite(sigma, rhos, cylinders, samples, seed, threads=1, key=()):
    reps = []
    for a, rho in enumerate(rhos):
        for i, h in enumerate(cylinders):
            r = cp.usigma_isometry_check(h, rho, sigma, samples, seed, tuple(key) + (a, i), threads)
            r["identity"] = f"usigma-isometry[{rho}, h{i}]"
            reps.append(r)
    reps.append(reduction_checks(sigma, cylinders, Fraction(1, 2) * X - Fraction(3, 10), 200, seed, tuple(key) + (99,)))
    return _finish("usigma-isometry", reps)


def _telegraph_oracle(h, phi, om, sigma):
    """int (h(om + eps_x)/2 + h(om - eps_x)/2 - h(om)) phi(x) sigma(dx), atoms added one at a time."""
    x, w = sigma.nodes_weights(phi, *h.directions)
    x = ch._nudge(x, om.points)
    base = h(om)
    vals = np.array([0.5 * h(om.add_atom(xq, 1.0)) + 0.5 * h(om.add_atom(xq, -1.0)) - base for xq in x])
    return float(np.dot(w * phi(x), vals))


def cp_operators_suite(sigma, samples, seed, threads=1, key=()):
    reps = []
    tel = FiniteDiscrete.telegraph()
    gam = GammaLevy(1e-3)
    phi = Fraction(1, 2) * X - Fraction(3, 10)
    cyl = default_cylinders()
    rng = stream(seed, tuple(key) + (0,))
    # telegraph example
    b = sample_compound_poisson_batch(tel, sigma, 20, rng)
    worst = 0.0
    for i in range(b.size):
        om = b.sample(i)
        for h in cyl:
            a = cp.cp_annihilation(h, cp.MarkedDirection.unit(phi), om, tel, sigma)
            o = _telegraph_oracle(h, phi, om, sigma)
            worst = max(worst, abs(a - o) / max(abs(a), abs(o), 1.0))
    reps.append({"identity": "telegraph annihilation formula", "max_relative_deviation": worst,
                 "deterministic_budget": 1e-10, "pass": worst <= 1e-10})
    # exponential example: grad h = h(om) int int ((1+eta)^s - 1) p(s) phi(x)
    eta = Fraction(1, 4) * X - Fraction(1, 5)
    for rho, p in ((tel, (1.0,)), (gam, (0.0, 1.0))):
        first_moment = _first_moment(rho)
        h = ch.ExpAffineCylinder((log1p(eta),), (1.0,), -sigma.integrate(eta) * first_moment)
        d = cp.MarkedDirection(p, phi)
        b = sample_compound_poisson_batch(rho, sigma, 20, rng)
        worst = 0.0
        for i in range(b.size):
            om = b.sample(i)
            a = cp.cp_annihilation(h, d, om, rho, sigma)
            o = h(om) * _exp_example_factor(eta, d, rho, sigma)
            worst = max(worst, abs(a - o) / max(abs(a), abs(o), 1.0))
        reps.append({"identity": f"exponential example [{rho}]", "max_relative_deviation": worst,
                     "deterministic_budget": 1e-9, "pass": worst <= 1e-9})
    # transported adjointness
    g = ch.linear_cylinder(Fraction(1, 4) + Fraction(1, 2) * X)
    for j, (rho, p) in enumerate(((tel, (1.0,)), (gam, (0.0, 1.0)))):
        r = cp.cp_adjoint_check(cyl[1], g, cp.MarkedDirection(p, phi), rho, sigma, samples, seed, tuple(key) + (1, j), threads)
        reps.append(r)
    # compound Charlier orthogonality (telegraph), off-diagonal and diagonal
    psi = cp.MarkedDirection((1.0, 0.5), Indicator(0.5, 1.5, 0.7))
    dphi = cp.MarkedDirection((1.0,), phi)
    for n, m in ((1, 1), (1, 2), (2, 2)):
        reps.append(cp.cp_orthogonality_mc(dphi, psi, n, m, tel, sigma, samples, seed, tuple(key) + (2, n, m), threads))
    return _finish("cp-operators", reps)


def _first_moment(rho):
    if isinstance(rho, FiniteDiscrete):
        return float(np.dot(rho.weights, rho.jumps))
    from .measures import levy_moment

    return levy_moment(rho, 1, absolute=False)


def _exp_example_factor(eta, d, rho, sigma):
    """int int ((1+eta(x))^s - 1) p(s) phi(x) rho(ds) sigma(dx), with the s-integral in closed form."""
    x, w = sigma.nodes_weights(eta, d.phi)
    L = np.log1p(eta(x))
    if isinstance(rho, FiniteDiscrete):
        inner = np.expm1(np.multiply.outer(L, rho.jumps)) @ (rho.weights * d.mark_factor(rho.jumps))
    else:
        # p(s) = s: int_eps^inf (e^{sL} - 1) e^{-s} ds
        assert d.p == (0.0, 1.0)
        e = rho.epsilon
        inner = np.exp(-e * (1 - L)) / (1 - L) - math.exp(-e)
    return float(np.dot(w * d.phi(x), inner))


# ---------------------------------------------------------------------------
# Gamma suites


def default_gamma_polynomials():
    return Fraction(1, 2) * X - Fraction(1, 3), Fraction(1, 4) + Fraction(1, 5) * X ** 2


def gamma_threepath_suite(sigma, phi, psi, nmax, float_tol=1e-10):
    rows, reps = [], []
    exact_ok = sigma.is_exact and isinstance(phi, Polynomial) and isinstance(psi, Polynomial) and phi.is_exact and psi.is_exact
    for n in range(nmax + 1):
        k1 = gm.RankDecomposedKernel.rank_one(phi, n) if n else None
        k2 = gm.RankDecomposedKernel.rank_one(psi, n) if n else None
        ff = gm.gamma_inner_factorized(phi, psi, n, sigma)
        fo = gm.gamma_inner_oracle(phi, psi, n, sigma)
        fp = gm.gamma_inner_partition(k1, k2, sigma) if n else 1.0
        row = {"n": n, "factorized": float(ff), "partition": float(fp), "oracle": float(fo)}
        scale = max(abs(ff), abs(fo), abs(fp), 1e-300)
        dev = max(abs(ff - fo), abs(fp - fo)) / scale
        row["float_max_rel_dev"] = float(dev)
        ok = dev <= float_tol
        if exact_ok:
            ef = gm.gamma_inner_factorized(phi, psi, n, sigma, exact=True)
            eo = gm.gamma_inner_oracle(phi, psi, n, sigma, exact=True)
            ep = gm.gamma_inner_partition(k1, k2, sigma, exact=True) if n else Fraction(1)
            row["exact"] = str(eo)
            row["exact_equal"] = ef == eo == ep
            ok = ok and row["exact_equal"]
        rows.append(row)
        reps.append({"identity": f"gamma three-path n={n}", "pass": bool(ok), **row})
    return _finish("gamma-inner-threepath", reps, table=rows)


def default_laguerre_pair():
    return Fraction(2, 5) * X - Fraction(3, 10), Fraction(1, 5) + Fraction(1, 10) * X ** 2


def laguerre_orth_suite(sigma, phi, psi, orders, epsilon, samples, seed, threads=1, key=()):
    reps = []
    for n, m in orders:
        r = gm.gamma_orthogonality_mc(phi, psi, n, m, sigma, epsilon, samples, seed, tuple(key) + (n, m), threads)
        reps.append(r)
    # diagonal normalisation: the exact untruncated covariance equals n! gamma_inner_factorized
    for n in sorted({n for n, m in orders if n == m}):
        reps.append(exact_report(f"laguerre diagonal n={n}", gm.truncated_covariance(phi, psi, n, n, sigma, 0.0),
                                 math.factorial(n) * gm.gamma_inner_factorized(phi, psi, n, sigma), 1e-10))
    return _finish("laguerre-orth", reps)


def laguerre_classical_suite(T, c, samples, seed, epsilon=1e-3, nmax=6, key=()):
    sigma = IntensityMeasure.lebesgue(Window.interval(0, max(3, math.ceil(T) + 1)))
    batch = sample_compound_poisson_batch(GammaLevy(epsilon), sigma, samples, stream(seed, tuple(key) + (0,)))
    rep = gm.laguerre_classical_check(T, c, batch, sigma, nmax)
    return _finish("laguerre-classical", [rep], kappa=rep["kappa"])
