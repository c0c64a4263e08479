import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poisson_chaos.errors import SizeError
from poisson_chaos.fock import FockVector, coherent_vector, fock_inner, fock_norm, permanent
from poisson_chaos.functions import Bump, Indicator, Polynomial, coordinate
from poisson_chaos.measures import IntensityMeasure, sample_poisson_batch
from poisson_chaos.rng import stream
from poisson_chaos.window import Window

from conftest import SEED

X = coordinate()
SIG = IntensityMeasure.lebesgue(Window.interval(0, 2))
small = st.floats(-2, 2, allow_nan=False)


def brute_permanent(a):
    n = len(a)
    return sum(math.prod(a[i][p[i]] for i in range(n)) for p in permutations(range(n)))


@given(st.integers(0, 6).flatmap(lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)))
def test_permanent_matches_brute_force(a):
    ref = brute_permanent(a) if a else 1.0
    assert permanent(np.array(a).reshape(len(a), len(a))) == pytest.approx(ref, rel=1e-9, abs=1e-9)


funcs = st.one_of(
    st.lists(small, min_size=1, max_size=3).map(lambda c: Polynomial.from_coefficients(c)),
    st.tuples(st.floats(0, 1), st.floats(1.01, 2), small).map(lambda t: Indicator(t[0], t[1], t[2])),
    st.tuples(st.floats(0, 2), st.floats(0.2, 1), small).map(lambda t: Bump(t[0], t[1], t[2])),
)


@given(st.lists(funcs, min_size=1, max_size=4), funcs, st.lists(funcs, min_size=2, max_size=5))
def test_bounds_and_adjointness(fs, phi, gs):
    v = FockVector.factorized(fs)
    n = len(fs)
    nv, nphi = fock_norm(v, SIG), SIG.norm(phi)
    tol = 1e-10 * (1 + nphi * nv * math.sqrt(n + 1))
    assert fock_norm(v.annihilate(phi, SIG), SIG) <= math.sqrt(n) * nphi * nv + tol
    assert fock_norm(v.create(phi), SIG) <= math.sqrt(n + 1) * nphi * nv + tol
    w = FockVector.factorized(gs[: n + 1]) if len(gs) >= n + 1 else FockVector.factorized(gs + [phi] * (n + 1 - len(gs)))
    lhs = fock_inner(v.create(phi), w, SIG)
    rhs = fock_inner(v, w.annihilate(phi, SIG), SIG)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_annihilate_power_vector():
    f = Fraction(1, 2) * X
    v = FockVector.factorized([f, f])
    out = v.annihilate(f, SIG)
    # a^-(f) f (x) f = 2 (f, f) f
    assert fock_inner(out, out, SIG) == pytest.approx((2 * SIG.inner(f, f)) ** 2 * SIG.inner(f, f))


def test_coherent_vector_is_eigenvector():
    psi, phi = Bump(1.0, 0.8, 0.6), Fraction(1, 3) * X
    e = coherent_vector(psi, nmax=8)
    lowered = e.annihilate(phi, SIG)
    target = e.scale(SIG.inner(psi, phi))
    for n in range(7):
        d = lowered.level(n) + target.level(n).scale(-1.0)
        # the norm of a difference is formed by cancellation: error ~ sqrt(eps) |v|
        assert fock_norm(d, SIG) <= 1e-7 * max(1.0, fock_norm(target.level(n), SIG))


def test_chaos_map_is_isometric_in_mean():
    # E[F(v)^2] = |v|^2 for the weighted Fock norm
    f, g = Fraction(1, 2) * X - Fraction(3, 10), Indicator(0.5, 1.5, 0.7)
    v = FockVector.factorized([f, g]) + FockVector.factorized([g]).scale(0.5) + FockVector.vacuum().scale(0.2)
    F = v.to_function(SIG)
    b = sample_poisson_batch(SIG, 100_000, stream(SEED, (1,)))
    vals = F.batch(b) ** 2
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - fock_norm(v, SIG) ** 2) < 3 * se
    assert F(b.sample(0)) == pytest.approx(F.batch(b)[0])


def test_creation_cap():
    v = FockVector.factorized([X] * 2, nmax=2)
    with pytest.raises(SizeError):
        v.create(X)


def test_permanent_stable_under_cancellation():
    # rank-one plus a small perturbation; Ryser's alternating sums lose ~8 digits here
    rng = np.random.default_rng(7)
    u = rng.normal(size=6)
    a = np.outer(u, u) * 1e3 + rng.normal(size=(6, 6)) * 1e-3
    from fractions import Fraction
    exact = sum(
        np.prod([Fraction(a[i, p[i]]) for i in range(6)]) for p in __import__("itertools").permutations(range(6))
    )
    assert permanent(a) == pytest.approx(float(exact), rel=1e-12)
