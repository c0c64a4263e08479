import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from poisson_chaos import gamma as gm
from poisson_chaos.configuration import DiscreteMeasure
from poisson_chaos.errors import DomainError, SizeError
from poisson_chaos.functions import Indicator, coordinate, poly
from poisson_chaos.measures import GammaLevy, IntensityMeasure, sample_compound_poisson_batch
from poisson_chaos.rng import stream
from poisson_chaos.window import Window

from conftest import SEED

X = coordinate()
W = Window.interval(0, 2)
SIG = IntensityMeasure.lebesgue(W)
PHI = Fraction(1, 2) * X - Fraction(1, 3)
PSI = Fraction(1, 4) + Fraction(1, 5) * X ** 2
OM = DiscreteMeasure([0.2, 0.7, 1.3, 1.9], [0.4, 1.7, 0.05, 0.9], W)

fr = st.fractions(min_value=-1, max_value=1, max_denominator=5)


def test_low_level_closed_forms():
    a1 = SIG.integrate_exact(PHI * PSI)
    a2 = SIG.integrate_exact((PHI * PSI) ** 2)
    assert gm.gamma_inner_factorized(PHI, PSI, 1, SIG, exact=True) == a1
    assert gm.gamma_inner_factorized(PHI, PSI, 2, SIG, exact=True) == a1 ** 2 + a2
    assert gm.standard_fock_value(PHI, PSI, 2, SIG) == pytest.approx(float(a1) ** 2)


@given(st.lists(fr, min_size=1, max_size=3), st.lists(fr, min_size=1, max_size=3), st.integers(1, 6))
def test_three_paths_exact(a, b, n):
    phi, psi = poly(*a), poly(*b)
    k1 = gm.RankDecomposedKernel.rank_one(phi, n)
    k2 = gm.RankDecomposedKernel.rank_one(psi, n)
    ref = gm.gamma_inner_oracle(phi, psi, n, SIG, exact=True)
    assert gm.gamma_inner_factorized(phi, psi, n, SIG, exact=True) == ref
    assert gm.gamma_inner_partition(k1, k2, SIG, exact=True) == ref


def test_partition_inner_needs_one_symmetric_side():
    f, g, h = poly(Fraction(1, 2), 1), poly(1, Fraction(-1, 3)), poly(Fraction(1, 4), 0, 1)
    K = gm.RankDecomposedKernel(((1, (f, g, h)),))
    L = gm.RankDecomposedKernel(((1, (h, h, f)), (Fraction(1, 2), (g, f, g))))
    both = gm.gamma_inner_partition(K.symmetrize(), L.symmetrize(), SIG, exact=True)
    assert gm.gamma_inner_partition(K.symmetrize(), L, SIG, exact=True) == both
    assert gm.gamma_inner_partition(K, L.symmetrize(), SIG, exact=True) == both


def test_partition_cap():
    k = gm.RankDecomposedKernel.rank_one(PHI, 9)
    with pytest.raises(SizeError):
        gm.gamma_inner_partition(k, k, SIG)


@pytest.mark.parametrize("n", range(7))
@pytest.mark.parametrize("alpha", [0.0, 0.5, 2.0])
def test_classical_laguerre_recurrence(n, alpha):
    x = np.linspace(0, 10, 11)
    assert np.allclose(gm.laguerre_classical(n, alpha, x), special.eval_genlaguerre(n, alpha, x), rtol=1e-12, atol=1e-12)
    assert gm.laguerre_classical(n, Fraction(alpha), Fraction(3, 2)) == pytest.approx(special.eval_genlaguerre(n, alpha, 1.5))


def test_kappa_is_factorial():
    for n in range(7):
        assert gm.measure_kappa(n, 2) == math.factorial(n)
        assert gm.measure_kappa(n, Fraction(5, 2)) == math.factorial(n)


def test_normalized_exponential_closed_form():
    c, T = 0.3, 2.0
    ind = Indicator(0.0, T)
    x = OM.pairing(ind)
    assert gm.normalized_exp_gamma(c * ind, OM, SIG) == pytest.approx((1 - c) ** (-T) * math.exp(-x * c / (1 - c)), rel=1e-13)
    with pytest.raises(DomainError):
        gm.normalized_exp_gamma(X, OM, SIG)


def test_laguerre_generating_function():
    # e(t phi) = sum_n t^n / n! <L_n, phi^n>
    t = 0.05
    s = sum(t ** n / math.factorial(n) * gm.laguerre_eval(OM, PHI, n, SIG) for n in range(10))
    assert gm.normalized_exp_gamma(t * PHI, OM, SIG) == pytest.approx(s, rel=1e-12)


def test_series_and_partition_kernels_agree():
    b = sample_compound_poisson_batch(GammaLevy(1e-3), SIG, 10, stream(SEED, (1,)))
    for n in range(6):
        batch = gm.laguerre_eval_batch(b, PHI, n, SIG)
        for i, om in enumerate(b):
            single = gm.laguerre_eval(om, PHI, n, SIG)
            assert batch[i] == pytest.approx(single, rel=1e-11, abs=1e-13)
            assert gm.laguerre_kernel_eval(om, [PHI] * n, SIG) == pytest.approx(single, rel=1e-9, abs=1e-11)


def test_untruncated_covariance_is_orthogonal():
    phi, psi = Fraction(2, 5) * X - Fraction(3, 10), Fraction(1, 5) + Fraction(1, 10) * X ** 2
    for n in range(4):
        for m in range(4):
            v = gm.truncated_covariance(phi, psi, n, m, SIG, 0.0)
            if n == m:
                assert v == pytest.approx(math.factorial(n) * gm.gamma_inner_factorized(phi, psi, n, SIG), rel=1e-12)
            else:
                assert abs(v) < 1e-14


def test_truncation_bias_vanishes_with_epsilon():
    phi, psi = Fraction(2, 5) * X - Fraction(3, 10), Fraction(1, 5) + Fraction(1, 10) * X ** 2
    b3 = abs(gm.truncated_covariance(phi, psi, 2, 2, SIG, 1e-3) - gm.truncated_covariance(phi, psi, 2, 2, SIG, 0.0))
    b4 = abs(gm.truncated_covariance(phi, psi, 2, 2, SIG, 1e-4) - gm.truncated_covariance(phi, psi, 2, 2, SIG, 0.0))
    assert 0 < b4 < b3 < 1e-2
    # at least first order in epsilon (here the linear term cancels)
    assert b3 / b4 >= 10


def test_classical_check_small():
    sig = IntensityMeasure.lebesgue(Window.interval(0, 3))
    b = sample_compound_poisson_batch(GammaLevy(1e-3), sig, 200, stream(SEED, (2,)))
    rep = gm.laguerre_classical_check(2.0, 0.3, b, sig)
    assert rep["pass"] and rep["kappa_is_factorial"]
