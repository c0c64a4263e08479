import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, special, stats

from poisson_chaos.errors import DIVERGES, DomainError
from poisson_chaos.functions import Indicator, constant, coordinate
from poisson_chaos.measures import (
    FiniteDiscrete, GammaLevy, IntensityMeasure, analyticity_constant, kolmogorov_characteristic, laplace,
    levy_moment, perturb_sigma, sample_compound_poisson_batch, sample_compound_poisson, sample_poisson,
)
from poisson_chaos.rng import stream
from poisson_chaos.window import Window

from conftest import SEED

X = coordinate()
W1 = Window.interval(0, 1)
W2 = Window.interval(0, 2)


def test_poisson_laplace_against_quad():
    sig = IntensityMeasure.lebesgue(W2)
    phi = Fraction(1, 2) * X - Fraction(3, 10)
    ref, _ = integrate.quad(lambda t: math.expm1(0.5 * t - 0.3), 0, 2)
    assert laplace("poisson", phi, sig) == pytest.approx(math.exp(ref), rel=1e-13)
    # phi = 1 on the unit window: exp(e - 1)
    assert laplace("poisson", constant(1), IntensityMeasure.lebesgue(W1)) == pytest.approx(math.exp(math.e - 1))


def test_telegraph_laplace_constant_one():
    v = laplace("compound", constant(1), IntensityMeasure.lebesgue(W1), FiniteDiscrete.telegraph())
    assert v == pytest.approx(math.exp(math.cosh(1) - 1), rel=1e-14)
    assert v == pytest.approx(1.7213, abs=5e-5)


def test_gamma_laplace_examples():
    sig = IntensityMeasure.lebesgue(W1)
    assert laplace("gamma", constant(Fraction(1, 2)), sig) == pytest.approx(2.0, rel=1e-14)
    phi = Fraction(1, 5) * X - Fraction(1, 10)
    ref, _ = integrate.quad(lambda t: -math.log(1 - (0.2 * t - 0.1)), 0, 2)
    assert laplace("gamma", phi, IntensityMeasure.lebesgue(W2)) == pytest.approx(math.exp(ref), rel=1e-13)
    with pytest.raises(DomainError):
        laplace("gamma", constant(1), sig)


@pytest.mark.parametrize("eps", [1e-3, 0.1, 0.5])
@pytest.mark.parametrize("u", [-2.0, -0.3, 0.4, 0.9])
def test_gamma_characteristic_against_quad(eps, u):
    ref, _ = integrate.quad(lambda s: (math.exp(-s * (1 - u)) - math.exp(-s)) / s, eps, np.inf, epsabs=1e-13, limit=200)
    assert kolmogorov_characteristic(GammaLevy(eps), u) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_gamma_characteristic_untruncated_limit():
    u = np.linspace(-1, 0.9, 7)
    assert np.allclose(kolmogorov_characteristic(GammaLevy(0.0), u), -np.log1p(-u))
    assert np.allclose(kolmogorov_characteristic(GammaLevy(1e-8), u), -np.log1p(-u), atol=1e-7)


def test_levy_moments():
    for n in range(1, 6):
        ref, _ = integrate.quad(lambda s: s ** (n - 1) * math.exp(-s), 0.01, np.inf)
        assert levy_moment(GammaLevy(0.01), n) == pytest.approx(ref, rel=1e-10)
        assert levy_moment(GammaLevy(0.01), n, truncated=False) == pytest.approx(math.factorial(n - 1))
    assert levy_moment(GammaLevy(0.01), 0) == pytest.approx(special.exp1(0.01))
    assert levy_moment(GammaLevy(0.0), 0) is DIVERGES
    tel = FiniteDiscrete.telegraph()
    assert levy_moment(tel, 3) == 1.0 and levy_moment(tel, 3, absolute=False) == 0.0


def test_analyticity_constant():
    g = analyticity_constant(GammaLevy(0.0), truncated=False)
    assert g["holds"] and g["C"] == pytest.approx(1.0)
    t = analyticity_constant(FiniteDiscrete.telegraph())
    assert t["holds"] and t["C"] == pytest.approx(1.0)
    big = analyticity_constant(FiniteDiscrete(((3.0, 1.0),)))
    assert big["C"] == pytest.approx(3.0)


def test_perturb_sigma():
    sig = IntensityMeasure.lebesgue(W2)
    assert perturb_sigma(sig, constant(0)) is sig
    s2 = perturb_sigma(sig, Fraction(1, 2) * X - Fraction(2, 5))
    assert s2.mass == pytest.approx(2 + 1 - 0.8)
    with pytest.raises(DomainError):
        perturb_sigma(sig, X - 2)


def test_nonpositive_density_rejected():
    with pytest.raises(DomainError):
        IntensityMeasure(W2, X - 1)


def test_finite_discrete_validation():
    with pytest.raises(DomainError):
        FiniteDiscrete(((0.0, 1.0),))
    with pytest.raises(DomainError):
        GammaLevy(1.5)


def test_rejection_sampler_matches_density():
    sig = IntensityMeasure(W2, 1 + X)
    pts = sig.sample_positions(20_000, stream(SEED, (1,)))[:, 0]
    cdf = lambda t: (t + t ** 2 / 2) / 4.0
    assert stats.kstest(pts, cdf).pvalue > 1e-3


def test_gamma_marks_distribution():
    rho = GammaLevy(1e-3)
    s = rho.sample_marks(20_000, stream(SEED, (2,)))
    assert s.min() >= 1e-3
    cdf = lambda t: 1 - special.exp1(np.maximum(t, 1e-3)) / special.exp1(1e-3)
    assert stats.kstest(s, cdf).pvalue > 1e-3
    hi = rho.sample_marks(5000, stream(SEED, (3,)), 1.0, None)
    assert hi.min() >= 1.0


def test_gamma_untruncated_not_sampleable():
    with pytest.raises(DomainError):
        GammaLevy(0.0).sample_marks(3, stream(SEED))


def test_superposition_and_marked_agree_in_law():
    sig = IntensityMeasure.lebesgue(W2)
    rho = GammaLevy(0.05)
    f = Indicator(0.0, 1.0, 1.0)
    a = sample_compound_poisson_batch(rho, sig, 20_000, stream(SEED, (4,)))
    b = sample_compound_poisson_batch(rho, sig, 20_000, stream(SEED, (5,)), method="superposition")
    # <omega, 1_[0,1]> has mean Gamma(1, eps) and variance Gamma(2, eps)
    mean = levy_moment(rho, 1)
    for batch in (a, b):
        v = batch.pairing(f)
        assert abs(v.mean() - mean) < 3 * v.std() / math.sqrt(v.size)
        assert batch.counts.mean() == pytest.approx(2 * special.exp1(0.05), rel=0.02)


def test_single_sample_wrappers():
    sig = IntensityMeasure.lebesgue(W2)
    g = sample_poisson(sig, stream(SEED, (6,)))
    assert g.window == sig.window
    om = sample_compound_poisson(FiniteDiscrete.telegraph(), sig, stream(SEED, (6,)))
    assert set(np.abs(om.weights)) <= {1.0}


def test_two_dimensional_measure():
    w = Window.box((0, 1), (0, 2))
    x, y = coordinate(0, 2), coordinate(1, 2)
    sig = IntensityMeasure(w, 1 + x * y)
    assert sig.mass == pytest.approx(2 + 1)
    # int x y (1 + x y) over [0,1] x [0,2] = 1 + 8/9
    assert sig.integrate_exact(x * y) == Fraction(17, 9)
