import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poisson_chaos.errors import DomainError, SizeError
from poisson_chaos.series import (
    TruncatedSeries, bell_number, block_weight, count_of_type, enumerate_set_partitions, faa_di_bruno_exp,
    nth_derivative_at_zero, partition_type_of, partition_types, series_exp, series_log, series_mul,
    type_series_coefficient, weight_simplification_holds,
)

# OEIS A000110
BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975]
# OEIS A000041
INTEGER_PARTITIONS = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]

fr = st.fractions(min_value=-2, max_value=2, max_denominator=9)


def test_bell_numbers_by_enumeration():
    for n in range(11):
        parts = enumerate_set_partitions(n)
        assert len(parts) == BELL[n] == bell_number(n)
        assert len({tuple(map(tuple, p.blocks)) for p in parts}) == BELL[n]


def test_enumeration_cap():
    with pytest.raises(SizeError):
        enumerate_set_partitions(11)


def test_partitions_cover_the_set():
    for p in enumerate_set_partitions(6):
        flat = sorted(i for b in p.blocks for i in b)
        assert flat == list(range(6))


def test_type_counts_match_enumeration():
    for n in range(1, 11):
        observed = Counter(partition_type_of(p) for p in enumerate_set_partitions(n))
        types = partition_types(n)
        assert len(types) == INTEGER_PARTITIONS[n]
        assert set(observed) == set(types)
        for t in types:
            assert observed[t] == count_of_type(t)


def test_weight_simplification_all_types():
    for n in range(1, 11):
        for t in partition_types(n):
            assert weight_simplification_holds(t)
            assert type_series_coefficient(t) == count_of_type(t) * block_weight(t)


def test_type_coefficients_sum_to_factorial():
    # sum over types of n!/prod(i_k! k^{i_k}) counts permutations by cycle type
    for n in range(1, 11):
        assert sum(type_series_coefficient(t) for t in partition_types(n)) == math.factorial(n)


def test_exp_series_of_t_is_exponential():
    g = series_exp(TruncatedSeries((Fraction(0), Fraction(1)) + (Fraction(0),) * 6))
    assert g.coeffs == tuple(Fraction(1, math.factorial(k)) for k in range(8))


def test_exact_exp_needs_zero_constant():
    with pytest.raises(DomainError):
        series_exp(TruncatedSeries((Fraction(1), Fraction(1))))


@given(st.lists(fr, min_size=1, max_size=7))
def test_exp_log_inverse_exact(tail):
    f = TruncatedSeries((Fraction(0),) + tuple(tail))
    assert series_log(series_exp(f)) == f


@given(st.lists(fr, min_size=1, max_size=6), st.lists(fr, min_size=1, max_size=6))
def test_exp_is_a_homomorphism(a, b):
    n = min(len(a), len(b))
    f = TruncatedSeries((Fraction(0),) + tuple(a[:n]))
    g = TruncatedSeries((Fraction(0),) + tuple(b[:n]))
    assert series_exp(f + g) == series_mul(series_exp(f), series_exp(g))


def test_float_and_array_coefficients():
    c = np.array([0.1, -0.3])
    f = TruncatedSeries((np.zeros(2), c, 0.5 * c))
    g = series_exp(f)
    assert np.allclose(g[2], 0.5 * c + 0.5 * c ** 2)


@given(st.lists(fr, min_size=1, max_size=7))
def test_faa_di_bruno_matches_series(derivs):
    n = len(derivs)
    f = TruncatedSeries((Fraction(0),) + tuple(d / math.factorial(k) for k, d in enumerate(derivs, start=1)))
    assert faa_di_bruno_exp(derivs) == nth_derivative_at_zero(series_exp(f), n)


def test_faa_di_bruno_frozen():
    # d^3/dt^3 exp(t + t^2/2 ... ) with f' = f'' = f''' = 1 at 0: 1 + 3 + 1 = 5
    assert faa_di_bruno_exp([1, 1, 1]) == 5
    # f(t) = t + t^2: f' = 1, f'' = 2, f''' = 0 -> 1 + 3*2 = 7
    assert faa_di_bruno_exp([1, 2, 0]) == 7
