import numpy as np
import pytest
from hypothesis import given, strategies as st

from poisson_chaos.mc import _merge, _moments, exact_report, identity_report, run_batches
from poisson_chaos.rng import stream

from conftest import SEED


def normal(rng, size):
    return rng.normal(1.0, 2.0, size)


def test_thread_count_does_not_change_results():
    a = run_batches(normal, 10_001, SEED, (1,), threads=1)
    b = run_batches(normal, 10_001, SEED, (1,), threads=4)
    assert a.mean.tobytes() == b.mean.tobytes() and a.se.tobytes() == b.se.tobytes()
    assert a.n == 10_001


def test_streams_are_distinct_and_reproducible():
    assert stream(SEED, (1, 2)).random() == stream(SEED, (1, 2)).random()
    assert stream(SEED, (1, 2)).random() != stream(SEED, (2, 1)).random()
    assert stream(SEED, 3).random() == stream(SEED, (3,)).random()


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50), st.integers(1, 49))
def test_chan_merge_matches_direct(values, cut):
    v = np.array(values)
    cut = min(cut, len(v) - 1)
    n, m, s = _merge(_moments(v[:cut]), _moments(v[cut:]))
    assert n == len(v)
    assert np.allclose(m, v.mean(), atol=1e-9)
    assert np.allclose(s, ((v - v.mean()) ** 2).sum(), rtol=1e-9, atol=1e-6)


def test_standard_error_is_calibrated():
    est = run_batches(normal, 40_000, SEED, (2,))
    mean, se = est.scalar()
    assert se == pytest.approx(2.0 / np.sqrt(40_000), rel=0.03)
    assert abs(mean - 1.0) < 3 * se


def test_vector_valued_samples():
    est = run_batches(lambda rng, n: np.column_stack([rng.random(n), 2 * rng.random(n)]), 1000, SEED)
    assert est.mean.shape == (2,)


def test_identity_report_decision_is_auditable():
    r = identity_report("x", 1.0, 1.05, 0.01, 0.01, budget=0.01)
    assert r["tolerance"] == pytest.approx(3 * np.sqrt(2) * 0.01 + 0.01)
    assert r["pass"] == (r["deviation"] <= r["tolerance"])
    assert not identity_report("x", 1.0, 1.1, 0.01, 0.0)["pass"]
    assert exact_report("e", 1.0, 1.0 + 1e-12, 1e-10)["pass"]
    assert not exact_report("e", 1.0, 1.1, 1e-10)["pass"]
