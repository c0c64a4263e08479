"""Deterministic batched Monte Carlo and identity reports.

Samples are split into a fixed number of batches; batch ``i`` always draws
from ``stream(seed, key + (i,))`` and partial moments are merged in batch
order, so results do not depend on the thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .rng import stream

DEFAULT_BATCHES = 16


@dataclass(frozen=True)
class Estimate:
    mean: np.ndarray
    se: np.ndarray
    n: int

    def scalar(self, i=0):
        return float(np.ravel(self.mean)[i]), float(np.ravel(self.se)[i])


def _moments(values):
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    n = v.shape[0]
    mean = v.mean(axis=0)
    m2 = ((v - mean) ** 2).sum(axis=0)
    return n, mean, m2


def _merge(a, b):
    # Chan et al. pairwise update
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    d = mb - ma
    return n, ma + d * nb / n, sa + sb + d ** 2 * na * nb / n


def run_batches(fn, samples: int, seed: int, key=(), batches: int = DEFAULT_BATCHES, threads: int = 1) -> Estimate:
    """Mean and standard error of ``fn(rng, size)`` (per-sample values, 1-D or 2-D)."""
    batches = max(1, min(batches, samples))
    sizes = [samples // batches + (1 if i < samples % batches else 0) for i in range(batches)]
    key = tuple(key)

    def job(i):
        return _moments(fn(stream(seed, key + (i,)), sizes[i]))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, range(batches)))
    else:
        parts = [job(i) for i in range(batches)]
    acc = parts[0]
    for p in parts[1:]:
        acc = _merge(acc, p)
    n, mean, m2 = acc
    var = m2 / (n - 1) if n > 1 else np.zeros_like(m2)
    return Estimate(mean, np.sqrt(var / n), n)


def identity_report(identity, lhs, rhs, lhs_se=0.0, rhs_se=0.0, budget=0.0, k=3.0, **extra) -> dict:
    """PASS iff |lhs - rhs| <= k * combined s.e. + budget."""
    combined = math.sqrt(lhs_se ** 2 + rhs_se ** 2)
    deviation = abs(lhs - rhs)
    tolerance = k * combined + budget
    rep = {
        "identity": identity,
        "estimates": {"lhs": float(lhs), "rhs": float(rhs)},
        "standard_errors": {"lhs": float(lhs_se), "rhs": float(rhs_se), "combined": combined},
        "deterministic_budget": float(budget),
        "deviation": deviation,
        "tolerance": tolerance,
        "pass": bool(deviation <= tolerance),
    }
    rep.update(extra)
    return rep


def exact_report(identity, lhs, rhs, rel_tol=0.0, **extra) -> dict:
    """Deterministic comparison (no sampling): PASS iff relative deviation <= rel_tol."""
    scale = max(abs(float(lhs)), abs(float(rhs)), 1e-300)
    dev = abs(float(lhs) - float(rhs)) if lhs != rhs else 0.0
    rep = {
        "identity": identity,
        "estimates": {"lhs": float(lhs), "rhs": float(rhs)},
        "standard_errors": {"lhs": 0.0, "rhs": 0.0, "combined": 0.0},
        "deterministic_budget": rel_tol * scale,
        "deviation": dev,
        "relative_deviation": dev / scale,
        "tolerance": rel_tol * scale,
        "pass": bool(lhs == rhs or dev <= rel_tol * scale),
    }
    rep.update(extra)
    return rep
