"""Batch runner: one verification suite per invocation, machine-readable report.

Exit codes: 0 all identities pass, 1 some identity fails, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import suites as S
from .config import ExperimentSpec, load_config, replace
from .errors import ConfigError, DomainError
from .measures import FiniteDiscrete, GammaLevy
from .window import Window

SCHEMA = 1
DEFAULT_SEED = 20261018
DEFAULT_SAMPLES = 100_000
DEFAULT_EPSILON = 1e-3
GRID = [(n, m) for n in range(4) for m in range(4)]


def _orders(spec):
    if spec.n is not None and spec.m is not None:
        return [(spec.n, spec.m)]
    if spec.n is not None:
        return [(spec.n, spec.n)]
    return GRID


def _eps(spec):
    return float(spec.epsilon) if spec.epsilon is not None else DEFAULT_EPSILON


def run(spec: ExperimentSpec) -> dict:
    """Execute the suite named in ``spec``; failures are reported, not raised."""
    if spec.suite is None:
        raise ConfigError("no suite given")
    if spec.suite not in S.SUITES:
        raise ConfigError(f"unknown suite {spec.suite!r}")
    seed = spec.seed if spec.seed is not None else DEFAULT_SEED
    samples = spec.samples if spec.samples is not None else DEFAULT_SAMPLES
    threads = spec.threads or 1
    try:
        sigma = spec.intensity(Window.interval(0, 2))
    except DomainError as e:
        raise ConfigError(str(e)) from None
    name = spec.suite

    try:
        if name == "laplace-check":
            rho = spec.levy_measure() or FiniteDiscrete.unit()
            fs = spec.functions or tuple(S.default_laplace_functions(S.laplace_kind(rho)))
            res = S.laplace_check(sigma, rho, fs, samples, seed, threads)
        elif name == "mecke":
            cases = S.default_mecke_cases()
            if spec.phi is not None:
                cases = [(spec.phi, h) for _, h in cases]
            res = S.mecke_suite(sigma, cases, samples, seed, threads)
        elif name == "rn":
            etas, Fs = S.default_rn_cases()
            res = S.rn_suite(sigma, spec.eta or etas, Fs, samples, seed, threads)
        elif name == "charlier-orth":
            pairs = [(spec.phi, spec.psi)] if spec.phi is not None and spec.psi is not None else S.default_charlier_pairs()
            res = S.charlier_orth_suite(sigma, pairs, _orders(spec), samples, seed, threads)
        elif name == "creation-iterate":
            phi = spec.phi if spec.phi is not None else Fraction(1, 2) * S.X - Fraction(3, 10)
            n = spec.n if spec.n is not None else 5
            res = S.creation_iterate_suite(sigma, phi, n, spec.configs or 1000, seed)
        elif name == "fock-bounds":
            res = S.fock_bounds_suite(sigma, spec.vectors or 1000, samples, seed, threads=threads)
        elif name == "usigma-isometry":
            rhos = [spec.levy_measure()] if spec.levy is not None else [FiniteDiscrete.telegraph(), GammaLevy(_eps(spec))]
            res = S.usigma_suite(sigma, rhos, S.default_cylinders(), samples, seed, threads)
        elif name == "cp-operators":
            res = S.cp_operators_suite(sigma, samples, seed, threads)
        elif name == "gamma-inner-threepath":
            phi, psi = S.default_gamma_polynomials()
            phi = spec.phi if spec.phi is not None else phi
            psi = spec.psi if spec.psi is not None else psi
            res = S.gamma_threepath_suite(sigma, phi, psi, spec.n if spec.n is not None else 8)
        elif name == "laguerre-orth":
            phi, psi = S.default_laguerre_pair()
            phi = spec.phi if spec.phi is not None else phi
            psi = spec.psi if spec.psi is not None else psi
            res = S.laguerre_orth_suite(sigma, phi, psi, _orders(spec), _eps(spec), samples, seed, threads)
        else:  # laguerre-classical
            T = spec.T if spec.T is not None else 2
            c = spec.c if spec.c is not None else Fraction(3, 10)
            res = S.laguerre_classical_suite(T, float(c), spec.configs or 1000, seed, _eps(spec))
    except DomainError as e:
        raise ConfigError(str(e)) from None
    return {
        "schema": SCHEMA,
        "suite": name,
        "seed": seed,
        "samples": samples,
        "inputs": spec.to_text(),
        **{k: v for k, v in res.items() if k != "suite"},
    }


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def to_json(report) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (np.bool_, bool)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


CSV_FIELDS = ("identity", "lhs", "rhs", "combined_se", "deterministic_budget", "deviation", "tolerance", "pass")


def to_csv(report) -> str:
    buf = io.StringIO()
    if "table" in report:
        rows = report["table"]
        fields = list(rows[0].keys())
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})
        return buf.getvalue()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in report["identities"]:
        est = r.get("estimates", {})
        se = r.get("standard_errors", {})
        vals = (r["identity"], est.get("lhs"), est.get("rhs"), se.get("combined"), r.get("deterministic_budget"),
                r.get("deviation", r.get("max_relative_deviation", r.get("violations"))), r.get("tolerance"), r["pass"])
        w.writerow([_cell(v) for v in vals])
    return buf.getvalue()


def build_parser():
    p = argparse.ArgumentParser(prog="poisson-chaos", description="Run one verification suite and write a report.")
    p.add_argument("--spec", help="configuration file")
    p.add_argument("--suite", help="suite name (overrides the configuration)")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--threads", type=int)
    p.add_argument("--timing", action="store_true", help="record wall time in the report")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_config(args.spec) if args.spec else ExperimentSpec()
        if args.suite is not None:
            if args.suite not in S.SUITES:
                raise ConfigError(f"unknown suite {args.suite!r}")
            spec = replace(spec, suite=args.suite)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        spec = replace(spec, seed=args.seed, samples=args.samples, out=args.out, format=args.format, threads=args.threads)
        t0 = time.perf_counter()
        report = run(spec)
        if args.timing:
            report["wall_time"] = time.perf_counter() - t0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    text = to_csv(report) if (spec.format or "json") == "csv" else to_json(report)
    if spec.out:
        with open(spec.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for r in report["identities"]:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['identity']}", file=sys.stderr)
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
