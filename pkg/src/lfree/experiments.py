"""Seeded batches of random-matrix trials.

Trial ``i`` of a run with seed ``s`` draws everything from ``RngSpec(s, i)``
and its children, so a trial's result does not depend on how many trials
run or in which order; ``jobs > 1`` only changes wall time.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Sequence

import numpy as np

from . import closedform
from .constructions import (
    build_paving, dilate, dilation_sum_bound_check, orbit_lfree_check, paving_norm,
    sharpness_experiment,
)
from .report import ExperimentReport, Trial
from .rmt import (
    RngSpec, lfree_defect, op_norm, sample_contraction, sample_haar_unitary, sample_projection,
    sample_symmetry, tau,
)


def run_trials(fn: Callable[[RngSpec], dict], seed: int, trials: int, jobs: int = 1) -> list[dict]:
    """Evaluate ``fn`` on streams ``0..trials-1``; results come back in stream order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    specs = [RngSpec(seed, i) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, specs))
    return [fn(s) for s in specs]


def multiple_at_least(d: int, n: int) -> int:
    """Smallest multiple of ``n`` that is ``>= d``."""
    return -(-d // n) * n


def _trials_from(results, seed, target, tolerance, check) -> list[Trial]:
    out = []
    for i, r in enumerate(results):
        value = r.pop("value")
        out.append(Trial(i, seed, i, value, target, tolerance, bool(check(value)), r))
    return out


# -- strong-convergence checks ---------------------------------------------------


def _haar_sum(spec: RngSpec, kind: str, k: int, d: int) -> dict:
    us = [sample_haar_unitary(d, spec.child(i)) for i in range(k)]
    if kind == "kesten":
        total = sum(u + u.conj().T for u in us)
    else:
        total = sum(us)
    return {"value": op_norm(total)}


def haar_sum_norm(kind: str, k: int, d: int, seed: int, trials: int, tolerance: float,
                  min_pass_fraction: float, jobs: int = 1) -> ExperimentReport:
    """``||sum U_i + U_i*||`` (``kind='kesten'``) or ``||sum U_i||`` (``kind='leinert'``)."""
    if kind == "kesten":
        target = closedform.kesten_norm(k)
    elif kind == "leinert":
        target = closedform.leinert_norm(k)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    results = run_trials(partial(_haar_sum, kind=kind, k=k, d=d), seed, trials, jobs)
    return ExperimentReport(
        f"haar-norm/{kind}", {"kind": kind, "k": k, "d": d, "trials": trials}, seed,
        _trials_from(results, seed, target, tolerance, lambda v: abs(v - target) <= tolerance),
        target, tolerance, min_pass_fraction)


def _qpq(spec: RngSpec, tau_p, tau_q, d: int) -> dict:
    p = sample_projection(tau_p, d, spec.child(0))
    q = sample_projection(tau_q, d, spec.child(1))
    return {"value": op_norm(q @ p @ q)}


def qpq_experiment(tau_p, tau_q, d: int, seed: int, trials: int, tolerance: float,
                   min_pass_fraction: float = 1.0, jobs: int = 1) -> ExperimentReport:
    target = closedform.qpq_norm(float(tau_p), float(tau_q))
    results = run_trials(partial(_qpq, tau_p=tau_p, tau_q=tau_q, d=d), seed, trials, jobs)
    return ExperimentReport(
        "qpq", {"tau_p": str(tau_p), "tau_q": str(tau_q), "d": d, "trials": trials}, seed,
        _trials_from(results, seed, target, tolerance, lambda v: abs(v - target) <= tolerance),
        target, tolerance, min_pass_fraction)


def _haar_trace(spec: RngSpec, d: int) -> dict:
    return {"value": float(abs(tau(sample_haar_unitary(d, spec))))}


def haar_trace_experiment(d: int, seed: int, trials: int, threshold: float) -> ExperimentReport:
    """``|tau(U)|`` for Haar ``U``; the run passes when the median is below ``threshold``."""
    results = run_trials(partial(_haar_trace, d=d), seed, trials)
    rep = ExperimentReport("haar-trace", {"d": d, "trials": trials}, seed,
                           _trials_from(results, seed, 0.0, threshold, lambda v: v < threshold),
                           0.0, threshold, rule="median")
    rep.aggregate_pass = float(np.median(rep.values)) < threshold
    return rep


# -- paving ----------------------------------------------------------------------


def _pave(spec: RngSpec, n: int, d: int, targets: int) -> dict:
    xs = [sample_symmetry(d, spec.child(1 + t)) for t in range(targets)]
    inst = build_paving(n, xs[0], spec.child(0))
    norms = [paving_norm(inst.with_target(x)) for x in xs]
    return {"value": max(norms), "per_target": norms}


def pave_experiment(n: int, d: int, seed: int, trials: int, tolerance: float,
                    min_pass_fraction: float, targets: int = 1, jobs: int = 1) -> ExperimentReport:
    """Max over ``targets`` trace-zero symmetries of ``||sum p_j x p_j||`` for one shared partition."""
    if d % n:
        raise ValueError(f"d={d} is not divisible by n={n}")
    target = closedform.paving_norm_bound(n).bound
    results = run_trials(partial(_pave, n=n, d=d, targets=targets), seed, trials, jobs)
    return ExperimentReport(
        "pave", {"n": n, "d": d, "targets": targets, "trials": trials}, seed,
        _trials_from(results, seed, target, tolerance, lambda v: v <= target + tolerance),
        target, tolerance, min_pass_fraction, rule="upper_bound")


def _sharpness(spec: RngSpec, n, traces, d, tolerance, margin) -> dict:
    rep = sharpness_experiment(n, traces, d, spec, tolerance, margin)
    return {"value": rep.paving_norm, "block_norms": rep.block_norms,
            "block_targets": rep.block_targets, "ok": rep.passed}


def sharpness_batch(n: int, traces: Sequence, d: int, seed: int, trials: int, tolerance: float,
                    margin: float, jobs: int = 1) -> ExperimentReport:
    from fractions import Fraction

    fr = [Fraction(t) for t in traces]
    equal = all(t == Fraction(1, n) for t in fr)
    target = closedform.paving_norm_bound(n).bound
    results = run_trials(partial(_sharpness, n=n, traces=tuple(traces), d=d,
                                 tolerance=tolerance, margin=margin), seed, trials, jobs)
    if equal:
        check = lambda v: abs(v - target) <= tolerance  # noqa: E731
    else:
        check = lambda v: v >= target + margin  # noqa: E731
    for r in results:
        r.pop("ok")
    return ExperimentReport(
        "sharpness", {"n": n, "traces": [str(t) for t in fr], "d": d, "trials": trials}, seed,
        _trials_from(results, seed, target, tolerance if equal else margin, check),
        target, tolerance if equal else margin, rule="equality" if equal else "strict_excess")


# -- L-freeness defects ------------------------------------------------------------


def defect_operators(kind: str, n: int, d: int, spec: RngSpec) -> list:
    """The operator family whose defect is measured for ``kind``."""
    if kind == "haar":
        return [sample_haar_unitary(d, spec.child(i)) for i in range(n)]
    if kind == "dilation":
        xs = [sample_contraction(d, spec.child(i)) for i in range(n)]
        return list(dilate(xs, spec.child(100)).blocks)
    if kind == "orbit":
        return build_paving(n, sample_symmetry(d, spec.child(0)), spec.child(1)).orbit()
    raise ValueError(f"unknown defect kind {kind!r}")


def _defect(spec: RngSpec, kind, n, d, max_len) -> dict:
    ops = defect_operators(kind, n, d, spec)
    res = lfree_defect(ops, max_len=max_len, allow_duplicates=(kind == "orbit"))
    return {"value": res.max_abs_trace, "worst_word": res.to_dict()["worst_word"]}


def defect_experiment(kind: str, n: int, d: int, seed: int, trials: int, threshold: float,
                      max_len: int = 6, jobs: int = 1) -> ExperimentReport:
    """Defect of Haar families, dilation outputs or conjugation orbits; passes on the median."""
    results = run_trials(partial(_defect, kind=kind, n=n, d=d, max_len=max_len), seed, trials, jobs)
    rep = ExperimentReport(
        f"defect/{kind}", {"kind": kind, "n": n, "d": d, "max_len": max_len, "trials": trials},
        seed, _trials_from(results, seed, 0.0, threshold, lambda v: v < threshold),
        0.0, threshold, rule="median")
    rep.aggregate_pass = float(np.median(rep.values)) < threshold
    return rep


def defect_trend(kind: str, n: int, dims: Sequence[int], seed: int, trials: int,
                 max_len: int = 6, jobs: int = 1) -> dict:
    """Median defect at each dimension; passes when the medians strictly decrease."""
    reports = [defect_experiment(kind, n, d, seed, trials, math.inf, max_len, jobs) for d in dims]
    medians = [float(np.median(r.values)) for r in reports]
    return {"kind": kind, "n": n, "dims": list(dims), "max_len": max_len, "trials": trials,
            "seed": seed, "medians": medians,
            "per_dim": [r.to_dict()["summary"] for r in reports],
            "pass": all(a > b for a, b in zip(medians, medians[1:]))}


# -- dilation norm bounds ------------------------------------------------------------


def _dilation_bounds(spec: RngSpec, n, d, tolerance) -> dict:
    xs = [sample_contraction(d, spec.child(i)) for i in range(n)]
    res = dilate(xs, spec.child(100))
    alphas = [1 / math.sqrt(n)] * n
    checks = dilation_sum_bound_check(res, alphas, tolerance)
    by_name = {c.name: c.to_dict() for c in checks}
    return {"value": by_name["sum_x"]["value"], "checks": by_name,
            "unitarity_residual": res.unitarity_residual,
            "all_pass": all(c.passed for c in checks)}


def dilation_experiment(n: int, d: int, seed: int, trials: int, tolerance: float,
                        jobs: int = 1) -> ExperimentReport:
    """Norm bounds on sums of dilated contractions and of their corners."""
    target = closedform.leinert_norm(n)
    results = run_trials(partial(_dilation_bounds, n=n, d=d, tolerance=tolerance), seed, trials, jobs)
    trials_out = []
    for i, r in enumerate(results):
        value = r.pop("value")
        ok = r.pop("all_pass")
        trials_out.append(Trial(i, seed, i, value, target, tolerance, ok, r))
    return ExperimentReport("dilate", {"n": n, "d": d, "trials": trials}, seed, trials_out,
                            target, tolerance, rule="all_bounds")


__all__ = [
    "defect_experiment", "defect_operators", "defect_trend", "dilation_experiment",
    "haar_sum_norm", "haar_trace_experiment", "multiple_at_least", "pave_experiment",
    "qpq_experiment", "run_trials", "sharpness_batch",
]
