"""Versioned tolerances for the finite-dimensional freeness checks.

The packaged fixture ``data/calibration.json`` holds, for every check, its
parameters, the tolerance used to gate it and the statistics observed in the
calibration run that produced the fixture (``lfree calibrate``).  Set
``LFREE_CALIBRATION`` to a path to use a different fixture.
"""

from __future__ import annotations

import copy
import json
import os
from importlib import resources
from pathlib import Path

import numpy as np

ENV_VAR = "LFREE_CALIBRATION"
FIXTURE_VERSION = 1
CALIBRATION_SEED = 90210

# Gate values before observation; a calibration run only records statistics
# next to them and flags any check whose observed spread exceeds its gate.
DEFAULTS: dict[str, dict] = {
    "haar_trace": {"params": {"d": 200, "trials": 50}, "threshold": 0.15},
    "kesten_matrix": {"params": {"k": 2, "d": 500, "trials": 20},
                      "tolerance": 0.25, "min_pass_fraction": 0.9},
    "akemann_ostrand": {"params": {"n": 4, "d": 400, "trials": 20},
                        "tolerance": 0.25, "min_pass_fraction": 1.0},
    "qpq": {"params": {"tau_p": "1/2", "tau_q": "1/3", "d": 600, "trials": 20},
            "tolerance": 0.05, "min_pass_fraction": 1.0},
    "paving": {"params": {"ns": [3, 4, 5, 6], "d": 420, "targets": 5, "trials": 20},
               "tolerance": 0.1, "min_pass_fraction": 0.9},
    "sharpness": {"params": {"n": 3, "d": 600, "trials": 5},
                  "tolerance": 0.05, "margin": 0.03},
    "haar_defect": {"params": {"n": 4, "d": 300, "max_len": 6, "trials": 20}, "threshold": 0.15},
    "dilation_defect": {"params": {"n": 3, "d": 300, "max_len": 6, "trials": 20}, "threshold": 0.15},
    "orbit_defect": {"params": {"n": 2, "d": 300, "max_len": 6, "trials": 20}, "threshold": 0.15},
    "dilation_sum": {"params": {"n": 4, "d": 300, "trials": 10}, "tolerance": 0.2},
    "defect_trend": {"params": {"dims": [150, 300, 600], "trials": 20,
                                "dilation": {"n": 2, "max_len": 4},
                                "orbit": {"n": 3, "max_len": 6}}},
}


def fixture_path() -> Path | None:
    override = os.environ.get(ENV_VAR)
    return Path(override) if override else None


def load(path: str | os.PathLike | None = None) -> dict:
    """Read a calibration fixture (explicit path, then the env override, then the package copy)."""
    path = path or fixture_path()
    if path is not None:
        text = Path(path).read_text()
    else:
        text = resources.files("lfree").joinpath("data/calibration.json").read_text()
    data = json.loads(text)
    if data.get("fixture_version") != FIXTURE_VERSION:
        raise ValueError(f"unsupported calibration fixture version {data.get('fixture_version')!r}")
    missing = set(DEFAULTS) - set(data["checks"])
    if missing:
        raise ValueError(f"calibration fixture lacks checks {sorted(missing)}")
    return data


def check(name: str, path=None) -> dict:
    return load(path)["checks"][name]


def _stats(values) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"median": float(np.median(arr)), "q10": float(np.quantile(arr, 0.1)),
            "q90": float(np.quantile(arr, 0.9)), "min": float(arr.min()), "max": float(arr.max())}


def run_calibration(seed: int = CALIBRATION_SEED, jobs: int = 1, progress=None) -> dict:
    """Run every check at its default parameters and record what was observed."""
    from . import closedform, experiments as ex

    say = progress or (lambda msg: None)
    checks = copy.deepcopy(DEFAULTS)

    def record(name, values, deviation=None, **more):
        obs = _stats(values)
        if deviation is not None:
            obs["max_abs_deviation"] = float(np.max(np.abs(deviation)))
            obs["q90_abs_deviation"] = float(np.quantile(np.abs(deviation), 0.9))
        obs.update(more)
        checks[name]["observed"] = obs
        say(f"{name}: {obs}")

    p = checks["haar_trace"]["params"]
    rep = ex.haar_trace_experiment(p["d"], seed, p["trials"], checks["haar_trace"]["threshold"])
    record("haar_trace", rep.values)

    p = checks["kesten_matrix"]["params"]
    rep = ex.haar_sum_norm("kesten", p["k"], p["d"], seed, p["trials"], 0.25, 0.9, jobs)
    record("kesten_matrix", rep.values, np.subtract(rep.values, rep.target))

    p = checks["akemann_ostrand"]["params"]
    rep = ex.haar_sum_norm("leinert", p["n"], p["d"], seed, p["trials"], 0.25, 1.0, jobs)
    record("akemann_ostrand", rep.values, np.subtract(rep.values, rep.target))

    p = checks["qpq"]["params"]
    from fractions import Fraction
    rep = ex.qpq_experiment(Fraction(p["tau_p"]), Fraction(p["tau_q"]), p["d"], seed, p["trials"], 0.05,
                            jobs=jobs)
    record("qpq", rep.values, np.subtract(rep.values, rep.target))

    p = checks["paving"]["params"]
    per_n = {}
    for n in p["ns"]:
        d = ex.multiple_at_least(p["d"], n)
        rep = ex.pave_experiment(n, d, seed, p["trials"], 0.1, 0.9, p["targets"], jobs)
        per_n[str(n)] = {**_stats(np.subtract(rep.values, rep.target)), "d": d}
        say(f"paving n={n}: excess over bound {per_n[str(n)]}")
    checks["paving"]["observed"] = {"excess_over_bound": per_n}

    p = checks["sharpness"]["params"]
    n = p["n"]
    eq = ex.sharpness_batch(n, [Fraction(1, n)] * n, p["d"], seed, p["trials"], 0.05, 0.03, jobs)
    uneq = ex.sharpness_batch(n, ["1/2", "1/4", "1/4"], p["d"], seed, p["trials"], 0.05, 0.03, jobs)
    bound = closedform.paving_norm_bound(n).bound
    checks["sharpness"]["observed"] = {
        "equal_abs_deviation": _stats(np.abs(np.subtract(eq.values, bound))),
        "unequal_excess": _stats(np.subtract(uneq.values, bound)),
    }
    say(f"sharpness: {checks['sharpness']['observed']}")

    for name, kind in (("haar_defect", "haar"), ("dilation_defect", "dilation"),
                       ("orbit_defect", "orbit")):
        p = checks[name]["params"]
        rep = ex.defect_experiment(kind, p["n"], p["d"], seed, p["trials"], checks[name]["threshold"],
                                   p["max_len"], jobs)
        record(name, rep.values)

    p = checks["dilation_sum"]["params"]
    rep = ex.dilation_experiment(p["n"], p["d"], seed, p["trials"], checks["dilation_sum"]["tolerance"], jobs)
    # one-sided bounds: only the excess over the bound matters
    record("dilation_sum", rep.values, max_excess=float(np.max(np.subtract(rep.values, rep.target))),
           pass_fraction=rep.pass_fraction)

    p = checks["defect_trend"]["params"]
    trend = {}
    for kind in ("dilation", "orbit"):
        cfg = p[kind]
        res = ex.defect_trend(kind, cfg["n"], p["dims"], seed, p["trials"], cfg["max_len"], jobs)
        trend[kind] = {"medians": res["medians"], "decreasing": res["pass"]}
        say(f"defect_trend {kind}: {trend[kind]}")
    checks["defect_trend"]["observed"] = trend

    from . import __version__
    return {
        "fixture_version": FIXTURE_VERSION,
        "tool_version": __version__,
        "calibration": {"seed": seed, "command": f"lfree calibrate --seed {seed}",
                        "numpy": np.__version__},
        "checks": checks,
        "warnings": _gate_warnings(checks),
    }


def _gate_warnings(checks: dict) -> list[str]:
    out = []
    for name in ("kesten_matrix", "akemann_ostrand", "qpq"):
        obs = checks[name].get("observed", {})
        if obs.get("q90_abs_deviation", 0.0) > checks[name]["tolerance"]:
            out.append(f"{name}: q90 deviation {obs['q90_abs_deviation']:.3g} exceeds tolerance")
    obs = checks["dilation_sum"].get("observed", {})
    if obs.get("max_excess", 0.0) > checks["dilation_sum"]["tolerance"] or obs.get("pass_fraction", 1.0) < 1.0:
        out.append("dilation_sum: a sum bound was exceeded beyond tolerance")
    for name in ("haar_trace", "haar_defect", "dilation_defect", "orbit_defect"):
        obs = checks[name].get("observed", {})
        if obs.get("median", 0.0) >= checks[name]["threshold"]:
            out.append(f"{name}: median {obs['median']:.3g} reaches threshold")
    return out


__all__ = ["CALIBRATION_SEED", "DEFAULTS", "ENV_VAR", "check", "load", "run_calibration"]
