"""Experiment reports: per-trial values, summary statistics, JSON and CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Sequence

import numpy as np

from . import __version__

TIMESTAMP_KEY = "timestamp"


@dataclass(frozen=True)
class Trial:
    index: int
    seed: int
    stream: int
    value: float
    target: float
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)

    @property
    def provenance(self) -> str:
        return f"sampled({self.seed},{self.stream})"

    def to_dict(self) -> dict:
        out = {"trial": self.index, "stream": self.stream, "value": self.value,
               "provenance": self.provenance, "pass": self.passed}
        out.update(self.extra)
        return out


def summarize(values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return {"median": None, "q10": None, "q90": None}
    return {"median": float(np.median(arr)), "q10": float(np.quantile(arr, 0.1)),
            "q90": float(np.quantile(arr, 0.9))}


@dataclass
class ExperimentReport:
    """Outcome of a seeded batch of trials.

    ``passed`` is decided by ``min_pass_fraction`` of the per-trial checks
    unless an aggregate rule was applied by the caller (``rule``).
    """

    command: str
    params: dict
    seed: int
    trials: list[Trial]
    target: float
    tolerance: float
    min_pass_fraction: float = 1.0
    rule: str = "per_trial"
    aggregate_pass: bool | None = None
    extra: dict = field(default_factory=dict)

    @property
    def values(self) -> list[float]:
        return [t.value for t in self.trials]

    @property
    def pass_fraction(self) -> float:
        return sum(t.passed for t in self.trials) / len(self.trials) if self.trials else 0.0

    @property
    def passed(self) -> bool:
        if self.aggregate_pass is not None:
            return self.aggregate_pass
        return self.pass_fraction >= self.min_pass_fraction - 1e-12

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "per_trial": [t.to_dict() for t in self.trials],
            "summary": summarize(self.values),
            "targets": {"paper_value": self.target, "tolerance": self.tolerance,
                        "min_pass_fraction": self.min_pass_fraction, "rule": self.rule},
            "pass_fraction": self.pass_fraction,
            "pass": self.passed,
        }
        out.update(self.extra)
        return out

    def csv_rows(self) -> list[dict]:
        return [{"trial": t.index, "seed": t.seed, "stream": t.stream, "value": t.value,
                 "target": t.target, "tolerance": t.tolerance, "pass": t.passed}
                for t in self.trials]


CSV_COLUMNS = ("trial", "seed", "stream", "value", "target", "tolerance", "pass")


def _clean(obj: Any) -> Any:
    """Make a payload JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def envelope(config: dict, result: Any, comparison: bool = False) -> dict:
    """Wrap a result with the resolved config, version and (unless comparing) a timestamp."""
    out = {"tool": "lfree", "version": __version__, "config": config, "result": result}
    if not comparison:
        out[TIMESTAMP_KEY] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return _clean(out)


def to_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def strip_timestamp(payload: dict) -> dict:
    return {k: v for k, v in payload.items() if k != TIMESTAMP_KEY}


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in columns})
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(_clean(v), sort_keys=True)
    return v


__all__ = ["CSV_COLUMNS", "ExperimentReport", "Trial", "envelope", "rows_to_csv",
           "strip_timestamp", "summarize", "to_json"]
