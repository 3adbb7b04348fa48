"""Command-line front end: seeded batch runs with JSON or CSV reports.

Exit codes: 0 success, 1 usage or validation error, 2 a mathematical check
failed (a bound violated, a construction identity broken, a failed gate).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import calibration, closedform
from . import experiments as ex
from .folding import leinert_exact
from .moments import (
    Convolver, GaussianRational, SupportCapExceeded, _is_uniform_laplacian, kesten_laplacian, moment_table, running_lower_bounds,
)
from .report import CSV_COLUMNS, ExperimentReport, envelope, rows_to_csv, to_json
from .words import (
    NOT_LEINERT, GroupPresentation, WordError, leinert_bounded, parse_word, read_word_list,
    render_word,
)

EXIT_OK, EXIT_INVALID, EXIT_MATH = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- argument helpers ------------------------------------------------------------


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _complex_list(text: str) -> list[complex]:
    try:
        return [complex(t.replace("i", "j")) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad coefficient list {text!r}") from exc


def _load_words(args):
    """Presentation and (word, coefficient) pairs from ``--words FILE`` and/or ``--word``."""
    pres = GroupPresentation.from_header(args.group) if args.group else None
    items = []
    if args.words:
        try:
            text = Path(args.words).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read word list: {exc}") from exc
        file_pres, items = read_word_list(text)
        if pres is not None and pres != file_pres:
            raise UsageError(f"--group {pres.header()} disagrees with file header {file_pres.header()}")
        pres = file_pres
    if args.word:
        if pres is None:
            raise UsageError("--word needs --group (or a --words file with a header)")
        items += [(parse_word(w, pres), None) for w in args.word]
    if pres is None or not items:
        raise UsageError("no words given (use --words FILE or --word W)")
    return pres, items


def _convolver(args) -> Convolver:
    if args.laplacian is not None:
        if args.words or args.word:
            raise UsageError("--laplacian excludes --words/--word")
        return kesten_laplacian(args.laplacian)
    pres, items = _load_words(args)
    terms = []
    for w, c in items:
        if c is None:
            coeff = 1
        else:
            try:
                coeff = GaussianRational.parse(c)
            except ValueError:
                try:
                    coeff = complex(c.replace("i", "j"))
                except ValueError as exc:
                    raise UsageError(f"bad coefficient {c!r}") from exc
        terms.append((coeff, w))
    return Convolver.from_terms(pres, terms)


def _gate(name: str, key: str, override):
    if override is not None:
        return override
    return calibration.check(name)[key]


# -- commands ----------------------------------------------------------------------


def cmd_leinert(args):
    pres, items = _load_words(args)
    words = [w for w, _ in items]
    out = {"group": pres.header(), "words": [render_word(w, pres) for w in words]}
    verdicts = {}
    if args.mode in ("exact", "both"):
        verdicts["exact"] = leinert_exact(words, pres)
    if args.mode in ("bounded", "both"):
        verdicts["bounded"] = leinert_bounded(words, pres, args.depth)
    out.update({k: v.to_dict() for k, v in verdicts.items()})
    rows = [{"mode": k, "status": v.status, "method": v.method,
             "witness": None if v.witness is None else " ".join(map(str, v.witness))}
            for k, v in verdicts.items()]
    failure = None
    if len(verdicts) == 2:
        e, b = verdicts["exact"], verdicts["bounded"]
        agree = not (e.status == "leinert" and b.status == NOT_LEINERT)
        out["agree"] = agree
        if not agree:
            failure = "exact and bounded verdicts contradict"
    return out, rows, ("mode", "status", "method", "witness"), failure


def cmd_moment(args):
    L = _convolver(args)
    records = moment_table(L, args.max_m, args.cap)
    running = running_lower_bounds(records)
    table = []
    for r, best in zip(records, running):
        row = r.to_dict()
        row["running_lower_bound"] = best
        row["method"] = r.method
        table.append(row)
    cols = ("m", "value", "lower_bound", "running_lower_bound", "provenance", "method")
    return table, table, cols, None


def _closed_form_target(L: Convolver):
    """The closed-form norm for Kesten Laplacians and Leinert indicator sets, if either applies."""
    pres = L.presentation
    lap = _is_uniform_laplacian(L)
    if lap is not None:
        k, c = lap
        return "kesten_norm", math.sqrt(c.abs2()) * closedform.kesten_norm(k)
    coeffs = {c for c, _ in L.terms}
    if pres.is_free and len(L.terms) >= 2 and coeffs == {GaussianRational(1)}:
        if leinert_exact(list(L.support), pres).status == "leinert":
            return "leinert_norm", closedform.leinert_norm(len(L.terms))
    return None, None


def cmd_norm_bound(args):
    L = _convolver(args)
    records = moment_table(L, args.m, args.cap)
    best = running_lower_bounds(records)[-1]
    name, target = _closed_form_target(L)
    out = {"m": args.m, "lower_bound": best, "provenance": "exact" if L.exact else "float",
           "per_m": [r.lower_bound for r in records], "closed_form": name, "target": target}
    failure = None
    if target is not None:
        out["ratio"] = best / target if target else None
        out["below_target"] = best <= target + 1e-12
        if not out["below_target"]:
            failure = f"moment lower bound {best} exceeds closed form {target}"
    row = {k: out[k] for k in ("m", "lower_bound", "closed_form", "target", "provenance")}
    return out, [row], tuple(row), failure


CLOSED_FORMS = ("kesten", "leinert", "coefficient", "qpq", "qvq", "paving-bound", "paving-size")


def cmd_closed_form(args):
    f = args.function
    need = {"kesten": ["k"], "leinert": ["n"], "coefficient": ["n", "alphas"], "qpq": ["tau_p", "tau_q"],
            "qvq": ["tau_q"], "paving-bound": ["n"], "paving-size": ["epsilon"]}[f]
    for key in need:
        if getattr(args, key) is None:
            raise UsageError(f"{f} needs --{key.replace('_', '-')}")
    out = {"function": f, "provenance": "float"}
    if f == "kesten":
        out["value"] = closedform.kesten_norm(args.k)
    elif f == "leinert":
        out["value"] = closedform.leinert_norm(args.n)
        if args.n == 1:
            out["note"] = "formula value; a single unitary has norm 1"
    elif f == "coefficient":
        out["value"] = closedform.coefficient_bound(args.n, args.alphas)
    elif f == "qpq":
        out["value"] = closedform.qpq_norm(float(args.tau_p), float(args.tau_q))
    elif f == "qvq":
        out["value"] = closedform.qvq_norm(float(args.tau_q))
    elif f == "paving-bound":
        out["value"] = closedform.paving_norm_bound(args.n).bound
    else:
        ps = closedform.paving_size(args.epsilon)
        out.update({"value": ps.n, "vacuous": ps.vacuous, "provenance": "exact"})
    return out, [out], tuple(out), None


def _report_result(rep: ExperimentReport):
    failure = None if rep.passed else f"{rep.command}: gate failed (pass fraction {rep.pass_fraction:.2f})"
    return rep.to_dict(), rep.csv_rows(), CSV_COLUMNS, failure


def cmd_dilate(args):
    tol = _gate("dilation_sum", "tolerance", args.tolerance)
    return _report_result(ex.dilation_experiment(args.n, args.d, args.seed, args.trials, tol, args.jobs))


def cmd_pave(args):
    tol = _gate("paving", "tolerance", args.tolerance)
    frac = _gate("paving", "min_pass_fraction", args.min_pass_fraction)
    d = ex.multiple_at_least(args.d, args.n) if args.adjust_d else args.d
    return _report_result(ex.pave_experiment(args.n, d, args.seed, args.trials, tol, frac,
                                             args.targets, args.jobs))


def cmd_sharpness(args):
    cal = calibration.check("sharpness")
    traces = args.traces or [Fraction(1, args.n)] * args.n
    tol = args.tolerance if args.tolerance is not None else cal["tolerance"]
    margin = args.margin if args.margin is not None else cal["margin"]
    return _report_result(ex.sharpness_batch(args.n, traces, args.d, args.seed, args.trials, tol,
                                             margin, args.jobs))


def cmd_qpq(args):
    tol = _gate("qpq", "tolerance", args.tolerance)
    frac = _gate("qpq", "min_pass_fraction", args.min_pass_fraction)
    return _report_result(ex.qpq_experiment(args.tau_p, args.tau_q, args.d, args.seed, args.trials,
                                            tol, frac, args.jobs))


def cmd_haar_norm(args):
    name = "kesten_matrix" if args.kind == "kesten" else "akemann_ostrand"
    tol = _gate(name, "tolerance", args.tolerance)
    frac = _gate(name, "min_pass_fraction", args.min_pass_fraction)
    return _report_result(ex.haar_sum_norm(args.kind, args.k, args.d, args.seed, args.trials,
                                           tol, frac, args.jobs))


def cmd_defect(args):
    if args.trend:
        res = ex.defect_trend(args.kind, args.n, args.trend, args.seed, args.trials, args.max_len, args.jobs)
        rows = [{"d": d, "median": m} for d, m in zip(res["dims"], res["medians"])]
        failure = None if res["pass"] else "defect medians do not decrease"
        return res, rows, ("d", "median"), failure
    threshold = _gate(f"{args.kind}_defect", "threshold", args.threshold)
    return _report_result(ex.defect_experiment(args.kind, args.n, args.d, args.seed, args.trials,
                                               threshold, args.max_len, args.jobs))


def cmd_calibrate(args):
    data = calibration.run_calibration(args.seed, args.jobs,
                                       progress=lambda m: print(m, file=sys.stderr, flush=True))
    failure = "; ".join(data["warnings"]) or None
    return data, [], (), failure


# -- parser ------------------------------------------------------------------------


def _common(p, trials_default=1, seed_default=0):
    p.add_argument("--seed", type=int, default=seed_default, help="64-bit seed")
    p.add_argument("--trials", type=_positive_int, default=trials_default)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--comparison", action="store_true", help="omit the timestamp field")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes for trials")
    p.add_argument("--calibration", help="calibration fixture path (overrides $LFREE_CALIBRATION)")


def _word_inputs(p, laplacian=False):
    p.add_argument("--group", help="presentation, e.g. Z,Z or Z,C2")
    p.add_argument("--words", help="word-list file")
    p.add_argument("--word", action="append", help="inline word (repeatable)")
    if laplacian:
        p.add_argument("--laplacian", type=_positive_int, metavar="K",
                       help="Kesten Laplacian of F_K instead of a word list")
        p.add_argument("--cap", type=_positive_int, default=10_000_000, help="support size cap")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lfree", description=__doc__.splitlines()[0])
    from . import __version__
    parser.add_argument("--version", action="version", version=f"lfree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("leinert", help="decide the Leinert property of a word set")
    _word_inputs(p)
    p.add_argument("--mode", choices=("exact", "bounded", "both"), default="exact")
    p.add_argument("--depth", type=_positive_int, default=6, help="bounded search depth K")
    _common(p)
    p.set_defaults(func=cmd_leinert)

    p = sub.add_parser("moment", help="exact moments tau((L*L)^m) for m = 1..max-m")
    _word_inputs(p, laplacian=True)
    p.add_argument("--max-m", type=_positive_int, default=10)
    _common(p)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("norm-bound", help="certified norm lower bound from moments")
    _word_inputs(p, laplacian=True)
    p.add_argument("--m", type=_positive_int, default=10)
    _common(p)
    p.set_defaults(func=cmd_norm_bound)

    p = sub.add_parser("closed-form", help="evaluate a closed-form norm value")
    p.add_argument("function", choices=CLOSED_FORMS)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--tau-p", type=_fraction)
    p.add_argument("--tau-q", type=_fraction)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alphas", type=_complex_list)
    _common(p)
    p.set_defaults(func=cmd_closed_form)

    def experiment(name, func, help_text, trials=20):
        p = sub.add_parser(name, help=help_text)
        _common(p, trials_default=trials)
        p.add_argument("--tolerance", type=float)
        p.set_defaults(func=func)
        return p

    p = experiment("dilate", cmd_dilate, "dilate random contractions and check the sum bounds", trials=5)
    p.add_argument("--n", type=_positive_int, default=4)
    p.add_argument("--d", type=_positive_int, default=100)

    p = experiment("pave", cmd_pave, "pave trace-zero symmetries with a random partition")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--d", type=_positive_int, default=400)
    p.add_argument("--targets", type=_positive_int, default=1)
    p.add_argument("--adjust-d", action="store_true", help="round d up to a multiple of n")
    p.add_argument("--min-pass-fraction", type=float)

    p = experiment("sharpness", cmd_sharpness, "paving norm of a free symmetry for given traces", trials=5)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--traces", type=lambda s: [_fraction(t) for t in s.split(",")])
    p.add_argument("--d", type=_positive_int, default=600)
    p.add_argument("--margin", type=float)

    p = experiment("qpq", cmd_qpq, "norm of qpq for randomly rotated projections")
    p.add_argument("--tau-p", type=_fraction, default=Fraction(1, 2))
    p.add_argument("--tau-q", type=_fraction, default=Fraction(1, 3))
    p.add_argument("--d", type=_positive_int, default=600)
    p.add_argument("--min-pass-fraction", type=float)

    p = experiment("haar-norm", cmd_haar_norm, "norm of sums of independent Haar unitaries")
    p.add_argument("--kind", choices=("kesten", "leinert"), default="kesten")
    p.add_argument("--k", type=_positive_int, default=2, help="number of unitaries")
    p.add_argument("--d", type=_positive_int, default=500)
    p.add_argument("--min-pass-fraction", type=float)

    p = sub.add_parser("defect", help="L-freeness defect of Haar families, dilations or orbits")
    p.add_argument("--kind", choices=("haar", "dilation", "orbit"), default="haar")
    p.add_argument("--n", type=_positive_int, default=3)
    p.add_argument("--d", type=_positive_int, default=300)
    p.add_argument("--max-len", type=_positive_int, default=6)
    p.add_argument("--threshold", type=float)
    p.add_argument("--trend", type=lambda s: [int(t) for t in s.split(",")],
                   help="comma-separated dimensions; report medians instead of a gate")
    _common(p, trials_default=20)
    p.set_defaults(func=cmd_defect)

    p = sub.add_parser("calibrate", help="rerun the calibration checks and emit a fixture")
    _common(p, seed_default=calibration.CALIBRATION_SEED)
    p.set_defaults(func=cmd_calibrate)
    return parser


def _config(args) -> dict:
    skip = {"func", "comparison", "calibration"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, list):
            v = [str(x) if isinstance(x, (Fraction, complex)) else x for x in v]
        out[k] = v
    return out


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    saved_env = os.environ.get(calibration.ENV_VAR)
    try:
        args = build_parser().parse_args(argv)
        if args.calibration:
            os.environ[calibration.ENV_VAR] = args.calibration
        result, rows, columns, failure = args.func(args)
    except UsageError as exc:
        print(f"lfree: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (WordError, closedform.DomainError, ValueError, OSError, SupportCapExceeded) as exc:
        print(f"lfree: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (AssertionError, ArithmeticError, RuntimeError) as exc:
        print(f"lfree: check failed: {exc}", file=sys.stderr)
        return EXIT_MATH
    finally:
        if saved_env is None:
            os.environ.pop(calibration.ENV_VAR, None)
        else:
            os.environ[calibration.ENV_VAR] = saved_env
    if args.format == "csv" and args.command != "calibrate":
        text = rows_to_csv(rows, columns)
    else:
        payload = result if args.command == "calibrate" else envelope(_config(args), result, args.comparison)
        text = to_json(payload)
    if args.output:
        Path(args.output).write_text(text)
    else:
        stdout.write(text)
    if failure:
        print(f"lfree: check failed: {failure}", file=sys.stderr)
        return EXIT_MATH
    return EXIT_OK


def main(argv=None) -> int:
    return run(argv)


__all__ = ["EXIT_INVALID", "EXIT_MATH", "EXIT_OK", "build_parser", "main", "run"]
