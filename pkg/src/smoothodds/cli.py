"""Command-line entry point: ``smoothodds {roc,calibrate,evaluate,apply,curve-export,synth}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import os
import sys
import warnings
from typing import Iterator, Sequence, TextIO

import numpy as np

from . import dataset as dsmod
from .calibrator import DEFAULT_P_STEP, DEFAULT_TOLERANCE, SearchGrid, assemble_result, calibrate_all
from .curvelab import CurveFamily, construct, derivative, eval_phi
from .decider import decide_arrays
from .errors import SmoothOddsError
from .resultio import dumps, fmt_float, load_result, result_to_json, save_result
from .roc import roc_curve

CSV_DIGITS = 9


class CliError(Exception):
    def __init__(self, operation: str, cause: BaseException):
        self.operation = operation
        self.cause = cause
        super().__init__(f"{operation}: {cause}")


@contextlib.contextmanager
def stage(operation: str) -> Iterator[None]:
    """Tag any library error raised inside with the module operation that failed."""
    try:
        yield
    except CliError:
        raise
    except (SmoothOddsError, ValueError, KeyError, OSError) as exc:
        raise CliError(operation, exc) from exc


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v), CSV_DIGITS)
    return str(v)


@contextlib.contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _write_csv(path: str | None, header: Sequence[str], rows) -> None:
    with _output(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _load(args) -> dsmod.Dataset:
    with stage("dataset.load_csv"):
        schema = dsmod.CsvSchema.parse(args.schema) if args.schema else dsmod.CsvSchema()
        return dsmod.load_csv(args.input, schema)


def _grid(args) -> SearchGrid:
    with stage("calibrator.SearchGrid"):
        return SearchGrid.with_step(args.p_step, tolerance=args.tolerance, threshold_stride=args.threshold_stride)


# --- subcommands ------------------------------------------------------------


def cmd_roc(args) -> int:
    ds = _load(args)
    rows = []
    for g in ds.groups:
        with stage(f"roc.roc_curve (group {g!r})"):
            dist = dsmod.group_distribution(ds, g)
            if args.kind == "conditional":
                rows += [(g, r, v) for r, v in dsmod.conditional_probability_curve(dist)]
                continue
            roc = roc_curve(dist)
            if args.kind == "hull":
                rows += [(g, x, y) for x, y in roc.hull]
            else:
                rows += [(g, t, x, y) for t, x, y in zip(roc.thresholds, roc.fpr, roc.tpr)]
    header = {
        "roc": ["group", "threshold", "fpr", "tpr"],
        "hull": ["group", "fpr", "tpr"],
        "conditional": ["group", "score", "p_positive"],
    }[args.kind]
    if args.format == "json":
        with _output(args.out) as fh:
            fh.write(dumps([dict(zip(header, r)) for r in rows]))
    else:
        _write_csv(args.out, header, rows)
    return 0


def _print_table(result, stream: TextIO) -> None:
    stream.write(
        f"family={result.family.value} baseline={result.baseline} "
        f"target=(fpr {result.target.fpr:.6f}, tpr {result.target.tpr:.6f})\n"
    )
    stream.write(f"{'group':<14}{'t0':>9}{'t1':>9}{'p':>7}{'acc %':>10}{'EO e-4':>9}{'EOmean e-4':>12}{'L_R':>10}\n")
    for g, cp in result.rules.items():
        m = result.metrics[g]
        flag = "" if result.within_tolerance[g] else "  (misses target)"
        stream.write(
            f"{g:<14}{cp.t0:>9.4g}{cp.t1:>9.4g}{cp.p:>7.3f}{100 * m.expected_accuracy:>10.3f}"
            f"{1e4 * m.eo_gap:>9.3f}{1e4 * m.eo_gap_mean:>12.3f}{m.lipschitz:>10.4g}{flag}\n"
        )
    stream.write(f"max pairwise EO gap: {result.max_eo_gap:.3e}\n")
    if result.odds_report is not None:
        bad = result.odds_report.violations()
        state = "satisfied" if not bad else f"violated for {len(bad)} ordered pair(s)"
        stream.write(f"individual odds: {state}\n")
        for a, b in bad:
            stream.write(f"  {a} -> {b}: {result.metrics[a].odds_image} not within {result.metrics[b].odds_image}\n")


def cmd_calibrate(args) -> int:
    ds = _load(args)
    grid = _grid(args)
    with stage("calibrator.calibrate_all"):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = calibrate_all(ds, args.family, grid)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    with stage("calibrator.save_result"):
        save_result(result, args.out)
    _print_table(result, sys.stdout)
    return 0


def _mismatches(stored, result) -> list[str]:
    out = []
    for g, embedded in stored.embedded_metrics.items():
        if g not in result.metrics:
            continue
        m = result.metrics[g]
        for key in ("expected_accuracy", "eo_gap", "eo_gap_mean", "lipschitz"):
            if key not in embedded:
                continue
            try:
                old = float(embedded[key])
            except (TypeError, ValueError):
                out.append(f"{g}.{key}: embedded value {embedded[key]!r} is not a number")
                continue
            new = getattr(m, key)
            same = old == new or (math.isfinite(old) and abs(old - new) <= 1e-12 * (1 + abs(new)))
            if not same:
                out.append(f"{g}.{key}: embedded {old!r}, recomputed {new!r}")
    return out


def cmd_evaluate(args) -> int:
    ds = _load(args)
    with stage("calibrator.load_result"):
        stored = load_result(args.calibration)
    with stage("fairmetrics (evaluate)"):
        missing = [g for g in ds.groups if g not in stored.rules]
        if missing:
            raise ValueError(f"calibration has no rule for group(s) {missing}")
        rules = {g: stored.rules[g] for g in ds.groups}
        result = assemble_result(ds, stored.family, stored.baseline, stored.target, rules, stored.tolerance)
    for msg in _mismatches(stored, result):
        print(f"warning: metric mismatch, using recomputed value: {msg}", file=sys.stderr)
    _print_table(result, sys.stdout)
    if args.out:
        doc = result_to_json(result)
        if args.format == "csv":
            rows = [
                (g, m.expected_accuracy, m.eo_gap, m.eo_gap_mean, m.lipschitz, str(m.odds_image))
                for g, m in result.metrics.items()
            ]
            _write_csv(args.out, ["group", "expected_accuracy", "eo_gap", "eo_gap_mean", "lipschitz", "odds_image"], rows)
        else:
            with _output(args.out) as fh:
                fh.write(dumps(doc))
    return 0


def cmd_apply(args) -> int:
    ds = _load(args)
    with stage("calibrator.load_result"):
        stored = load_result(args.calibration)
    with stage("decider.decide_batch"):
        a = decide_arrays(stored.rules, ds, args.seed)
    recs = ds.records
    rows = (
        (recs[k].score, recs[k].group, recs[k].label, p, int(o), int(i))
        for k, p, o, i in zip(a["record"], a["probability"], a["outcome"], a["draw_index"])
    )
    _write_csv(args.out, ["score", "group", "label", "probability", "outcome", "draw_index"], rows)
    return 0


def _parse_range(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    try:
        out = (float(lo), float(hi))
    except ValueError:
        raise ValueError(f"range must be LO:HI, got {text!r}") from None
    if not sep or out[0] >= out[1]:
        raise ValueError(f"range must be LO:HI with LO < HI, got {text!r}")
    return out


def cmd_curve_export(args) -> int:
    with stage("curvelab.construct"):
        if args.calibration:
            stored = load_result(args.calibration)
            rules = dict(stored.rules)
        else:
            if args.t0 is None or args.t1 is None or args.p is None:
                raise ValueError("give --calibration or all of --t0, --t1, --p")
            rules = {"curve": construct(args.family, args.t0, args.t1, args.p)}
        if args.range:
            lo, hi = _parse_range(args.range)
        else:
            finite = [t for cp in rules.values() for t in (cp.t0, cp.t1) if math.isfinite(t)] or [0.0, 1.0]
            lo, hi = min(finite), max(finite)
            pad = 0.1 * (hi - lo) or 1.0
            lo, hi = lo - pad, hi + pad
        if args.points < 2:
            raise ValueError("--points must be at least 2")
    rs = np.linspace(lo, hi, args.points)
    rows = []
    with stage("curvelab.eval_phi"):
        for name, cp in rules.items():
            phi = np.asarray(eval_phi(cp, rs))
            smooth = cp.family is not CurveFamily.FIXED and not cp.is_single_threshold
            dphi = np.asarray(derivative(cp, rs)) if smooth else None
            for k, r in enumerate(rs):
                rows.append((name, r, phi[k], dphi[k] if smooth else ""))
    header = ["curve", "r", "phi", "dphi"]
    if args.format == "json":
        with _output(args.out) as fh:
            fh.write(dumps([dict(zip(header, row)) for row in rows]))
    else:
        _write_csv(args.out, header, rows)
    return 0


def cmd_synth(args) -> int:
    with stage("dataset.synthesize"):
        if args.config:
            config = dsmod.load_generator_config(args.config)
        elif args.preset == "separated":
            config = dsmod.separated_config(args.size)
        else:
            config = dsmod.credit_like_config(args.size)
        ds = dsmod.synthesize(config, args.seed)
    with stage("dataset.write_csv"):
        if args.out in (None, "-"):
            raise ValueError("synth needs --out PATH")
        dsmod.write_csv(ds, args.out)
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothodds", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def data_args(p, need_input=True):
        p.add_argument("--input", required=need_input, help="CSV file with a header row")
        p.add_argument(
            "--schema",
            default=None,
            help="column mapping, e.g. score=COL,group=COL,label=COL[,weight=COL|pos=COL,neg=COL][,range=LO:HI]",
        )

    def family_arg(p):
        p.add_argument("--family", type=CurveFamily.parse, default=CurveFamily.LINEAR, metavar="{fixed,linear,quadratic,cubic,quartic}")

    p = sub.add_parser("roc", help="per-group ROC curves, hulls or P(Y=1 | R)")
    data_args(p)
    p.add_argument("--kind", choices=["roc", "hull", "conditional"], default="roc")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("calibrate", help="fit one rule per group and write the result as JSON")
    data_args(p)
    family_arg(p)
    p.add_argument("--p-step", type=float, default=DEFAULT_P_STEP)
    p.add_argument("--threshold-stride", type=int, default=1)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="recompute metrics of a stored calibration on a dataset")
    data_args(p)
    p.add_argument("--calibration", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("apply", help="draw randomised decisions for every record")
    data_args(p)
    p.add_argument("--calibration", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("curve-export", help="sample phi and its derivative")
    family_arg(p)
    p.add_argument("--t0", type=float)
    p.add_argument("--t1", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--calibration", default=None, help="export every group's rule instead")
    p.add_argument("--range", default=None, help="LO:HI sampling interval")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_curve_export)

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p.add_argument("--config", default=None, help="generator config (JSON)")
    p.add_argument("--preset", choices=["credit", "separated"], default="credit")
    p.add_argument("--size", type=int, default=25_000, help="individuals per group for presets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"smoothodds {args.command}: error in {exc.operation}: {exc.cause}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    sys.exit(main())
