"""Command-line interface.

``wincurse analyze``   run methods on an ``arm,outcome`` CSV file
``wincurse simulate``  run a simulation grid described by an INI file
``wincurse critval``   print a chi-bar-squared critical value

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .config import MethodConfig, parse_methods
from .core import DataError, Experiment, WinnerReport
from .elik import chibar_quantile
from .methods import run_method
from .simkit import (
    COLUMNS,
    BernoulliMatchedD,
    KArmPrior,
    MetricsRecord,
    NormalTwoArm,
    PlatformMixture,
    ScenarioSpec,
    run_scenario,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- input data


def read_observations(path: str | Path) -> tuple[Experiment, list[str]]:
    """Parse an ``arm,outcome`` CSV; arm labels are indexed by first appearance."""
    labels: dict[str, int] = {}
    arms: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 2:
            raise DataError("line 1: expected a two-column header 'arm,outcome'")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataError(f"line {line}: expected 2 fields, got {len(row)}")
            label, raw = row[0].strip(), row[1].strip()
            try:
                y = float(raw)
            except ValueError:
                raise DataError(f"line {line}: outcome {raw!r} is not a number") from None
            if not math.isfinite(y):
                raise DataError(f"line {line}: outcome must be finite")
            if label not in labels:
                labels[label] = len(arms)
                arms.append([])
            arms[labels[label]].append(y)
    if len(arms) < 2:
        raise UsageError("need at least two arms in the input")
    for name, k in labels.items():
        if len(arms[k]) < 2:
            raise DataError(f"arm {name!r} has fewer than 2 observations")
    return Experiment.from_arrays(arms), list(labels)


# ---------------------------------------------------------------- analyze


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


def _report_record(rep: WinnerReport, arm_names: list[str]) -> dict:
    iv = rep.interval
    return {
        "method": rep.method,
        "winner": rep.winner,
        "winner_label": arm_names[rep.winner],
        "estimate": _finite_or_none(rep.estimate),
        "interval": None if iv is None else {"lo": iv.lo, "hi": iv.hi, "level": iv.level},
        "diagnostics": {k: _finite_or_none(v) for k, v in rep.diagnostics.items()},
    }


def analyze(exp: Experiment, arm_names: list[str], methods: list[MethodConfig], seed: int) -> list[dict]:
    out = []
    for i, cfg in enumerate(methods):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        try:
            out.append(_report_record(run_method(exp, cfg, rng), arm_names))
        except (DataError, ValueError, ArithmeticError) as err:
            out.append({"method": cfg.name, "error": str(err)})
    return out


ANALYZE_CSV_COLUMNS = ("method", "winner", "winner_label", "estimate", "lo", "hi", "level", "error")


def format_analyze_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ANALYZE_CSV_COLUMNS)
    for r in records:
        iv = r.get("interval") or {}
        w.writerow(
            [
                r["method"],
                r.get("winner", ""),
                r.get("winner_label", ""),
                _fmt(r.get("estimate")),
                _fmt(iv.get("lo")),
                _fmt(iv.get("hi")),
                _fmt(iv.get("level")),
                r.get("error", ""),
            ]
        )
    return buf.getvalue()


def read_analyze_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        if tuple(r) != ANALYZE_CSV_COLUMNS:
            raise DataError("unexpected analyze CSV columns")
        rec = {"method": r["method"]}
        if r["error"]:
            rec["error"] = r["error"]
        else:
            rec.update(winner=int(r["winner"]), winner_label=r["winner_label"], estimate=_parse(r["estimate"]))
            rec["interval"] = (
                None if r["lo"] == "" else {k: _parse(r[k]) for k in ("lo", "hi", "level")}
            )
        out.append(rec)
    return out


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _parse(s: str):
    return None if s == "" else float(s)


# ---------------------------------------------------------------- simulate

GRID_KEYS = {
    "normal": {"N", "d", "sigma"},
    "bernoulli": {"N", "d", "p1"},
    "karm": {"N", "K", "sigma0", "sigma"},
    "platform": {"N", "K"},
}
COMMON_KEYS = {"dgp", "R", "B"}
INT_KEYS = {"N", "K", "R", "B"}
SECTIONS = {"grid": None, "methods": {"use", "alpha"}, "run": {"workers"}}


class ConfigError(UsageError):
    pass


def _list(value: str, key: str, conv):
    try:
        items = [conv(v.strip()) for v in value.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"invalid value for config key {key!r}: {value!r}") from None
    if not items:
        raise ConfigError(f"empty value for config key {key!r}")
    return items


def load_sim_config(text: str, reps: int | None = None, seed: int = 0):
    """Parse a simulation INI document into ``(specs, methods, alpha, workers)``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keys are case-sensitive (N vs n)
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"malformed config: {err}") from None
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown config section {sec!r}")
    if "grid" not in cp or "methods" not in cp:
        raise ConfigError("config needs [grid] and [methods] sections")
    grid = dict(cp["grid"])
    dgp = grid.get("dgp", "normal").strip()
    if dgp not in GRID_KEYS:
        raise ConfigError(f"unknown dgp {dgp!r}")
    allowed = GRID_KEYS[dgp] | COMMON_KEYS
    for key in grid:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} for dgp {dgp!r}")
    for sec in ("methods", "run"):
        if sec in cp:
            for key in cp[sec]:
                if key not in SECTIONS[sec]:
                    raise ConfigError(f"unknown config key {key!r} in [{sec}]")
    if "use" not in cp["methods"]:
        raise ConfigError("missing config key 'use' in [methods]")
    try:
        methods = parse_methods(cp["methods"]["use"])
    except ValueError as err:
        raise ConfigError(str(err)) from None
    alpha = float(cp["methods"].get("alpha", "0.05"))
    workers = int(cp["run"].get("workers", "1")) if "run" in cp else 1

    values = {k: _list(v, k, int if k in INT_KEYS else float) for k, v in grid.items() if k != "dgp"}
    R = reps if reps is not None else _scalar(values, "R", 2000)
    B = _scalar(values, "B", None)
    axes = sorted(GRID_KEYS[dgp])
    defaults = {"N": [100], "d": [0.0], "sigma": [1.0], "p1": [0.5], "K": [2], "sigma0": [0.1]}
    specs = []
    for combo in itertools.product(*(values.get(a, defaults[a]) for a in axes)):
        p = dict(zip(axes, combo))
        try:
            if dgp == "normal":
                model = NormalTwoArm.from_d(p["d"], p["sigma"])
            elif dgp == "bernoulli":
                model = BernoulliMatchedD(p["p1"], p["d"])
            elif dgp == "karm":
                model = KArmPrior(K=p["K"], sigma0=p["sigma0"], sigma=p["sigma"])
            else:
                model = PlatformMixture(K=p["K"])
            specs.append(ScenarioSpec(model, N=p["N"], R=R, B=B, seed=seed))
        except (ValueError, DataError) as err:
            raise ConfigError(f"invalid grid cell {p}: {err}") from None
    return specs, methods, alpha, workers


def _scalar(values: dict, key: str, default):
    if key not in values:
        return default
    if len(values[key]) != 1:
        raise ConfigError(f"config key {key!r} takes a single value")
    return values.pop(key)[0]


def write_metrics_csv(records: list[MetricsRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for rec in records:
            w.writerow([_cell(getattr(rec, c)) for c in COLUMNS])


def _cell(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def read_metrics_csv(path: str | Path) -> list[MetricsRecord]:
    types = {f.name: f.type for f in fields(MetricsRecord)}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise DataError("unexpected metrics CSV columns")
        out = []
        for row in reader:
            kw = {}
            for c in COLUMNS:
                t = types[c]
                kw[c] = int(row[c]) if t == "int" else float(row[c]) if t == "float" else row[c]
            out.append(MetricsRecord(**kw))
    return out


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wincurse", description="Winner's-curse inference for multi-arm experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="analyze an arm,outcome CSV file")
    a.add_argument("--input", required=True)
    a.add_argument("--methods", default="plug_in", help="comma-separated, e.g. plug_in,npb_sel,el_adaptive")
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--seed", type=int, default=0)
    fmt = a.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")

    s = sub.add_parser("simulate", help="run a simulation grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--reps", type=int)

    c = sub.add_parser("critval", help="chi-bar-squared critical value")
    c.add_argument("--arms", type=int, required=True)
    c.add_argument("--alpha", type=float, required=True)
    return p


def _cmd_analyze(args, out) -> int:
    if not 0 < args.alpha < 1:
        raise UsageError("alpha must lie in (0, 1)")
    try:
        methods = [replace(m, alpha=args.alpha) for m in parse_methods(args.methods)]
    except ValueError as err:
        raise UsageError(str(err)) from None
    exp, names = read_observations(args.input)
    records = analyze(exp, names, methods, args.seed)
    if args.fmt == "csv":
        out.write(format_analyze_csv(records))
    else:
        doc = {"alpha": args.alpha, "arms": names, "seed": args.seed, "reports": records}
        out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def _cmd_simulate(args, out) -> int:
    if args.reps is not None and args.reps < 1:
        raise UsageError("--reps must be >= 1")
    text = Path(args.config).read_text()
    specs, methods, alpha, workers = load_sim_config(text, args.reps, args.seed)
    rows = []
    for i, spec in enumerate(specs, 1):
        print(f"[{i}/{len(specs)}] {spec.dgp.labels} N={spec.N} R={spec.R}", file=sys.stderr)
        rows.extend(run_scenario(spec, methods, alpha, workers))
    write_metrics_csv(rows, args.out)
    return EXIT_OK


def _cmd_critval(args, out) -> int:
    if args.arms < 1 or not 0 < args.alpha < 1:
        raise UsageError("need --arms >= 1 and 0 < --alpha < 1")
    out.write(f"{chibar_quantile(1 - args.alpha, args.arms):.6f}\n")
    return EXIT_OK


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        cmd = {"analyze": _cmd_analyze, "simulate": _cmd_simulate, "critval": _cmd_critval}[args.command]
        return cmd(args, out)
    except UsageError as err:
        print(f"wincurse: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as err:
        print(f"wincurse: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except Exception as err:  # noqa: BLE001
        print(f"wincurse: internal error: {err!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
