"""``ud`` command line: run, certify, oracle, classify, sweep, zoo.

Exit codes: 0 success, 1 a verification check failed (oracle table),
2 configuration error, 3 runtime error (policy error, missing iterates,
negative gap). Diagnostics go to stderr; JSON results go to stdout or files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import aggregate_series, certify_dir, load_run, run_sweep, write_run
from .certify.classify import CELLS, classify_table
from .certify.oracle import DEFAULT_GRID, DEFAULT_INTERVAL, oracle_table
from .config import apply_overrides, dumps, load_config, parse_override, validate
from .errors import ConfigError, UnifiedDescentError
from .problems import ZooTag, make_zoo_problem

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _out_dir(arg) -> Path:
    return Path(arg or os.environ.get("UD_OUTPUT_DIR") or "ud_output")


def _emit(text: str, path=None) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_json_arg(arg):
    """A JSON literal or a path to a JSON file."""
    if arg is None:
        return None
    p = Path(arg)
    try:
        return json.loads(p.read_text()) if p.exists() else json.loads(arg)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{arg}: invalid JSON: {e}") from None


# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    doc = load_config(args.config, args.set)
    out = _out_dir(args.out)
    sdoc = write_run(doc, out)
    s = sdoc["summary"]
    print(f"{sdoc['run_id']}: {s['status']} after {s['total_steps']} steps -> {out}", file=sys.stderr)
    if s["status"] == "POLICY_ERROR":
        print(f"policy error: {s['message']}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cert_params(args) -> dict | None:
    cert = _load_json_arg(args.params)
    overrides = list(args.set or [])
    for flag, key in (("c1", "c1"), ("c2", "c2"), ("set_mode", "set"), ("fstar", "fstar")):
        v = getattr(args, flag)
        if v is not None:
            overrides.append(([key], v))
    if args.progress:
        overrides.append((["progress"], {"kind": args.progress, "raw_grad_norm": bool(args.raw_grad_norm)}))
    if cert is None and not overrides:
        return None
    cert = apply_overrides(cert or {}, overrides)
    validate({"problem": {"kind": "zoo", "tag": "F1_SQUARE"}, "policy": {"kind": "POLYAK"},
              "max_iters": 0, "certify": cert}, "config")
    return cert


def cmd_certify(args) -> int:
    cert = _cert_params(args)
    reports, analyses = [], []
    for rd in args.run:
        run_cert = cert if cert is not None else load_run(rd).doc.get("certify")
        rep, an = certify_dir(rd, run_cert)
        reports.append(rep)
        analyses.append(an)
        bad = [b["name"] for b in rep["bounds"] if not b["pass"]]
        print(f"{rep['run_id']}: empirical c2 = {rep['empirical_c2']:.6g}, "
              f"{'all bounds pass' if not bad else 'FAILED ' + ','.join(bad)}", file=sys.stderr)
    if len(reports) > 1:
        out = _out_dir(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "c2_series.csv").write_text(aggregate_series(analyses), encoding="utf-8")
        c2s = np.array([r["empirical_c2"] for r in reports])
        agg = {
            "runs": [r["run_id"] for r in reports],
            "empirical_c2": {"mean": float(c2s.mean()), "max": float(c2s.max()), "min": float(c2s.min())},
            "mean_c2": [r["mean_c2"] for r in reports],
            "all_bounds_pass": all(b["pass"] for r in reports for b in r["bounds"]),
        }
        (out / "aggregate.json").write_text(dumps(agg), encoding="utf-8")
    else:
        _emit(dumps(reports[0]))
    return EXIT_OK


def cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    rows = oracle_table(interval=tuple(args.interval), n_grid=args.grid)
    doc = {"rows": rows, "all_pass": all(r["pass"] for r in rows),
           "interval": list(args.interval), "n_grid": args.grid}
    validate(json.loads(dumps(doc)), "oracle")
    _emit(dumps(doc), args.output)
    for r in rows:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['name']}: {r['value']:.6f} "
              f"(expected {r['expected']} +- {r['tol']})", file=sys.stderr)
    print(f"oracle table in {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return EXIT_OK if doc["all_pass"] else EXIT_CHECK


def cmd_classify(args) -> int:
    tags = [ZooTag(t) for t in args.function] if args.function else list(ZooTag)
    cells = [c for c in CELLS if not args.cell or c.name in args.cell]
    ms = classify_table(tags, cells, interval=tuple(args.interval))
    doc = {
        "cells": {c.name: c.describe() for c in cells},
        "entries": [m.to_json() for m in ms],
        "inconclusive": sum(m.verdict.value == "INCONCLUSIVE" for m in ms),
    }
    doc = json.loads(dumps(doc))
    validate(doc, "classify")
    _emit(dumps(doc), args.output)
    for t in tags:
        row = {m.cell.name: m.verdict.value for m in ms if m.function == t.value}
        print(t.value.ljust(16) + " ".join(f"{c}:{v}" for c, v in row.items()), file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    template = json.loads(Path(args.config).read_text()) if Path(args.config).exists() else None
    if template is None:
        raise ConfigError(f"config file not found: {args.config}")
    template = apply_overrides(template, args.set)
    grid = _load_json_arg(args.grid) or {}
    for item in args.param or ():
        path, val = parse_override(item)
        grid[".".join(path)] = val if isinstance(val, list) else [val]
    if not isinstance(grid, dict):
        raise ConfigError("grid must be an object of dotted key -> list of values")
    seeds = args.seeds if args.seeds is not None else [template.get("seed", 0)]
    certify = True if args.certify else None
    rows = run_sweep(template, seeds, grid, _out_dir(args.out), workers=args.workers, certify=certify)
    failed = sum(bool(r.get("error")) for r in rows)
    print(f"sweep: {len(rows)} runs, {failed} failed -> {_out_dir(args.out)}", file=sys.stderr)
    return EXIT_RUNTIME if failed == len(rows) else EXIT_OK


def cmd_zoo(args) -> int:
    out = []
    for tag in ZooTag:
        p = make_zoo_problem(tag)
        entry = {"tag": tag.value, "minimizers": p.known_minimizers.points[:, 0].tolist(),
                 "fstar": p.known_fstar, "L": p.known_smoothness_L}
        if args.x is not None:
            entry["value"] = p.value([args.x])
            entry["gradient"] = float(p.gradient([args.x])[0])
        out.append(entry)
    _emit(dumps({"functions": out}))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ud", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run GD/SGD from a JSON config and write artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted override, value parsed as JSON (repeatable)")
    p.add_argument("--out", help="output directory (default $UD_OUTPUT_DIR or ./ud_output)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("certify", help="certify constants and bounds on recorded runs")
    p.add_argument("--run", action="append", required=True, help="run directory (repeatable)")
    p.add_argument("--params", help="certify parameters: JSON literal or file")
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--progress", choices=[k for k in
                   ("GAP", "STRONG_GAP", "GRAD_NORM_OVER_L", "GAP_PLUS_GRAD", "AIMING_VALUE",
                    "SAMPLE_GAP", "SAMPLE_GRAD_NORM")])
    p.add_argument("--raw-grad-norm", action="store_true")
    p.add_argument("--set-mode", choices=["run", "proxy"], help="solution set: the run's, or {final iterate}")
    p.add_argument("--fstar", type=float)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", help="directory for the multi-run aggregate")
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("oracle", help="global c2 constants of the zoo by brute force")
    p.add_argument("--interval", type=float, nargs=2, default=list(DEFAULT_INTERVAL))
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--output")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("classify", help="class membership matrix of the zoo")
    p.add_argument("--function", action="append", choices=[t.value for t in ZooTag])
    p.add_argument("--cell", action="append", choices=[c.name for c in CELLS])
    p.add_argument("--interval", type=float, nargs=2, default=list(DEFAULT_INTERVAL))
    p.add_argument("--output")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("sweep", help="run a config over a parameter grid and seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, nargs="*")
    p.add_argument("--grid", help="JSON object {dotted key: [values]}, literal or file")
    p.add_argument("--param", action="append", metavar="KEY=[V1,V2,...]")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--certify", action="store_true", help="certify every run (default: if the config has a certify section)")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("zoo", help="list the built-in 1-D functions")
    p.add_argument("--x", type=float, help="also evaluate value and derivative at x")
    p.set_defaults(fn=cmd_zoo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnifiedDescentError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
