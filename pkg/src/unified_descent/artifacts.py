"""On-disk run artifacts: writing runs, certifying them, and sweeping grids.

A run directory holds ``trajectory.csv``, ``iterates.csv`` (when recorded),
``summary.json`` (with the resolved config echoed) and, for half-space runs,
``dataset.csv``. Certification reads only those files, so a run can be
certified in another process or long after it finished.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .certify.bounds import (
    BoundCheck,
    BoundName,
    Variant,
    check_descent_steps,
    check_linear_rate,
    check_min_progress,
    summarize_checks,
)
from .certify.oracle import ResidualGrid, residual_sup_1d
from .certify.residuals import AssumptionParams, TrajectoryAnalysis, analyze_trajectory
from .config import apply_overrides, build_run, build_solution_set, dumps, run_id_for, validate
from .errors import ConfigError, HypothesisViolated, UnifiedDescentError
from .geometry import SolutionSet
from .optimizer import BetaSchedule, RunConfig, TrajectoryRecord, run_gd, run_sgd
from .problems import HalfSpaceDataset, Problem
from .progress import ProgressKind, ProgressSpec

__all__ = [
    "write_run",
    "execute_run",
    "load_run",
    "LoadedRun",
    "resolve_params",
    "certify_loaded",
    "certify_dir",
    "aggregate_series",
    "expand_grid",
    "run_sweep",
    "SWEEP_COLUMNS",
]

ORACLE_TOL = 1e-10
_FSTAR_KINDS = (ProgressKind.GAP, ProgressKind.STRONG_GAP, ProgressKind.GAP_PLUS_GRAD)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


# ---------------------------------------------------------------------------
# run


def execute_run(doc: dict):
    cfg, mode, dataset = build_run(doc)
    record, summary = (run_sgd if mode == "sgd" else run_gd)(cfg)
    return cfg, mode, dataset, record, summary


def write_run(doc: dict, out_dir) -> dict:
    """Run ``doc`` and write its artifacts into ``out_dir``; returns the summary document."""
    cfg, mode, dataset, record, summary = execute_run(doc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "trajectory.csv", record.to_csv())
    if cfg.record_iterates:
        _write(out / "iterates.csv", record.iterates_to_csv())
    if dataset is not None:
        _write(out / "dataset.csv", dataset.to_csv())
    final_value = cfg.problem.value(summary.final_iterate)
    sdoc = {
        "run_id": run_id_for(doc),
        "mode": mode,
        "config": doc,
        "problem": cfg.problem.describe(),
        "summary": summary.to_json(),
        "final_value": final_value,
    }
    _write(out / "summary.json", dumps(sdoc))
    return sdoc


@dataclass
class LoadedRun:
    run_id: str
    doc: dict
    cfg: RunConfig
    mode: str
    record: TrajectoryRecord
    summary: dict

    @property
    def problem(self) -> Problem:
        return self.cfg.problem

    @property
    def stochastic(self) -> bool:
        return self.mode == "sgd"


def load_run(run_dir) -> LoadedRun:
    d = Path(run_dir)
    try:
        sdoc = json.loads((d / "summary.json").read_text())
        traj = (d / "trajectory.csv").read_text()
    except FileNotFoundError as e:
        raise ConfigError(f"not a run directory ({e.filename} missing)") from None
    doc = sdoc["config"]
    dataset = None
    if (d / "dataset.csv").exists():
        lam = doc["problem"].get("reg_lambda", 1e-5)
        dataset = HalfSpaceDataset.from_csv((d / "dataset.csv").read_text(), reg_lambda=lam)
    cfg, mode, _ = build_run(doc, dataset)
    its = (d / "iterates.csv").read_text() if (d / "iterates.csv").exists() else None
    record = TrajectoryRecord.from_csv(traj, its, cfg.problem.dimension, mode == "sgd")
    return LoadedRun(sdoc["run_id"], doc, cfg, mode, record, sdoc["summary"])


# ---------------------------------------------------------------------------
# certify


def resolve_params(run: LoadedRun, cert: dict | None) -> tuple[AssumptionParams, dict]:
    """Assumption parameters for certifying ``run``.

    ``cert`` follows the ``certify`` section of the config schema. The
    solution set defaults to the run's own set, or to the proxy set
    ``{final iterate}`` when the run had none. In proxy mode ``f*`` defaults
    to the smallest recorded full objective.
    """
    cert = dict(cert or {})
    prob = run.problem
    rec = run.record
    set_spec = cert.get("set")
    if set_spec is None:
        set_spec = "run" if run.cfg.solution_set is not None else "proxy"
    if set_spec == "proxy":
        sset = SolutionSet.proxy(run.record.iterates[int(rec.k[-1])])
    elif set_spec == "run":
        if run.cfg.solution_set is None:
            raise ConfigError("certify.set = 'run' but the run had no solution set")
        sset = run.cfg.solution_set
    else:
        sset = build_solution_set(set_spec, prob)

    pspec = cert.get("progress") or run.doc.get("progress")
    if pspec:
        progress = ProgressSpec.from_json(pspec)
    else:
        progress = ProgressSpec(ProgressKind.SAMPLE_GAP if run.stochastic else ProgressKind.GAP)

    fstar = cert.get("fstar", "proxy" if set_spec == "proxy" else None)
    if progress.kind in _FSTAR_KINDS:
        if fstar == "proxy":
            X = rec.iterate_array()
            fvals = rec.f if not run.stochastic else np.array([prob.value(x) for x in X])
            progress = progress.with_fstar(float(np.min(fvals)))
        elif fstar is not None:
            progress = progress.with_fstar(float(fstar))

    alpha = cert.get("alpha") or run.cfg.alpha
    beta = BetaSchedule.from_json(cert["beta"]) if cert.get("beta") else run.cfg.beta
    params = AssumptionParams(float(cert.get("c1", 1.0)), progress, sset, cert.get("c2"), float(alpha), beta)
    extras = {
        "L": cert.get("L") or progress.L or prob.known_smoothness_L,
        "mu": cert.get("mu") or progress.mu or getattr(prob, "mu", None),
        "gamma_b": cert.get("gamma_b") or run.cfg.policy.cap,
        "bounds": cert.get("bounds"),
        "oracle": cert.get("oracle", True),
    }
    return params, extras


def _skipped(name: BoundName, reason: str) -> BoundCheck:
    return BoundCheck(name, math.nan, math.nan, math.nan, True, True, {"reason": reason})


def _default_bounds(run: LoadedRun, params: AssumptionParams, extras: dict) -> list[str]:
    nonincr = run.cfg.policy.nonincreasing
    if run.stochastic:
        out = ["THM2"]
        if extras["L"] and extras["gamma_b"] and params.progress.kind is ProgressKind.SAMPLE_GAP:
            out.append("COR4")
        if nonincr:
            out.append("COR5")
        return out
    out = ["THM1", "COR2"]
    if extras["L"] and params.progress.kind is ProgressKind.GAP:
        out.append("COR1")
    if nonincr:
        out.append("COR3")
    if params.progress.kind is ProgressKind.STRONG_GAP and extras["mu"] and extras["L"]:
        out.append("EX2")
    return out


_BOUND_NAMES = {
    "THM1": BoundName.THM1_MIN_P, "COR1": BoundName.COR1, "COR2": BoundName.COR2, "COR3": BoundName.COR3,
    "THM2": BoundName.THM2_MIN_P, "COR4": BoundName.COR4, "COR5": BoundName.COR5, "EX2": BoundName.EX2_LINEAR,
}


def run_bounds(an: TrajectoryAnalysis, names, extras: dict) -> list[BoundCheck]:
    steps = check_descent_steps(an)
    desc = BoundName.THM2_DESCENT if an.stochastic else BoundName.THM1_DESCENT
    out = [summarize_checks(steps, desc)]
    for nm in names:
        try:
            if nm == "EX2":
                chk = check_linear_rate(an, extras["mu"], extras["L"])
            else:
                chk = check_min_progress(an, Variant(nm), L=extras["L"], gamma_b=extras["gamma_b"])
        except (HypothesisViolated, ValueError, TypeError) as e:
            chk = _skipped(_BOUND_NAMES[nm], str(e))
        out.append(chk)
    return out


def _oracle(run: LoadedRun, params: AssumptionParams) -> dict | None:
    prob = run.problem
    if prob.dimension != 1 or run.stochastic:
        return None
    try:
        grid = ResidualGrid(prob, params.progress, params.set)
        sup = residual_sup_1d(grid, params.c1, tol=ORACLE_TOL)
        return {"value": max(0.0, sup.value), "tol": ORACLE_TOL, "argmax": sup.argmax}
    except UnifiedDescentError as e:
        return {"value": None, "tol": ORACLE_TOL, "error": str(e)}


def certify_loaded(run: LoadedRun, cert: dict | None = None):
    """``(report, analysis)`` for a loaded run."""
    params, extras = resolve_params(run, cert)
    an = analyze_trajectory(run.record, run.problem, params)
    rep = an.report()
    names = extras["bounds"] if extras["bounds"] is not None else _default_bounds(run, params, extras)
    checks = run_bounds(an, names, extras)
    report = {
        "run_id": run.run_id,
        "params": {
            "c1": params.c1,
            "c2": params.c2,
            "progress": params.progress.to_json(),
            "set": params.set.to_json(),
            "alpha": params.alpha,
            "beta": params.beta.to_json(),
            "fstar": an.fstar,
        },
        "empirical_c2": rep.empirical_c2,
        "max_residual": rep.max_residual,
        "mean_residual": rep.mean_residual,
        "mean_c2": rep.mean_c2,
        "negative_P_count": rep.negative_P_count,
        "inner_nonneg": bool(np.all(an.replay.inner >= 0)),
        "bounds": [c.to_json() for c in checks],
        "oracle": _oracle(run, params) if extras["oracle"] else None,
    }
    report = json.loads(dumps(report))
    validate(report, "certificate")
    return report, an


def certify_dir(run_dir, cert: dict | None = None, out_path=None):
    run = load_run(run_dir)
    if cert is None:
        cert = run.doc.get("certify")
    report, an = certify_loaded(run, cert)
    path = Path(out_path) if out_path else Path(run_dir) / "certificate.json"
    _write(path, dumps(report))
    return report, an


def aggregate_series(analyses) -> str:
    """CSV ``k,mean,max,min`` of the per-step ``max(0, r)`` across runs (common prefix)."""
    series = [np.maximum(a.residual, 0.0) for a in analyses]
    n = min(len(s) for s in series) if series else 0
    M = np.array([s[:n] for s in series]).reshape(len(series), n)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "mean", "max", "min"])
    for k in range(n):
        col = M[:, k]
        w.writerow([k] + [format(float(v), ".17g") for v in (np.mean(col), np.max(col), np.min(col))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# sweep


SWEEP_COLUMNS = [
    "run_id", "combo", "seed", "status", "total_steps", "final_value", "min_progress",
    "gamma_min", "gamma_max", "c1", "empirical_c2", "mean_c2", "mean_residual",
    "negative_P_count", "inner_nonneg", "bounds_pass", "error",
]


def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product of ``{dotted key: [values]}``, keys in sorted order."""
    if not grid:
        return [{}]
    keys = sorted(grid)
    vals = [grid[k] if isinstance(grid[k], list) else [grid[k]] for k in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*vals)]


def _publish(tmp: Path, dest: Path) -> None:
    if dest.exists():
        shutil.rmtree(dest)
    os.replace(tmp, dest)


def _one(template: dict, combo_idx: int, assign: dict, seed: int, out: Path, certify: bool) -> dict:
    run_id = f"c{combo_idx:03d}-s{seed}"
    row = {"run_id": run_id, "combo": combo_idx, "seed": seed, **assign}
    tmp = Path(tempfile.mkdtemp(prefix=f".{run_id}-", dir=out))
    try:
        doc = apply_overrides(template, [(k.split("."), v) for k, v in assign.items()])
        doc["seed"] = seed
        doc["name"] = run_id
        validate(doc, "config")
        sdoc = write_run(doc, tmp)
        s = sdoc["summary"]
        row.update(
            status=s["status"], total_steps=s["total_steps"], final_value=sdoc["final_value"],
            min_progress=s["min_progress"], gamma_min=s["gamma_min"], gamma_max=s["gamma_max"],
        )
        if certify:
            rep, _ = certify_dir(tmp, doc.get("certify"))
            live = [b for b in rep["bounds"] if not b.get("skipped")]
            row.update(
                c1=rep["params"]["c1"], empirical_c2=rep["empirical_c2"], mean_c2=rep["mean_c2"],
                mean_residual=rep["mean_residual"], negative_P_count=rep["negative_P_count"],
                inner_nonneg=rep["inner_nonneg"], bounds_pass=all(b["pass"] for b in live),
            )
        _publish(tmp, out / "runs" / run_id)
    except (UnifiedDescentError, ValueError, KeyError) as e:
        row["error"] = f"{type(e).__name__}: {e}"
        shutil.rmtree(tmp, ignore_errors=True)
    return row


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def run_sweep(template: dict, seeds, grid: dict, out_dir, workers: int = 4, certify: bool | None = None):
    """Run every (grid point, seed) pair; returns the aggregate rows.

    Each run is written into a private temporary directory and renamed into
    ``out_dir/runs/<run_id>`` only once complete. ``aggregate.csv`` has one
    row per pair, sorted by run id, so reruns are byte-identical.
    """
    combos = expand_grid(grid)
    seeds = list(seeds)
    if not combos or not seeds:
        raise ConfigError("sweep grid is empty")
    if certify is None:
        certify = "certify" in template
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    jobs = [(i, a, s) for i, a in enumerate(combos) for s in seeds]
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(jobs)))) as ex:
        rows = list(ex.map(lambda j: _one(template, j[0], j[1], j[2], out, certify), jobs))
    rows.sort(key=lambda r: r["run_id"])
    keys = sorted(grid)
    cols = SWEEP_COLUMNS[:3] + keys + SWEEP_COLUMNS[3:]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    _write(out / "aggregate.csv", buf.getvalue())
    return rows
