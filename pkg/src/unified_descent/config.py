"""JSON run configuration: schema validation, dotted overrides, object construction."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .geometry import SetKind, SolutionSet
from .optimizer import BetaSchedule, RunConfig
from .problems import (
    HalfSpaceDataset,
    Problem,
    generate_halfspace_dataset,
    make_halfspace_problem,
    make_quadratic_problem,
    make_zoo_problem,
)
from .progress import ProgressSpec
from .stepsizes import StepsizePolicy

__all__ = [
    "load_schema",
    "validate",
    "load_config",
    "apply_overrides",
    "parse_override",
    "build_problem",
    "build_run",
    "run_id_for",
    "dumps",
    "jsonable",
]


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("unified_descent").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc: dict, schema: str) -> None:
    """Raise :class:`ConfigError` with the first schema violation, if any."""
    v = jsonschema.Draft202012Validator(load_schema(schema))
    errs = sorted(v.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{schema}: {where}: {e.message}")


def parse_override(item: str) -> tuple[list[str], object]:
    """``"policy.c1=0.5"`` -> ``(["policy", "c1"], 0.5)``; values parse as JSON, else string."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    return key.split("."), val


def set_dotted(doc: dict, path: list[str], value) -> None:
    cur = doc
    for p in path[:-1]:
        nxt = cur.get(p)
        if nxt is None:
            nxt = cur[p] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot set {'.'.join(path)}: {p} is not an object")
        cur = nxt
    cur[path[-1]] = value


def apply_overrides(doc: dict, overrides) -> dict:
    out = copy.deepcopy(doc)
    for item in overrides or ():
        path, val = parse_override(item) if isinstance(item, str) else item
        set_dotted(out, path, val)
    return out


def load_config(path, overrides=()) -> dict:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON: {e}") from None
    doc = apply_overrides(doc, overrides)
    validate(doc, "config")
    return doc


# ---------------------------------------------------------------------------
# construction


def build_problem(spec: dict, dataset: HalfSpaceDataset | None = None) -> tuple[Problem, HalfSpaceDataset | None]:
    kind = spec["kind"]
    try:
        if kind == "zoo":
            return make_zoo_problem(spec["tag"]), None
        if kind == "quadratic":
            return make_quadratic_problem(spec["dimension"], spec["mu"], spec["L"], spec.get("center")), None
        if dataset is None:
            dataset = generate_halfspace_dataset(
                seed=spec.get("seed", 7),
                n=spec.get("n", 40),
                d=spec.get("d", 4),
                mean_separation=spec.get("mean_separation", 4.0),
                variance=spec.get("variance", 2.0),
                reg_lambda=spec.get("reg_lambda", 1e-5),
            )
        return make_halfspace_problem(dataset), dataset
    except ValueError as e:
        raise ConfigError(f"problem: {e}") from None


def build_solution_set(spec, problem: Problem) -> SolutionSet | None:
    if spec is None:
        return problem.known_minimizers
    try:
        sset = SolutionSet(np.array(spec["points"], dtype=float), SetKind(spec.get("kind", "FINITE")))
    except ValueError as e:
        raise ConfigError(f"solution_set: {e}") from None
    if sset.dimension != problem.dimension:
        raise ConfigError(f"solution_set: points of dimension {sset.dimension}, problem has {problem.dimension}")
    return sset


def build_run(doc: dict, dataset: HalfSpaceDataset | None = None):
    """``(RunConfig, mode, dataset)`` from a validated config document."""
    problem, dataset = build_problem(doc["problem"], dataset)
    mode = doc.get("mode") or ("sgd" if problem.sample_count > 0 else "gd")
    if mode == "sgd" and problem.sample_count <= 0:
        raise ConfigError("mode sgd needs a problem with samples")
    x0 = doc.get("x0")
    if x0 is None:
        x0 = np.zeros(problem.dimension)
    if len(x0) != problem.dimension:
        raise ConfigError(f"x0 has {len(x0)} entries, problem dimension is {problem.dimension}")
    try:
        policy = StepsizePolicy.from_json(doc["policy"])
        progress = ProgressSpec.from_json(doc["progress"]) if doc.get("progress") else None
        beta = BetaSchedule.from_json(doc.get("beta"))
        cfg = RunConfig(
            problem=problem,
            policy=policy,
            x0=np.asarray(x0, dtype=float),
            max_iters=int(doc["max_iters"]),
            solution_set=build_solution_set(doc.get("solution_set"), problem),
            progress=progress,
            batch_size=int(doc.get("batch_size", 1)),
            seed=int(doc.get("seed", 0)),
            record_iterates=bool(doc.get("record_iterates", True)),
            record_stride=doc.get("record_stride"),
            alpha=float(doc.get("alpha", 1.0)),
            beta=beta,
        )
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e)) from None
    return cfg, mode, dataset


def run_id_for(doc: dict) -> str:
    """The config's ``name``, else a short hash of its canonical JSON."""
    if doc.get("name"):
        return str(doc["name"])
    return hashlib.sha256(dumps(doc).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# deterministic JSON


def jsonable(obj):
    """Plain-Python copy with numpy scalars/arrays converted and NaN/Inf as null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
