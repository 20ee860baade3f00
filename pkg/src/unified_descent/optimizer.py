"""Gradient descent / SGD loops with replayable trajectory records.

A run of ``max_iters = K`` visits ``x^0 .. x^K``. At every visited iterate
the step ``gamma^k`` is computed and recorded (so bound checks can sum
``gamma^0 .. gamma^K``) but only steps ``0 .. K-1`` are applied.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGradient, MissingIterates, NegativeGap
from .geometry import SolutionSet, project_batch
from .problems import Problem, make_rng
from .progress import ProgressSpec, eval_progress, eval_sample_progress
from .stepsizes import StepContext, StepsizePolicy, compute_step, uncapped_step

__all__ = [
    "BetaKind",
    "BetaSchedule",
    "RunConfig",
    "Status",
    "TrajectoryRecord",
    "RunSummary",
    "Replay",
    "run_gd",
    "run_sgd",
    "replay_samples",
    "measure",
]


class BetaKind(str, enum.Enum):
    ZERO = "ZERO"
    CONST = "CONST"
    SAMPLE_GAP_AT_PROJ = "SAMPLE_GAP_AT_PROJ"


@dataclass(frozen=True)
class BetaSchedule:
    """Slack sequence ``beta^k`` of the stepsize relation.

    ``SAMPLE_GAP_AT_PROJ`` is ``c1 (f_xi(x_p) - l*)``; with ``lstar=None``
    the problem's per-sample lower bounds (batch mean) are used.
    """

    kind: BetaKind = BetaKind.ZERO
    value: float = 0.0
    lstar: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BetaKind(self.kind))
        if self.value < 0:
            raise ValueError("beta must be nonnegative")

    def to_json(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is BetaKind.CONST:
            out["value"] = self.value
        if self.kind is BetaKind.SAMPLE_GAP_AT_PROJ and self.lstar is not None:
            out["lstar"] = self.lstar
        return out

    @classmethod
    def from_json(cls, obj: dict | None) -> "BetaSchedule":
        if obj is None:
            return cls()
        return cls(obj["kind"], float(obj.get("value", 0.0)), obj.get("lstar"))


class Status(str, enum.Enum):
    MAX_ITERS = "MAX_ITERS"
    CONVERGED_STATIONARY = "CONVERGED_STATIONARY"
    POLICY_ERROR = "POLICY_ERROR"


@dataclass
class RunConfig:
    problem: Problem
    policy: StepsizePolicy
    x0: np.ndarray
    max_iters: int
    solution_set: SolutionSet | None = None
    progress: ProgressSpec | None = None
    batch_size: int = 1
    seed: int = 0
    record_iterates: bool = True
    record_stride: int | None = None
    alpha: float = 1.0
    beta: BetaSchedule = field(default_factory=BetaSchedule)

    def __post_init__(self):
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if self.x0.shape != (self.problem.dimension,):
            raise ValueError("x0 dimension does not match the problem")
        if not np.all(np.isfinite(self.x0)):
            raise ValueError("x0 must be finite")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.solution_set is None:
            self.solution_set = self.problem.known_minimizers
        if self.record_stride is None:
            self.record_stride = 1 if self.problem.dimension <= 100 else 10


@dataclass
class TrajectoryRecord:
    """Per-step log. ``gamma`` is NaN where no step could be computed.

    ``f``/``grad_norm_sq`` are the batch quantities for stochastic runs;
    ``dist_sq``/``inner`` are NaN when the run had no solution set.
    """

    dimension: int
    stochastic: bool
    k: np.ndarray
    f: np.ndarray
    grad_norm_sq: np.ndarray
    gamma: np.ndarray
    dist_sq: np.ndarray
    inner: np.ndarray
    sample_ids: list[tuple[int, ...]]
    iterates: dict[int, np.ndarray]
    record_stride: int = 1

    def __len__(self) -> int:
        return len(self.k)

    @property
    def complete_iterates(self) -> bool:
        return all(int(k) in self.iterates for k in self.k)

    def iterate_array(self) -> np.ndarray:
        if not self.complete_iterates:
            raise MissingIterates("trajectory iterates were thinned or not recorded")
        return np.array([self.iterates[int(k)] for k in self.k]).reshape(len(self), self.dimension)

    # CSV ---------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "f", "grad_norm_sq", "gamma", "dist_sq", "inner_prod", "sample_ids"])
        for j in range(len(self)):
            w.writerow(
                [int(self.k[j])]
                + [_fmt(a[j]) for a in (self.f, self.grad_norm_sq, self.gamma, self.dist_sq, self.inner)]
                + [";".join(str(i) for i in self.sample_ids[j])]
            )
        return buf.getvalue()

    def iterates_to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k"] + [f"x_{j + 1}" for j in range(self.dimension)])
        for k in sorted(self.iterates):
            w.writerow([k] + [_fmt(v) for v in self.iterates[k]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, trajectory: str, iterates: str | None, dimension: int, stochastic: bool):
        rows = list(csv.reader(io.StringIO(trajectory)))[1:]
        cols = list(zip(*rows)) if rows else [()] * 7
        its: dict[int, np.ndarray] = {}
        if iterates:
            for r in list(csv.reader(io.StringIO(iterates)))[1:]:
                its[int(r[0])] = np.array([float(v) for v in r[1:]])
        ids = [tuple(int(i) for i in s.split(";")) if s else () for s in cols[6]]
        arr = lambda c: np.array([float(v) for v in c], dtype=float)  # noqa: E731
        ks = np.array([int(v) for v in cols[0]], dtype=np.int64)
        stride = 1
        if its and len(its) < len(ks):
            stride = int(np.min(np.diff(sorted(its)))) if len(its) > 1 else len(ks)
        return cls(dimension, stochastic, ks, arr(cols[1]), arr(cols[2]), arr(cols[3]),
                   arr(cols[4]), arr(cols[5]), ids, its, stride)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class RunSummary:
    final_iterate: np.ndarray
    min_progress: float | None
    min_progress_k: int | None
    total_steps: int
    status: Status
    gamma_min: float | None
    gamma_max: float | None
    message: str = ""

    def to_json(self) -> dict:
        return {
            "final_iterate": self.final_iterate.tolist(),
            "min_progress": self.min_progress,
            "min_progress_k": self.min_progress_k,
            "total_steps": self.total_steps,
            "status": self.status.value,
            "gamma_min": self.gamma_min,
            "gamma_max": self.gamma_max,
            "message": self.message,
        }


def measure(problem: Problem, x: np.ndarray, ids, sset: SolutionSet | None):
    """``(f, grad, ||grad||^2, dist_sq, inner)`` at ``x``.

    ``ids=None`` evaluates the full objective. Shared by the optimizer and
    replay so both produce identical floats.
    """
    if ids is None:
        fx = problem.value(x)
        g = problem.gradient(x)
    else:
        fx = problem.batch_value(ids, x)
        g = problem.batch_gradient(ids, x)
    gn = float(np.dot(g, g))
    if sset is None:
        return fx, g, gn, math.nan, math.nan
    i, d2 = project_batch(x[None, :], sset)
    inner = float(np.dot(g, x - sset.points[int(i[0])]))
    return fx, g, gn, float(d2[0]), inner


def _run(cfg: RunConfig, stochastic: bool):
    problem = cfg.problem
    sset = cfg.solution_set
    n = problem.sample_count
    rng = make_rng(cfg.seed) if stochastic else None
    full_batch = stochastic and cfg.batch_size >= n
    all_ids = tuple(range(n)) if stochastic else ()

    ks, fs, gns, gammas, d2s, inners, id_log = [], [], [], [], [], [], []
    iterates: dict[int, np.ndarray] = {}
    status, message = Status.MAX_ITERS, ""
    x = cfg.x0.copy()
    prev_raw = None
    for k in range(cfg.max_iters + 1):
        if stochastic:
            ids = all_ids if full_batch else tuple(int(i) for i in rng.integers(0, n, size=cfg.batch_size))
        else:
            ids = ()
        fx, g, gn, d2, inner = measure(problem, x, ids if stochastic else None, sset)
        ks.append(k)
        fs.append(fx)
        gns.append(gn)
        d2s.append(d2)
        inners.append(inner)
        id_log.append(ids)
        if cfg.record_iterates and (k % cfg.record_stride == 0):
            iterates[k] = x.copy()
        ctx = StepContext(k=k, fx=fx, grad_norm_sq=gn, prev_gamma=prev_raw)
        try:
            raw = uncapped_step(cfg.policy, ctx)
            gamma = compute_step(cfg.policy, ctx)
        except DegenerateGradient as e:
            gammas.append(math.nan)
            status, message = Status.CONVERGED_STATIONARY, str(e)
            break
        except NegativeGap as e:
            gammas.append(math.nan)
            status, message = Status.POLICY_ERROR, str(e)
            break
        gammas.append(gamma)
        prev_raw = raw
        if k == cfg.max_iters:
            break
        x_new = x - gamma * g
        if not np.all(np.isfinite(x_new)):
            status, message = Status.POLICY_ERROR, f"non-finite iterate after step {k}"
            break
        x = x_new
    # the final iterate is always kept so a thinned record can still seed a proxy set
    if cfg.record_iterates:
        iterates[ks[-1]] = x.copy()

    record = TrajectoryRecord(
        dimension=problem.dimension,
        stochastic=stochastic,
        k=np.array(ks, dtype=np.int64),
        f=np.array(fs),
        grad_norm_sq=np.array(gns),
        gamma=np.array(gammas),
        dist_sq=np.array(d2s),
        inner=np.array(inners),
        sample_ids=id_log,
        iterates=iterates,
        record_stride=cfg.record_stride,
    )
    return record, _summarize(cfg, record, x, status, message)


def _summarize(cfg, record, x, status, message) -> RunSummary:
    taken = record.gamma[np.isfinite(record.gamma)]
    gmin = float(taken.min()) if taken.size else None
    gmax = float(taken.max()) if taken.size else None
    pmin, pk = None, None
    if cfg.progress is not None and record.complete_iterates:
        try:
            ps = _progress_series(cfg, record)
        except (ValueError, NegativeGap):
            ps = None
        if ps is not None and len(ps):
            pk = int(np.argmin(ps))
            pmin = float(ps[pk])
    steps = int(np.sum(np.isfinite(record.gamma[:-1]))) if len(record) else 0
    return RunSummary(x.copy(), pmin, pk, steps, status, gmin, gmax, message)


def _progress_series(cfg, record) -> np.ndarray:
    X = record.iterate_array()
    spec = cfg.progress
    if spec.kind.stochastic:
        return np.array(
            [eval_sample_progress(spec, cfg.problem, ids, x, cfg.solution_set)
             for ids, x in zip(record.sample_ids, X)]
        )
    return np.array([eval_progress(spec, cfg.problem, x, cfg.solution_set) for x in X])


def run_gd(cfg: RunConfig) -> tuple[TrajectoryRecord, RunSummary]:
    """Full-gradient descent ``x <- x - gamma^k grad f(x)``."""
    return _run(cfg, stochastic=False)


def run_sgd(cfg: RunConfig) -> tuple[TrajectoryRecord, RunSummary]:
    """Mini-batch SGD with ids drawn uniformly with replacement.

    A batch is treated as one draw ``xi``: Polyak-type policies see the batch
    mean loss and gradient. ``batch_size >= sample_count`` uses every sample
    in order, which reproduces :func:`run_gd` exactly.
    """
    if cfg.problem.sample_count <= 0:
        raise ValueError("run_sgd needs a problem with samples")
    return _run(cfg, stochastic=True)


@dataclass
class Replay:
    """Re-evaluated per-step quantities against a (possibly new) solution set."""

    k: np.ndarray
    iterates: np.ndarray
    f: np.ndarray
    grads: np.ndarray
    grad_norm_sq: np.ndarray
    dist_sq: np.ndarray
    inner: np.ndarray
    sample_ids: list[tuple[int, ...]]
    proj_index: np.ndarray


def replay_samples(record: TrajectoryRecord, problem: Problem, sset: SolutionSet | None = None) -> Replay:
    if len(record) == 0:
        d = record.dimension
        e = np.empty(0)
        return Replay(np.empty(0, dtype=np.int64), np.empty((0, d)), e, np.empty((0, d)), e, e, e, [], e)
    X = record.iterate_array()
    fs, grads, gns, d2s, inners, pidx = [], [], [], [], [], []
    for x, ids in zip(X, record.sample_ids):
        fx, g, gn, d2, inner = measure(problem, x, ids if record.stochastic else None, sset)
        fs.append(fx)
        grads.append(g)
        gns.append(gn)
        d2s.append(d2)
        inners.append(inner)
        pidx.append(int(project_batch(x[None, :], sset)[0][0]) if sset is not None else -1)
    return Replay(
        k=record.k.copy(),
        iterates=X,
        f=np.array(fs),
        grads=np.array(grads),
        grad_norm_sq=np.array(gns),
        dist_sq=np.array(d2s),
        inner=np.array(inners),
        sample_ids=list(record.sample_ids),
        proj_index=np.array(pidx),
    )
