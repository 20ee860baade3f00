"""Residuals of the alignment inequality and trajectory-level constants.

The residual at ``x`` is ``r(x) = c1 P(x; S) - <g, x - x_p>``; the inequality
holds at ``x`` with constant ``c2`` exactly when ``r(x) <= c2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NegativeGap
from ..geometry import SolutionSet, project
from ..optimizer import BetaKind, BetaSchedule, Replay, TrajectoryRecord, replay_samples
from ..problems import Problem
from ..progress import (
    NEGATIVE_CLAMP_TOL,
    ProgressKind,
    ProgressSpec,
    eval_progress,
    eval_sample_progress,
    progress_batch,
)

__all__ = [
    "AssumptionParams",
    "ResidualReport",
    "TrajectoryAnalysis",
    "residual_at",
    "analyze_trajectory",
    "trajectory_constants",
]


@dataclass(frozen=True)
class AssumptionParams:
    """Constants of one instance of the alignment inequality.

    ``c2=None`` means "certify from data": the trajectory's own empirical
    constant (per step for stochastic runs).
    """

    c1: float
    progress: ProgressSpec
    set: SolutionSet
    c2: float | None = None
    alpha: float = 1.0
    beta: BetaSchedule = field(default_factory=BetaSchedule)

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError("c1 must be positive")
        if self.c2 is not None and self.c2 < 0:
            raise ValueError("c2 must be nonnegative")
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")

    def with_c2(self, c2: float | None) -> "AssumptionParams":
        return AssumptionParams(self.c1, self.progress, self.set, c2, self.alpha, self.beta)

    def to_json(self) -> dict:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "alpha": self.alpha,
            "beta": self.beta.to_json(),
            "progress": self.progress.to_json(),
            "set": self.set.to_json(),
        }


def residual_at(problem: Problem, x, params: AssumptionParams, sample_id=None) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = project(x, params.set).point
    if sample_id is None:
        p = eval_progress(params.progress, problem, x, params.set)
        g = problem.gradient(x)
    else:
        ids = np.atleast_1d(sample_id)
        p = eval_sample_progress(params.progress, problem, ids, x, params.set)
        g = problem.batch_gradient(ids, x)
    return params.c1 * p - float(np.dot(g, x - xp))


@dataclass
class ResidualReport:
    residuals: np.ndarray
    max_residual: float
    mean_residual: float
    mean_c2: float  # mean of max(0, r): the E[c2_xi] estimate
    empirical_c2: float
    negative_P_count: int

    def holds_with(self, c2: float, tol: float = 0.0) -> bool:
        return bool(np.all(self.residuals <= c2 + tol))


@dataclass
class TrajectoryAnalysis:
    """Everything the bound checks need, evaluated once per (record, params)."""

    params: AssumptionParams
    stochastic: bool
    replay: Replay
    gamma: np.ndarray
    progress: np.ndarray
    residual: np.ndarray
    beta: np.ndarray
    c2: np.ndarray  # per-step constant used in the descent checks
    fstar: float | None
    problem: Problem

    @property
    def n(self) -> int:
        return len(self.gamma)

    @property
    def last_step(self) -> int:
        """Index ``K`` of the last entry with a computed step, or -1."""
        idx = np.flatnonzero(np.isfinite(self.gamma))
        return int(idx[-1]) if idx.size else -1

    def full_values(self) -> np.ndarray:
        if not self.stochastic:
            return self.replay.f
        return np.array([self.problem.value(x) for x in self.replay.iterates])

    def report(self) -> ResidualReport:
        r = self.residual
        if r.size == 0:
            return ResidualReport(r, -math.inf, math.nan, 0.0, 0.0, 0)
        return ResidualReport(
            residuals=r,
            max_residual=float(np.max(r)),
            mean_residual=float(np.mean(r)),
            mean_c2=float(np.mean(np.maximum(r, 0.0))),
            empirical_c2=float(max(0.0, np.max(r))),
            negative_P_count=int(np.sum(self.progress < 0)),
        )


def _beta_series(params: AssumptionParams, problem: Problem, rp: Replay, stochastic: bool) -> np.ndarray:
    b = params.beta
    n = len(rp.k)
    if b.kind is BetaKind.ZERO:
        return np.zeros(n)
    if b.kind is BetaKind.CONST:
        return np.full(n, b.value)
    out = np.empty(n)
    for j in range(n):
        xp = params.set.points[rp.proj_index[j]]
        if stochastic:
            ids = np.asarray(rp.sample_ids[j], dtype=np.int64)
            fxp = problem.batch_value(ids, xp)
            lstar = b.lstar if b.lstar is not None else float(np.mean(problem.known_sample_lower_bounds[ids]))
        else:
            fxp = problem.value(xp)
            lstar = b.lstar if b.lstar is not None else float(problem.known_fstar)
        out[j] = params.c1 * (fxp - lstar)
    return out


def analyze_trajectory(record: TrajectoryRecord, problem: Problem, params: AssumptionParams) -> TrajectoryAnalysis:
    """Replay ``record`` against ``params.set`` and evaluate progress/residuals.

    Raises :class:`MissingIterates` for thinned records and
    :class:`NegativeGap` when a deterministic progress value is negative
    beyond round-off (a wrong ``f*``).
    """
    rp = replay_samples(record, problem, params.set)
    spec = params.progress
    fstar = None
    if record.stochastic:
        if not spec.kind.stochastic:
            raise ValueError("stochastic trajectories need a SAMPLE_* progress function")
        P = np.array(
            [eval_sample_progress(spec, problem, ids, x, params.set) for ids, x in zip(rp.sample_ids, rp.iterates)]
        )
    else:
        if spec.kind.stochastic:
            raise ValueError("deterministic trajectories need a deterministic progress function")
        if spec.kind in (ProgressKind.GAP, ProgressKind.STRONG_GAP, ProgressKind.GAP_PLUS_GRAD):
            fstar = spec.resolve_fstar(problem)
        P = progress_batch(spec, rp.f, rp.grad_norm_sq, rp.dist_sq, fstar)
        if P.size and np.min(P) < -NEGATIVE_CLAMP_TOL:
            j = int(np.argmin(P))
            raise NegativeGap(f"progress {float(P[j]):.17g} < 0 at k={j}; the supplied f* is above f(x)")
        P = np.maximum(P, 0.0)
    r = params.c1 * P - rp.inner
    if params.c2 is not None:
        c2 = np.full(len(r), float(params.c2))
    elif record.stochastic:
        c2 = np.maximum(r, 0.0)
    else:
        c2 = np.full(len(r), max(0.0, float(np.max(r))) if r.size else 0.0)
    return TrajectoryAnalysis(
        params=params,
        stochastic=record.stochastic,
        replay=rp,
        gamma=record.gamma.copy(),
        progress=P,
        residual=r,
        beta=_beta_series(params, problem, rp, record.stochastic),
        c2=c2,
        fstar=fstar,
        problem=problem,
    )


def trajectory_constants(record: TrajectoryRecord, problem: Problem, params: AssumptionParams) -> ResidualReport:
    return analyze_trajectory(record, problem, params).report()
