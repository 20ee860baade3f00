"""Progress functions ``P(x; S)`` and their per-sample analogues."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NegativeGap
from .geometry import SolutionSet, project_batch
from .problems import Problem

__all__ = [
    "ProgressKind",
    "ProgressSpec",
    "eval_progress",
    "eval_sample_progress",
    "progress_batch",
    "NEGATIVE_CLAMP_TOL",
]

NEGATIVE_CLAMP_TOL = 1e-12


class ProgressKind(str, enum.Enum):
    GAP = "GAP"  # f(x) - f*
    STRONG_GAP = "STRONG_GAP"  # f(x) - f* + mu/2 ||x - x_p||^2
    GRAD_NORM_OVER_L = "GRAD_NORM_OVER_L"  # ||grad f||^2 / L
    GAP_PLUS_GRAD = "GAP_PLUS_GRAD"  # f(x) - f* + ||grad f||^2 / (2L)
    AIMING_VALUE = "AIMING_VALUE"  # f(x), with f* = 0
    SAMPLE_GAP = "SAMPLE_GAP"  # f_xi(x) - f_xi(x_p)
    SAMPLE_GRAD_NORM = "SAMPLE_GRAD_NORM"  # ||grad f_xi||^2 (/ L unless raw)

    @property
    def stochastic(self) -> bool:
        return self in (ProgressKind.SAMPLE_GAP, ProgressKind.SAMPLE_GRAD_NORM)


_NEEDS_FSTAR = {ProgressKind.GAP, ProgressKind.STRONG_GAP, ProgressKind.GAP_PLUS_GRAD}
_NEEDS_L = {ProgressKind.GRAD_NORM_OVER_L, ProgressKind.GAP_PLUS_GRAD}


@dataclass(frozen=True)
class ProgressSpec:
    kind: ProgressKind
    fstar: float | None = None
    mu: float | None = None
    L: float | None = None
    raw_grad_norm: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ProgressKind(self.kind))
        if self.kind is ProgressKind.STRONG_GAP and not (self.mu and self.mu > 0):
            raise ValueError("STRONG_GAP needs mu > 0")
        needs_L = self.kind in _NEEDS_L or (
            self.kind is ProgressKind.SAMPLE_GRAD_NORM and not self.raw_grad_norm
        )
        if needs_L and not (self.L and self.L > 0):
            raise ValueError(f"{self.kind.value} needs L > 0")

    def with_fstar(self, fstar: float) -> "ProgressSpec":
        return ProgressSpec(self.kind, fstar, self.mu, self.L, self.raw_grad_norm)

    def resolve_fstar(self, problem: Problem) -> float:
        if self.kind is ProgressKind.AIMING_VALUE:
            return 0.0
        if self.fstar is not None:
            return float(self.fstar)
        if problem.known_fstar is not None:
            return float(problem.known_fstar)
        raise ValueError(f"{self.kind.value} needs f*; none given and the problem has none")

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "fstar": self.fstar,
            "mu": self.mu,
            "L": self.L,
            "raw_grad_norm": self.raw_grad_norm,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ProgressSpec":
        return cls(
            kind=obj["kind"],
            fstar=obj.get("fstar"),
            mu=obj.get("mu"),
            L=obj.get("L"),
            raw_grad_norm=bool(obj.get("raw_grad_norm", False)),
        )


def progress_batch(
    spec: ProgressSpec,
    values: np.ndarray,
    grad_norm_sq: np.ndarray,
    dist_sq: np.ndarray | None = None,
    fstar: float | None = None,
) -> np.ndarray:
    """Deterministic progress from precomputed ``f``, ``||grad f||^2`` and distances.

    No clamping or validation here; callers decide what a negative value means.
    """
    k = spec.kind
    if k in _NEEDS_FSTAR:
        gap = values - fstar
    if k is ProgressKind.GAP:
        return gap
    if k is ProgressKind.STRONG_GAP:
        return gap + 0.5 * spec.mu * dist_sq
    if k is ProgressKind.GRAD_NORM_OVER_L:
        return grad_norm_sq / spec.L
    if k is ProgressKind.GAP_PLUS_GRAD:
        return gap + grad_norm_sq / (2.0 * spec.L)
    if k is ProgressKind.AIMING_VALUE:
        return np.asarray(values, dtype=float).copy()
    raise ValueError(f"{k.value} is a per-sample progress function")


def _clamp(p: float) -> float:
    if p < -NEGATIVE_CLAMP_TOL:
        raise NegativeGap(f"progress value {p:.17g} is negative; the supplied f* is above f(x)")
    return max(p, 0.0)


def eval_progress(spec: ProgressSpec, problem: Problem, x, sset: SolutionSet | None = None) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    fx = problem.value(x)
    g = problem.gradient(x)
    gn = float(np.dot(g, g))
    d2 = None
    if spec.kind is ProgressKind.STRONG_GAP:
        if sset is None:
            raise ValueError("STRONG_GAP needs a solution set")
        d2 = project_batch(x[None, :], sset)[1]
    fstar = spec.resolve_fstar(problem) if spec.kind in _NEEDS_FSTAR else None
    p = progress_batch(spec, np.array([fx]), np.array([gn]), d2, fstar)
    return _clamp(float(p[0]))


def eval_sample_progress(
    spec: ProgressSpec,
    problem: Problem,
    sample_id: int | Sequence[int],
    x,
    sset: SolutionSet | None = None,
) -> float:
    """Per-sample (or per-batch mean) progress.

    ``SAMPLE_GAP`` can be negative because ``x_p`` minimizes ``f`` rather than
    ``f_xi``; the value is returned unclamped so callers can count it.
    """
    if problem.sample_count <= 0:
        raise ValueError("problem has no sample decomposition")
    ids = np.atleast_1d(np.asarray(sample_id, dtype=np.int64))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if spec.kind is ProgressKind.SAMPLE_GAP:
        if sset is None:
            raise ValueError("SAMPLE_GAP needs a solution set")
        i, _ = project_batch(x[None, :], sset)
        xp = sset.points[int(i[0])]
        return problem.batch_value(ids, x) - problem.batch_value(ids, xp)
    if spec.kind is ProgressKind.SAMPLE_GRAD_NORM:
        g = problem.batch_gradient(ids, x)
        gn = float(np.dot(g, g))
        return gn if spec.raw_grad_norm else gn / spec.L
    raise ValueError(f"{spec.kind.value} is not a per-sample progress function")
