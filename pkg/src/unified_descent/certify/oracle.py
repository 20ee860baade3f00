"""Brute-force supremum of the residual for one-dimensional problems.

The residual ``r(x) = c1 P(x) - g(x) (x - x_p)`` is affine in ``c1``, so a
grid evaluation stores ``P`` and the inner product once and any number of
``c1`` values can be scanned cheaply (see :class:`ResidualGrid`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BoundaryMax, NegativeGap
from ..geometry import SolutionSet, project_batch
from ..problems import Problem, ZooTag, make_zoo_problem
from ..progress import NEGATIVE_CLAMP_TOL, ProgressKind, ProgressSpec, progress_batch

__all__ = [
    "ResidualGrid",
    "SupResult",
    "golden_section_max",
    "residual_sup_1d",
    "global_c2_1d",
    "OracleCase",
    "ORACLE_CASES",
    "oracle_table",
    "DEFAULT_INTERVAL",
    "DEFAULT_GRID",
]

DEFAULT_INTERVAL = (-10.0, 10.0)
DEFAULT_GRID = 200_001
FAR_FACTORS = (10.0, 1e2, 1e3, 1e4, 1e5, 1e6)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _p_and_inner(problem: Problem, xs: np.ndarray, progress: ProgressSpec, sset: SolutionSet):
    X = xs[:, None]
    vals = problem.value_batch(X)
    grads = problem.gradient_batch(X)[:, 0]
    idx, d2 = project_batch(X, sset)
    inner = grads * (xs - sset.points[idx, 0])
    fstar = None
    if progress.kind in (ProgressKind.GAP, ProgressKind.STRONG_GAP, ProgressKind.GAP_PLUS_GRAD):
        fstar = progress.resolve_fstar(problem)
    P = progress_batch(progress, vals, grads * grads, d2, fstar)
    if np.min(P) < -NEGATIVE_CLAMP_TOL:
        j = int(np.argmin(P))
        raise NegativeGap(f"progress {float(P[j]):.17g} < 0 at x={float(xs[j]):.17g}; f* is not a lower bound")
    return np.maximum(P, 0.0), inner


class ResidualGrid:
    """``P`` and ``<g, x - x_p>`` on a fixed 1-D grid plus far-out probes."""

    def __init__(self, problem: Problem, progress: ProgressSpec, sset: SolutionSet,
                 interval=DEFAULT_INTERVAL, n_grid: int = DEFAULT_GRID):
        if problem.dimension != 1:
            raise ValueError("the residual oracle is one-dimensional")
        lo, hi = map(float, interval)
        if not lo < hi:
            raise ValueError("interval must have lo < hi")
        if n_grid < 101:
            raise ValueError("n_grid must be at least 101")
        self.problem, self.progress, self.sset = problem, progress, sset
        self.lo, self.hi = lo, hi
        self.xs = np.linspace(lo, hi, int(n_grid))
        self.P, self.inner = _p_and_inner(problem, self.xs, progress, sset)
        # geometric probes beyond each end; 0 endpoints are pushed out by the span
        span = hi - lo
        left = lo - np.array(FAR_FACTORS) * max(abs(lo), span)
        right = hi + np.array(FAR_FACTORS) * max(abs(hi), span)
        self.far_x = np.concatenate([left, right])
        self.far_P, self.far_inner = _p_and_inner(problem, self.far_x, progress, sset)

    def residual(self, c1: float) -> np.ndarray:
        return c1 * self.P - self.inner

    def far_residual(self, c1: float) -> np.ndarray:
        return c1 * self.far_P - self.far_inner

    def point_residual(self, x: float, c1: float) -> float:
        P, inner = _p_and_inner(self.problem, np.array([float(x)]), self.progress, self.sset)
        return float(c1 * P[0] - inner[0])


def golden_section_max(fun, a: float, b: float, xtol: float = 1e-12, max_iter: int = 200):
    """Maximize a unimodal ``fun`` on ``[a, b]``; returns ``(x, fun(x))``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol * (1.0 + abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)


@dataclass(frozen=True)
class SupResult:
    value: float  # refined supremum of the residual
    argmax: float
    grid_max: float
    c1: float
    interval: tuple[float, float]


def residual_sup_1d(grid: ResidualGrid, c1: float, tol: float = 1e-10, n_peaks: int = 5) -> SupResult:
    """Supremum of the residual over the grid interval, refined locally.

    Raises :class:`BoundaryMax` when the residual near either end of the
    interval (outer 1% of the span, or any far probe) exceeds the interior
    maximum: the supremum is then not attained inside and may be infinite.
    """
    r = grid.residual(c1)
    n = r.size
    band = max(2, n // 100)
    interior = r[band:-band]
    m_int = float(np.max(interior))
    margin = 1e-12 + 1e-9 * abs(m_int)
    edge = max(float(np.max(r[:band])), float(np.max(r[-band:])), float(np.max(grid.far_residual(c1))))
    if edge > m_int + margin:
        side = "lo" if max(r[:band].max(), grid.far_residual(c1)[: len(FAR_FACTORS)].max()) >= edge else "hi"
        raise BoundaryMax(
            f"residual (c1={c1:g}) grows toward the {side} end of [{grid.lo:g}, {grid.hi:g}]: "
            f"edge {edge:.6g} > interior {m_int:.6g}"
        )
    # local maxima of the interior, highest first
    core = np.arange(band, n - band)
    is_peak = (r[core] >= r[core - 1]) & (r[core] >= r[core + 1])
    peaks = core[is_peak]
    peaks = peaks[np.argsort(-r[peaks], kind="stable")][:n_peaks]
    best_x, best = float(grid.xs[peaks[0]]), float(r[peaks[0]])
    step = grid.xs[1] - grid.xs[0]
    for i in peaks:
        if r[i] < m_int - 1e3 * step * (1 + abs(m_int)):
            continue
        x, v = golden_section_max(lambda t: grid.point_residual(t, c1), grid.xs[i] - step, grid.xs[i] + step, xtol=tol)
        if v > best:
            best_x, best = float(x), float(v)
    return SupResult(best, best_x, m_int, float(c1), (grid.lo, grid.hi))


def global_c2_1d(problem: Problem, c1: float, progress: ProgressSpec, sset: SolutionSet | None = None,
                 interval=DEFAULT_INTERVAL, tol: float = 1e-10, n_grid: int = DEFAULT_GRID) -> float:
    """Smallest ``c2 >= 0`` making the inequality hold on ``interval``."""
    if sset is None:
        sset = problem.known_minimizers
    grid = ResidualGrid(problem, progress, sset, interval, n_grid)
    return max(0.0, residual_sup_1d(grid, c1, tol).value)


@dataclass(frozen=True)
class OracleCase:
    name: str
    tag: ZooTag
    c1: float
    set_points: tuple[float, ...] | None  # None: the full minimizer set
    expected: float
    tol: float = 1e-3

    def solution_set(self, problem: Problem) -> SolutionSet:
        if self.set_points is None:
            return problem.known_minimizers
        return SolutionSet(np.array(self.set_points, dtype=float)[:, None])


ORACLE_CASES = (
    OracleCase("f3_c1=1_set={1}", ZooTag.F3_DOUBLE_WELL, 1.0, (1.0,), 1.437),
    OracleCase("f3_c1=1_set=S", ZooTag.F3_DOUBLE_WELL, 1.0, None, 0.500),
    OracleCase("f3_c1=0.1_set=S", ZooTag.F3_DOUBLE_WELL, 0.1, None, 0.050),
    OracleCase("f4_c1=1_set={0}", ZooTag.F4_LOCAL_MIN, 1.0, (0.0,), 1.013),
    OracleCase("f4_c1=0.1_set={0}", ZooTag.F4_LOCAL_MIN, 0.1, (0.0,), 0.467),
)


def oracle_table(cases=ORACLE_CASES, interval=DEFAULT_INTERVAL, n_grid: int = DEFAULT_GRID) -> list[dict]:
    """Global ``c2`` for each case with ``P = f - f*`` and pass/fail against ``expected``."""
    rows = []
    gap = ProgressSpec(ProgressKind.GAP)
    for case in cases:
        prob = make_zoo_problem(case.tag)
        grid = ResidualGrid(prob, gap, case.solution_set(prob), interval, n_grid)
        sup = residual_sup_1d(grid, case.c1)
        value = max(0.0, sup.value)
        rows.append({
            "name": case.name,
            "function": case.tag.value,
            "c1": case.c1,
            "set": grid.sset.points[:, 0].tolist(),
            "value": value,
            "argmax": sup.argmax,
            "expected": case.expected,
            "tol": case.tol,
            "pass": bool(abs(value - case.expected) <= case.tol),
        })
    return rows
