"""Membership of 1-D functions in the six constant/solution-set classes.

A class ("cell") fixes whether ``c1`` is pinned to 1 or free, whether ``c2``
must be 0 or may be any nonnegative value, and whether the inequality is
taken against one global minimizer or the whole minimizer set. ``P`` is
always ``f - f*``.

Verdicts are numerical evidence, not proofs:

* IN carries certified constants (``c2`` from :func:`residual_sup_1d`).
* OUT carries a witness: for ``c2 = 0`` a point whose residual is positive
  for every searched ``c1``; for ``c2 >= 0`` the end of the interval toward
  which the residual grows without bound for every searched ``c1``.
* INCONCLUSIVE when neither was found.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BoundaryMax
from ..geometry import SolutionSet
from ..problems import Problem, ZooTag, make_zoo_problem
from ..progress import ProgressKind, ProgressSpec
from .oracle import DEFAULT_INTERVAL, ResidualGrid, golden_section_max, residual_sup_1d

__all__ = [
    "Cell",
    "CELLS",
    "Verdict",
    "Membership",
    "classify_function",
    "classify_table",
    "C1_GRID",
    "ZERO_TOL",
]

C1_GRID = tuple(2.0**e for e in range(-6, 2))
ZERO_TOL = 1e-9


@dataclass(frozen=True)
class Cell:
    name: str
    c1_fixed: float | None  # None: c1 is free
    c2_zero: bool
    full_set: bool  # against the whole minimizer set rather than one minimizer

    def describe(self) -> dict:
        return {
            "c1": "free" if self.c1_fixed is None else self.c1_fixed,
            "c2": "0" if self.c2_zero else ">=0",
            "set": "S" if self.full_set else "{x*}",
        }


CELLS = (
    Cell("F1", 1.0, True, False),
    Cell("F2", 1.0, False, False),
    Cell("F3", None, True, False),
    Cell("F4", None, False, False),
    Cell("F5", None, True, True),
    Cell("F6", None, False, True),
)


class Verdict(str, enum.Enum):
    IN = "IN"
    OUT = "OUT"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class Membership:
    function: str
    cell: Cell
    verdict: Verdict
    c1: float | None = None
    c2: float | None = None
    witness: float | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "cell": self.cell.name,
            "constraints": self.cell.describe(),
            "verdict": self.verdict.value,
            "c1": self.c1,
            "c2": self.c2,
            "witness": self.witness,
            "detail": self.detail,
        }


def _cell_set(problem: Problem, cell: Cell) -> SolutionSet:
    S = problem.known_minimizers
    if cell.full_set:
        return S
    ref = getattr(problem, "reference_minimizer", None)
    return SolutionSet.singleton(ref if ref is not None else S.points[0])


def _sup_or_none(grid: ResidualGrid, c1: float):
    try:
        return residual_sup_1d(grid, c1)
    except BoundaryMax as e:
        return e


def classify_function(problem: Problem, cell: Cell, *, interval=DEFAULT_INTERVAL,
                      n_grid: int = 100_001, c1_grid=C1_GRID, name: str | None = None) -> Membership:
    sset = _cell_set(problem, cell)
    grid = ResidualGrid(problem, ProgressSpec(ProgressKind.GAP), sset, interval, n_grid)
    c1s = (cell.c1_fixed,) if cell.c1_fixed is not None else tuple(c1_grid)
    fname = name or getattr(getattr(problem, "tag", None), "value", type(problem).__name__)
    sups = {c1: _sup_or_none(grid, c1) for c1 in c1s}
    bounded = {c1: s for c1, s in sups.items() if not isinstance(s, Exception)}
    detail = {"set": sset.points[:, 0].tolist(), "c1_searched": list(c1s)}

    if cell.c2_zero:
        ok = [c1 for c1, s in bounded.items() if s.value <= ZERO_TOL]
        if ok:
            # the residual is nondecreasing in c1 where P >= 0, so report the largest
            c1 = max(ok)
            return Membership(fname, cell, Verdict.IN, c1, 0.0, detail=detail)
        # one point that breaks the inequality for every searched c1
        R = np.min([grid.residual(c1) for c1 in c1s], axis=0)
        j = int(np.argmax(R))
        if R[j] > ZERO_TOL:
            detail["witness_residual_min_over_c1"] = float(R[j])
            return Membership(fname, cell, Verdict.OUT, witness=float(grid.xs[j]), detail=detail)
        return Membership(fname, cell, Verdict.INCONCLUSIVE, detail=detail)

    if bounded:
        # certified pair with the smallest stationary-point level c2 / c1
        c1, s = min(bounded.items(), key=lambda kv: (max(0.0, kv[1].value) / kv[0], -kv[0]))
        c2 = max(0.0, s.value)
        if cell.c1_fixed is None and c2 > 0:
            lo = c1 / 2 if c1 / 2 in bounded else c1
            hi = c1 * 2 if c1 * 2 in bounded else c1
            if hi > lo:
                c1, s = _refine_ratio(grid, c1, s, lo, hi)
                c2 = max(0.0, s.value)
        detail["argmax"] = s.argmax
        return Membership(fname, cell, Verdict.IN, c1, c2, detail=detail)
    # every searched c1 blew up at an end of the interval
    msgs = [str(e) for e in sups.values()]
    side_lo = all("toward the lo end" in m for m in msgs)
    side_hi = all("toward the hi end" in m for m in msgs)
    if side_lo or side_hi:
        detail["growth"] = msgs[0]
        return Membership(fname, cell, Verdict.OUT, witness=grid.lo if side_lo else grid.hi, detail=detail)
    return Membership(fname, cell, Verdict.INCONCLUSIVE, detail=detail)


def _refine_ratio(grid: ResidualGrid, c1: float, sup, lo: float, hi: float):
    """Golden-section on ``log c1`` for ``c2 / c1`` between certified grid neighbours.

    Staying inside ``[lo, hi]`` matters: just past a growth threshold the
    residual can diverge too slowly for any finite probe to notice.
    """

    def neg_ratio(t):
        s = _sup_or_none(grid, math.exp(t))
        if isinstance(s, Exception):
            return -math.inf
        return -max(0.0, s.value) / math.exp(t)

    t, v = golden_section_max(neg_ratio, math.log(lo), math.log(hi), xtol=1e-4)
    if math.isfinite(v) and -v < max(0.0, sup.value) / c1:
        c1n = math.exp(t)
        return c1n, residual_sup_1d(grid, c1n)
    return c1, sup


def classify_table(tags=tuple(ZooTag), cells=CELLS, **kw) -> list[Membership]:
    out = []
    for tag in tags:
        prob = make_zoo_problem(tag)
        for cell in cells:
            out.append(classify_function(prob, cell, name=ZooTag(tag).value, **kw))
    return out
