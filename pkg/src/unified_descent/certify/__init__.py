"""Certification: residual constants, the 1-D oracle, bound checks and class membership."""

from .bounds import (
    BoundCheck,
    BoundName,
    DescentStep,
    Variant,
    check_descent_step,
    check_descent_steps,
    check_linear_rate,
    check_min_progress,
    summarize_checks,
)
from .classify import CELLS, Cell, Membership, Verdict, classify_function, classify_table
from .oracle import ORACLE_CASES, ResidualGrid, global_c2_1d, golden_section_max, oracle_table, residual_sup_1d
from .residuals import (
    AssumptionParams,
    ResidualReport,
    TrajectoryAnalysis,
    analyze_trajectory,
    residual_at,
    trajectory_constants,
)

__all__ = [
    "AssumptionParams",
    "ResidualReport",
    "TrajectoryAnalysis",
    "analyze_trajectory",
    "residual_at",
    "trajectory_constants",
    "BoundCheck",
    "BoundName",
    "DescentStep",
    "Variant",
    "check_descent_step",
    "check_descent_steps",
    "check_linear_rate",
    "check_min_progress",
    "summarize_checks",
    "ResidualGrid",
    "global_c2_1d",
    "golden_section_max",
    "residual_sup_1d",
    "oracle_table",
    "ORACLE_CASES",
    "Cell",
    "CELLS",
    "Membership",
    "Verdict",
    "classify_function",
    "classify_table",
]
