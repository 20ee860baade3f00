"""Gradient descent and SGD under a parametric gradient-alignment inequality.

The inequality ``<grad f(x), x - proj_S(x)> >= c1 P(x; S) - c2`` ties the
alignment of the gradient with the direction to a solution set ``S`` to a
progress measure ``P``. This package runs GD/SGD with Polyak-type steps,
records replayable trajectories, and checks the constants and the resulting
descent and rate bounds numerically.
"""

from .errors import (
    BoundaryMax,
    ConfigError,
    DegenerateGradient,
    DimensionMismatch,
    HypothesisViolated,
    MissingIterates,
    NegativeGap,
    UnifiedDescentError,
)
from .geometry import Projection, SetKind, SolutionSet, distance_sq, project
from .optimizer import BetaKind, BetaSchedule, RunConfig, RunSummary, Status, TrajectoryRecord, replay_samples, run_gd, run_sgd
from .problems import (
    HalfSpaceDataset,
    Problem,
    ZooTag,
    finite_difference_gradient,
    generate_halfspace_dataset,
    make_halfspace_problem,
    make_quadratic_problem,
    make_rng,
    make_zoo_problem,
)
from .progress import ProgressKind, ProgressSpec, eval_progress, eval_sample_progress
from .stepsizes import PolicyKind, StepContext, StepsizePolicy, compute_step, max_admissible_step

__version__ = "0.1.0"

__all__ = [
    "BoundaryMax",
    "ConfigError",
    "DegenerateGradient",
    "DimensionMismatch",
    "HypothesisViolated",
    "MissingIterates",
    "NegativeGap",
    "UnifiedDescentError",
    "Projection",
    "SetKind",
    "SolutionSet",
    "distance_sq",
    "project",
    "BetaKind",
    "BetaSchedule",
    "RunConfig",
    "RunSummary",
    "Status",
    "TrajectoryRecord",
    "replay_samples",
    "run_gd",
    "run_sgd",
    "HalfSpaceDataset",
    "Problem",
    "ZooTag",
    "finite_difference_gradient",
    "generate_halfspace_dataset",
    "make_halfspace_problem",
    "make_quadratic_problem",
    "make_rng",
    "make_zoo_problem",
    "ProgressKind",
    "ProgressSpec",
    "eval_progress",
    "eval_sample_progress",
    "PolicyKind",
    "StepContext",
    "StepsizePolicy",
    "compute_step",
    "max_admissible_step",
]
