"""Exception hierarchy shared by all modules."""


class UnifiedDescentError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(UnifiedDescentError, ValueError):
    pass


class ConfigError(UnifiedDescentError, ValueError):
    """Invalid run configuration; the CLI maps this to exit code 2."""


class StepsizeError(UnifiedDescentError):
    """A stepsize policy could not produce a positive step."""


class DegenerateGradient(StepsizeError):
    """Squared gradient norm fell below ``grad_floor**2``.

    Polyak-type steps are 0/0 at a stationary point, so the run must stop
    instead of stepping.
    """


class NegativeGap(StepsizeError):
    """Objective value below the supplied optimum: the ``f*`` is wrong."""


class MissingIterates(UnifiedDescentError):
    """A trajectory was recorded without (or with thinned) iterates."""


class BoundaryMax(UnifiedDescentError):
    """The residual supremum sits on the search-interval boundary."""


class HypothesisViolated(UnifiedDescentError):
    """An extra hypothesis of a rate bound does not hold on the run data."""
