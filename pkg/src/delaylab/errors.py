"""Exception hierarchy.

Configuration problems derive from :class:`ConfigurationError` and numeric
failures from :class:`NumericFailure`; the CLI maps them to exit codes 2 and 3.
"""


class DelayLabError(Exception):
    """Base class for every error raised by delaylab."""


class ConfigurationError(DelayLabError, ValueError):
    """Invalid inputs, parameters or options."""


class DomainError(ConfigurationError):
    """A time or argument lies outside the domain of an object."""


class PreconditionError(ConfigurationError):
    """An operation was called on data violating its precondition."""


class UnsupportedDimensionError(ConfigurationError):
    pass


class NumericFailure(DelayLabError, ArithmeticError):
    """A numerical procedure failed (blow-up, divergence, non-convergence)."""


class BlowUpError(NumericFailure):
    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"non-finite state encountered at t={self.time:.17g}")


class DivergenceError(NumericFailure):
    pass


class SingularityError(NumericFailure):
    pass


class RefinementError(NumericFailure):
    """Newton refinement of a characteristic root did not converge."""


class BoundaryRootError(NumericFailure):
    """A characteristic root lies on (or too close to) a search rectangle edge."""

    def __init__(self, side, where=None):
        self.side = side
        self.where = where
        msg = f"characteristic function nearly vanishes on the {side} edge"
        if where is not None:
            msg += f" near {where:.6g}"
        super().__init__(msg + "; perturb the window")


class NoRootsFound(NumericFailure):
    """The search window contains no characteristic roots; widen it."""


class NoPositiveSteadyState(ConfigurationError):
    def __init__(self, component, value):
        self.component = component
        self.value = value
        super().__init__(
            f"steady state component {component} is {value:.6g}, not positive")


class NoImaginaryRootError(ConfigurationError):
    pass
