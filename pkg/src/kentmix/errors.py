"""Exception hierarchy."""


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class ConvergenceError(ArithmeticError):
    """A series or iteration failed to converge within its cap."""


class UnboundedObjectiveError(DomainError):
    """The shape subproblem has no finite maximizer."""


class DegenerateDataError(DomainError):
    """Data carry no usable direction (e.g. zero resultant)."""


class RetractionError(ArithmeticError):
    """Frame plus step is rank deficient and cannot be retracted."""


class FitError(RuntimeError):
    """Every restart of a fit failed."""


class FormatError(ValueError):
    """A file does not follow the expected format."""


class UnsupportedSamplingError(DomainError):
    """Sampling was requested for a component with beta above the floor."""
