"""Exception hierarchy shared by every module."""


class VerificationError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(VerificationError, ValueError):
    """A point lies on (or too close to) a singularity or outside the domain."""


class EvaluationError(VerificationError, ArithmeticError):
    """A field evaluation produced a non-finite value."""


class ParameterError(VerificationError, ValueError):
    """A family parameter lies outside its admissible range."""


class DivergenceError(VerificationError):
    """An integral over the plane does not converge."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InfiniteTotalCurvatureError(DivergenceError):
    """The density e^{2f+2u} of a solution is not integrable."""


class CompletenessError(VerificationError):
    """The metric has finite diameter, so volume growth is meaningless."""


class UsageError(VerificationError, ValueError):
    """An operation was called with arguments it cannot handle."""


class LevelSetError(VerificationError, ValueError):
    """Threshold outside the sampled range: the level set is empty or everything."""
