"""Exception hierarchy shared by all kle modules."""


class KLEError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(KLEError, ValueError):
    """Input failed a precondition check."""


# linear algebra
class NonFinite(ValidationError):
    pass


class SingularFunction(ValidationError):
    pass


class NotDensityMatrix(ValidationError):
    pass


class ZeroDiagonal(ValidationError):
    pass


# kernels
class InvalidLengthscale(ValidationError):
    pass


class InvalidParams(ValidationError):
    pass


class InvalidProbs(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


# estimators
class EmptySequence(ValidationError):
    pass


class MissingLogprobs(ValidationError):
    pass


# hyperparameters
class NoCandidates(ValidationError):
    pass


class EmptyValidation(ValidationError):
    pass


# evaluation
class DegenerateLabels(ValidationError):
    pass


class TooFewExamples(ValidationError):
    pass


class NoCommonScenarios(ValidationError):
    pass


# NLI providers
class ProviderError(KLEError):
    """Raised by NLI providers. ``index`` is set when raised from a batch."""

    index: int | None = None


class ProviderUnavailable(ProviderError):
    pass


class CacheMiss(ProviderError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return Exception.__str__(self)
