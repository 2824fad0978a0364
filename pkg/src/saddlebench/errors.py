"""Exception taxonomy shared across the package."""


class SaddlebenchError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SaddlebenchError):
    pass


class ZeroMatrix(SaddlebenchError):
    pass


class NonPositiveValue(SaddlebenchError):
    pass


class WindowTooSmall(SaddlebenchError):
    pass


class InfeasibleSet(SaddlebenchError):
    pass


class TooManyVertices(SaddlebenchError):
    pass


class DomainError(SaddlebenchError):
    pass


class InfeasiblePoint(SaddlebenchError):
    pass


class UnsupportedNormPair(SaddlebenchError):
    pass


class NumericalOverflow(SaddlebenchError):
    pass


class ConfigMismatch(SaddlebenchError):
    pass


class MissingSecondary(SaddlebenchError):
    pass


class AtEquilibrium(SaddlebenchError):
    pass


class TooFewPoints(SaddlebenchError):
    pass


class InvalidBeta(SaddlebenchError):
    pass


class PreconditionViolated(SaddlebenchError):
    pass


class LpFailure(SaddlebenchError):
    pass


class NonPositiveXi(SaddlebenchError):
    pass


class DegenerateSample(SaddlebenchError):
    pass


class ParseError(SaddlebenchError):
    pass


class ValidationError(SaddlebenchError):
    pass
