"""Exception types raised across the package."""

from __future__ import annotations


class PhaseBoundaryError(Exception):
    """Base class for all package errors."""


class ParamsError(PhaseBoundaryError, ValueError):
    """Invalid model parameters."""


class OrderingViolation(ParamsError):
    pass


class SignViolation(ParamsError):
    pass


class DensityViolation(ParamsError):
    pass


class ClosingSpeedViolation(ParamsError):
    pass


class BadFamilyParams(ParamsError):
    pass


class DegenerateParameters(PhaseBoundaryError, ValueError):
    """A velocity comparison fell inside the genericity tolerance band."""


class EmptyGroup(PhaseBoundaryError, ValueError):
    pass


class InternalInconsistency(PhaseBoundaryError, RuntimeError):
    """An identity that holds for generic parameters failed: a bug, not bad input."""


class ToleranceNotReached(PhaseBoundaryError, RuntimeError):
    pass


class NotErgodic(PhaseBoundaryError, ValueError):
    pass


class NotErgodicFace(NotErgodic):
    pass


class NotErgodicProcess(NotErgodic):
    pass


class FaceIsErgodic(PhaseBoundaryError, ValueError):
    pass


class NotOnManifold(PhaseBoundaryError, ValueError):
    pass


class StopTooSmall(PhaseBoundaryError, ValueError):
    pass


class InsufficientData(PhaseBoundaryError, ValueError):
    pass


class ParseError(PhaseBoundaryError, ValueError):
    pass


class SchemaError(PhaseBoundaryError, ValueError):
    pass
