"""Exception types raised across the package."""

import numpy as np


class HDQPError(Exception):
    """Base class for every error raised by :mod:`hdqp`."""


class DomainError(HDQPError, ValueError):
    """A scalar argument lies outside the region where a formula is valid."""


class NotPositiveDefinite(HDQPError, np.linalg.LinAlgError):
    pass


class SingularMatrix(HDQPError, np.linalg.LinAlgError):
    """A matrix that must be inverted is numerically singular.

    ``factor`` names the matrix that failed, so callers chaining several
    solves can tell which one broke.
    """

    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor


class SingularM(SingularMatrix):
    pass


class SingularBorderedMatrix(SingularMatrix):
    pass


class SingularBlock(SingularMatrix):
    pass


class SingularN(SingularMatrix):
    pass


class InvalidAlpha(DomainError):
    pass


class RankOutOfBounds(HDQPError, IndexError):
    pass


class DegreesOfFreedomTooSmall(DomainError):
    pass


class RankDeficientLambda(HDQPError, np.linalg.LinAlgError):
    pass


class NoRoot(HDQPError, ArithmeticError):
    pass


class DegenerateSample(HDQPError, ValueError):
    pass


class DegenerateLambda(HDQPError, ValueError):
    pass


class DegenerateResample(HDQPError, np.linalg.LinAlgError):
    pass


class Infeasible(HDQPError, ValueError):
    pass


class UnknownFigure(HDQPError, KeyError):
    pass


class ConfigError(HDQPError, ValueError):
    pass


class ReplicateError(HDQPError, RuntimeError):
    """A Monte Carlo replicate failed; the cause is chained."""

    def __init__(self, message, replicate_index):
        super().__init__(message)
        self.replicate_index = replicate_index
