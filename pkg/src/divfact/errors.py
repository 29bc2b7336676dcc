"""Exception types shared across the package."""

import numpy as np


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class DefinitenessError(np.linalg.LinAlgError):
    """A matrix expected to be positive definite is not.

    ``index`` is the zero-based position of the failing Cholesky pivot, or
    ``None`` when it is unknown.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularityError(np.linalg.LinAlgError):
    """A block that must be inverted is (numerically) singular."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class InternalConsistencyError(ArithmeticError):
    """A provably nonnegative quantity came out materially negative."""


class NumericalBreakdown(RuntimeError):
    """An iteration cannot continue; ``trace`` holds the records so far."""

    def __init__(self, reason, trace=None, iterate=None):
        super().__init__(reason)
        self.reason = reason
        self.trace = trace
        self.iterate = iterate
