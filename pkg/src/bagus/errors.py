"""Exception types raised by the estimator and its helpers."""

import numpy as np


class BagusError(Exception):
    """Base class for all package errors."""


class InvalidDataError(BagusError, ValueError):
    """Observations contain non-finite values or have the wrong shape."""


class NotPositiveDefiniteError(BagusError, np.linalg.LinAlgError):
    """A matrix required to be positive definite failed factorization."""


class DegenerateError(BagusError, ArithmeticError):
    """A pivot, diagonal or scalar needed to be strictly positive and was not."""


class DivergenceError(BagusError, ArithmeticError):
    """The objective became non-finite during a fit."""


class InternalConsistencyError(BagusError, RuntimeError):
    """A guaranteed invariant (symmetry, positive definiteness) was broken."""


class TuningFailedError(BagusError, RuntimeError):
    """Every grid point failed to fit.

    ``diagnostics`` holds one message per grid point.
    """

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class GenerationFailedError(BagusError, RuntimeError):
    """A random ground-truth matrix could not be made positive definite."""
