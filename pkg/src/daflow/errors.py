"""Exception hierarchy shared across the package.

Every error raised on purpose by this package derives from ``DAError``, so
callers can catch the whole family with one clause. Where a builtin category
fits (``ValueError``, ``LookupError``, ``IndexError``) the semantic class
also subclasses it.
"""

from __future__ import annotations


class DAError(Exception):
    """Base class for all errors raised by this package."""


class DistributionError(DAError, ValueError):
    """A density constructor contract was violated (NaN, negative mass, bad normalization)."""


class DimensionMismatch(DAError, ValueError):
    """Two objects that must agree on grid shape or axis do not."""


class PositivityViolation(DAError):
    """A density required to be strictly positive has a zero cell."""


class TargetNotPositive(PositivityViolation):
    """An operation that needs a strictly positive target received one with zeros."""


class StateNotRetained(DAError, LookupError):
    """A diagnostic asked for an iterate the trace did not retain."""


class NotConverged(DAError):
    """A diagnostic that requires a converged trace received one that is not."""


class ZeroConditional(DAError):
    """A conditional kernel entry needed as a divisor is zero."""


class BudgetExceeded(DAError):
    """replicas * half_steps exceeds the configured sampling budget."""


class IndexOutOfRange(DAError, IndexError):
    """A requested time index lies outside the recorded chain."""
