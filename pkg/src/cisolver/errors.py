"""Exception types shared across the solver, oracles and simulator."""

from __future__ import annotations


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(SolverError):
    """A constructor argument is out of its documented range."""


class InvalidDistribution(SolverError):
    """A probability vector has negative mass or does not sum to one."""


class MissingEntry(SolverError):
    """A functional table does not cover its full (state, action, noise) grid."""


class SizeOverflow(SolverError):
    """An enumerated space exceeds the configured cap."""

    def __init__(self, message: str, size: int | None = None):
        super().__init__(message)
        self.size = size


class Infeasible(SolverError):
    """A brute-force enumeration exceeds its branch or count cap."""

    def __init__(self, message: str, count: int | None = None):
        super().__init__(message)
        self.count = count


class ZeroProbabilityObservation(SolverError):
    """A belief update was conditioned on a message with probability <= 1e-15."""


class UnreachableInformation(SolverError):
    """A policy has no entry for a common-information node realized at run time."""
