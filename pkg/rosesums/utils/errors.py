"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class RoseSumsError(Exception):
    """Base class for every error raised by ``rosesums``."""

    exit_code = 1


class DomainError(RoseSumsError, ValueError):
    """An input lies outside the domain of an operation."""


class HypothesisViolation(RoseSumsError):
    """A weight, rank or parameter violates the hypotheses of a theorem driver."""

    exit_code = 2


class BudgetExceeded(RoseSumsError):
    """An explicit resource cap tripped before the computation could finish."""

    exit_code = 3


class NoCertificate(RoseSumsError):
    """A tail bound was requested for a weight without any decay certificate."""


class InsufficientData(RoseSumsError):
    """A census does not cover the radius an estimate needs."""


class CacheError(RoseSumsError):
    """A cache file is missing, unreadable or carries the wrong schema version."""


__all__ = [
    "BudgetExceeded",
    "CacheError",
    "DomainError",
    "HypothesisViolation",
    "InsufficientData",
    "NoCertificate",
    "RoseSumsError",
]
