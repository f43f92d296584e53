"""Core helpers: words, metrics, censuses, sums and experiment drivers."""

from .errors import BudgetExceeded, DomainError, HypothesisViolation, RoseSumsError
from .metric import MetricStructure, barycenter, entropy
from .sums import estimate, parse_weight

__all__ = [
    "BudgetExceeded",
    "DomainError",
    "HypothesisViolation",
    "MetricStructure",
    "RoseSumsError",
    "barycenter",
    "entropy",
    "estimate",
    "parse_weight",
]
