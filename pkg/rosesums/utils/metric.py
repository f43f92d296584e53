"""Metric structures on the rose W_k and their volume entropy."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Iterable, Optional, Union

import numpy as np

from .errors import DomainError, InsufficientData
from .words import CyclicWord, Word, occurrence_vector

if TYPE_CHECKING:
    from .census import CensusTable

logger = logging.getLogger(__name__)

SIMPLEX_TOLERANCE = 1e-12
BISECTION_FLOOR = 1e-9
BISECTION_WIDTH = 1e-12
POWER_TOLERANCE = 1e-13
POWER_MAX_ITER = 100_000


@dataclass(frozen=True)
class MetricStructure:
    """Positive petal lengths on W_k; ``on_simplex`` asserts volume one."""

    lengths: tuple[float, ...]
    on_simplex: bool = True

    def __post_init__(self) -> None:
        lengths = tuple(float(x) for x in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) < 2:
            raise DomainError(f"A rose needs at least two petals, got {len(lengths)}.")
        if any(not math.isfinite(x) or x <= 0 for x in lengths):
            raise DomainError(f"Petal lengths must be positive and finite, got {lengths}.")
        if self.on_simplex and abs(sum(lengths) - 1.0) > SIMPLEX_TOLERANCE:
            raise DomainError(f"Petal lengths {lengths} do not sum to 1.")

    @classmethod
    def parse(cls, text: str, on_simplex: bool = True) -> "MetricStructure":
        """Read ``0.3,0.7`` style input."""
        try:
            values = tuple(float(part) for part in text.split(",") if part.strip())
        except ValueError as exc:
            raise DomainError(f"Cannot parse lengths {text!r}: {exc}") from exc
        return cls(values, on_simplex=on_simplex)

    @classmethod
    def from_json(cls, text: str, on_simplex: bool = True) -> "MetricStructure":
        return cls(tuple(json.loads(text)), on_simplex=on_simplex)

    def to_json(self) -> str:
        return json.dumps(list(self.lengths))

    @property
    def rank(self) -> int:
        return len(self.lengths)

    @property
    def shortest(self) -> float:
        return min(self.lengths)

    @property
    def longest(self) -> float:
        return max(self.lengths)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.lengths, dtype=float)

    def without_petal(self, index: int) -> "MetricStructure":
        """Restriction to the sub-rose missing petal ``index`` (0-based)."""
        if self.rank < 3:
            raise DomainError("Dropping a petal needs rank at least 3.")
        kept = self.lengths[:index] + self.lengths[index + 1 :]
        return MetricStructure(kept, on_simplex=False)


@dataclass(frozen=True)
class EntropyEstimate:
    """Solver entropy next to finite-radius counting estimates."""

    h_solver: float
    h_words: float
    h_cyclic: float
    h_classes: float
    h_rootfree: float
    h_classes_increment: float
    radius_used: float


def _check_rank(metric: MetricStructure, rank: int) -> None:
    if metric.rank != rank:
        raise DomainError(f"Metric of rank {metric.rank} cannot measure a word of rank {rank}.")


def word_length(metric: MetricStructure, word: Union[Word, CyclicWord]) -> float:
    _check_rank(metric, word.rank)
    return float(sum(metric.lengths[abs(value) - 1] for value in word.letters))


def class_length(metric: MetricStructure, word: CyclicWord) -> float:
    """Translation length of the class: occurrence vector dotted with the petals."""
    _check_rank(metric, word.rank)
    return float(np.dot(occurrence_vector(word), metric.lengths))


def barycenter(k: int) -> MetricStructure:
    if k < 2:
        raise DomainError(f"Rank must be at least 2, got {k}.")
    return MetricStructure(tuple([1.0 / k] * k))


def boundary_family_conj(k: int, t: float) -> MetricStructure:
    """(t, ..., t, 1 - (k-1)t) for 0 < t < 1/(k-1)."""
    if k < 2:
        raise DomainError(f"Rank must be at least 2, got {k}.")
    if not 0 < t < 1.0 / (k - 1):
        raise DomainError(f"t={t} must lie in (0, 1/{k - 1}).")
    return MetricStructure(tuple([t] * (k - 1) + [1.0 - (k - 1) * t]))


def boundary_family_prim(k: int, t: float) -> MetricStructure:
    """(t/2, ..., t/2, 1/2 - (k-2)t/2, 1/2) for k >= 3 and 0 < t < 1/(k-2)."""
    if k < 3:
        raise DomainError(f"The primitive family needs k >= 3, got {k}.")
    if not 0 < t < 1.0 / (k - 2):
        raise DomainError(f"t={t} must lie in (0, 1/{k - 2}).")
    head = [t / 2.0] * (k - 2)
    return MetricStructure(tuple(head + [0.5 - (k - 2) * t / 2.0, 0.5]))


def transition_matrix(metric: MetricStructure, s: float) -> np.ndarray:
    """Directed-edge matrix A(s): e -> f weighted exp(-s * length(f)), backtracks zeroed.

    Letter a_i sits at row 2(i-1) and a_i^-1 at 2(i-1)+1, so inverses differ in
    the lowest bit.
    """
    weights = np.repeat(np.exp(-s * metric.as_array()), 2)
    size = weights.size
    matrix = np.tile(weights, (size, 1))
    rows = np.arange(size)
    matrix[rows, rows ^ 1] = 0.0
    return matrix


def spectral_radius(
    matrix: np.ndarray, tol: float = POWER_TOLERANCE, max_iter: int = POWER_MAX_ITER
) -> float:
    """Power iteration squeezed between Collatz-Wielandt bounds."""
    vector = np.ones(matrix.shape[0])
    low = high = 0.0
    for _ in range(max_iter):
        image = matrix @ vector
        ratios = image / vector
        low, high = float(ratios.min()), float(ratios.max())
        if high - low <= tol * high:
            return 0.5 * (low + high)
        vector = image / image.max()
    logger.warning("Power iteration hit %d iterations; bounds [%r, %r]", max_iter, low, high)
    return 0.5 * (low + high)


def characteristic_gap(metric: MetricStructure, s: float) -> float:
    """sum_i 1/(1 + exp(s x_i)) - 1/2, strictly decreasing in s."""
    x = metric.as_array()
    return float(np.sum(np.exp(-np.logaddexp(0.0, s * x))) - 0.5)


def _bisect(positive_below_root, upper_start: float = 1.0) -> float:
    low, high = BISECTION_FLOOR, upper_start
    while positive_below_root(high):
        high *= 2.0
    while high - low > BISECTION_WIDTH:
        middle = 0.5 * (low + high)
        if positive_below_root(middle):
            low = middle
        else:
            high = middle
    return 0.5 * (low + high)


@lru_cache(maxsize=2048)
def entropy_spectral(metric: MetricStructure) -> float:
    return _bisect(lambda s: spectral_radius(transition_matrix(metric, s)) > 1.0)


@lru_cache(maxsize=2048)
def entropy_scalar(metric: MetricStructure) -> float:
    return _bisect(lambda s: characteristic_gap(metric, s) > 0.0)


def entropy(metric: MetricStructure, method: str = "scalar") -> float:
    """Volume entropy h_L of the rose.

    ``scalar`` solves the characteristic equation; ``spectral`` bisects on the
    spectral radius of :func:`transition_matrix`. The two agree to 1e-10.
    """
    if method == "scalar":
        return entropy_scalar(metric)
    if method == "spectral":
        return entropy_spectral(metric)
    raise DomainError(f"Unknown entropy method {method!r}.")


def growth_series(metric: MetricStructure, s: float) -> float:
    """Sum of exp(-s L(g)) over all g in F_k (identity included); inf at or below h_L."""
    z = np.exp(-s * metric.as_array())
    mass = float(np.sum(2.0 * z / (1.0 + z)))
    if mass >= 1.0:
        return math.inf
    return 1.0 / (1.0 - mass)


def _log_ratio(count: int, radius: float) -> float:
    if count <= 0 or radius <= 0:
        return 0.0
    return math.log(count) / radius


def empirical_entropy(
    metric: MetricStructure,
    radius: float,
    census: "CensusTable",
    increment: float = 1.0,
) -> EntropyEstimate:
    """Counting estimates of h, h', h'' and the root-free rate at radius R."""
    if not census.covers(metric, radius):
        raise InsufficientData(
            f"Census up to {census.max_total} letters does not cover radius {radius} "
            f"for lengths {metric.lengths}."
        )
    counts = census.radius_counts(metric, radius)
    previous = census.radius_counts(metric, max(radius - increment, 0.0))
    if counts["classes"] > 0 and previous["classes"] > 0:
        increment_rate = math.log(counts["classes"] / previous["classes"]) / increment
    else:
        increment_rate = 0.0
    return EntropyEstimate(
        h_solver=entropy(metric),
        h_words=_log_ratio(counts["words"], radius),
        h_cyclic=_log_ratio(counts["cyclic"], radius),
        h_classes=_log_ratio(counts["classes"], radius),
        h_rootfree=_log_ratio(counts["rootfree"], radius),
        h_classes_increment=increment_rate,
        radius_used=radius,
    )


def sandwich_inequalities(
    metric: MetricStructure, radius: float, census: "CensusTable"
) -> dict[str, bool]:
    """Exact integer checks of the counting sandwiches relating words, cyclic words and classes."""
    k = metric.rank
    extended = radius + metric.longest
    if not census.covers(metric, extended):
        raise InsufficientData(f"Census does not cover radius {extended}.")
    here = census.radius_counts(metric, radius)
    wider = census.radius_counts(metric, extended)
    return {
        "cyclic_le_words": here["cyclic"] <= here["words"],
        "words_le_2k_cyclic_wider": here["words"] <= 2 * k * wider["cyclic"],
        "classes_le_cyclic": here["classes"] <= here["cyclic"],
        "cyclic_le_scaled_classes": here["cyclic"] * metric.shortest <= radius * here["classes"],
    }


def tangent_direction(values: Iterable[float]) -> Optional[np.ndarray]:
    """Project onto the simplex tangent space {sum = 0} and normalise; None if degenerate."""
    vector = np.asarray(list(values), dtype=float)
    vector = vector - vector.mean()
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return None
    return vector / norm


__all__ = [
    "EntropyEstimate",
    "MetricStructure",
    "barycenter",
    "boundary_family_conj",
    "boundary_family_prim",
    "characteristic_gap",
    "class_length",
    "empirical_entropy",
    "entropy",
    "entropy_scalar",
    "entropy_spectral",
    "growth_series",
    "sandwich_inequalities",
    "spectral_radius",
    "tangent_direction",
    "transition_matrix",
    "word_length",
]
