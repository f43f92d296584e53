"""Weights and certified evaluation of the sums C_f, P_f and S_f.

A sum is reported as a partial sum over every class of metric length at
most R plus a rigorous bound on the remainder. Exponential envelopes give
geometric and entropy-based (Chernoff) tail bounds; polynomial decay gives
the visible-point bound used for P_f on the two-petal rose.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .census import (
    CensusTable,
    cyclically_reduced_count,
    first_quadrant_visible,
    length_lex_key,
    necklace_count,
    occurrence_census,
    rootfree_necklace_count,
    whitehead_primitives_upto,
)
from .errors import DomainError, HypothesisViolation, NoCertificate
from .filters import max_letters_within, parse_weight_descriptor, within_radius
from .metric import MetricStructure, class_length, entropy
from .words import CyclicWord

logger = logging.getLogger(__name__)

SUM_KINDS = ("C", "P", "S")
STATUSES = ("converged", "divergence_certified", "inconclusive")
VERDICTS = ("converges", "diverges", "unknown")
CHERNOFF_GRID = 2001
EXPLICIT_TAIL_RATIO = 1e-3
EXPLICIT_TAIL_MAX_TERMS = 10_000_000
FD_STEP = 1e-4
ADMISSIBILITY_GRID = tuple(2.0 ** e for e in range(-6, 7))

ArrayLike = Union[float, np.ndarray]
CensusProvider = Callable[[int, int, Optional[tuple[int, ...]]], CensusTable]


@dataclass(frozen=True)
class DecayEnvelope:
    """sigma_lower^x <= f(x) <= sigma_upper^x for every x >= start."""

    sigma_lower: float
    sigma_upper: float
    start: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.sigma_lower <= self.sigma_upper < 1:
            raise DomainError(
                f"Envelope needs 0 < sigma1 <= sigma2 < 1, got ({self.sigma_lower}, {self.sigma_upper})."
            )
        if self.start < 0:
            raise DomainError(f"Envelope start must be nonnegative, got {self.start}.")

    @property
    def upper_rate(self) -> float:
        """ln(1/sigma2): the decay rate a convergent sum must beat."""
        return -math.log(self.sigma_upper)

    @property
    def lower_rate(self) -> float:
        return -math.log(self.sigma_lower)


@dataclass(frozen=True)
class PolyDecay:
    """f(x) <= constant * x^(-3-epsilon) for every x >= start."""

    constant: float
    epsilon: float
    start: float = 0.0

    def __post_init__(self) -> None:
        if self.constant <= 0 or self.epsilon <= 0:
            raise DomainError(f"Polynomial decay needs C > 0 and eps > 0, got ({self.constant}, {self.epsilon}).")


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """A positive non-increasing weight with machine-checkable decay metadata."""

    descriptor: str
    evaluate: Callable[[ArrayLike], ArrayLike]
    decay_envelope: Optional[DecayEnvelope] = None
    poly_decay: Optional[PolyDecay] = None
    convex_flag: bool = False
    first_derivative: Optional[Callable[[ArrayLike], ArrayLike]] = None
    second_derivative: Optional[Callable[[ArrayLike], ArrayLike]] = None

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return self.evaluate(x)

    def derivative(self, x: ArrayLike) -> ArrayLike:
        if self.first_derivative is not None:
            return self.first_derivative(x)
        return (self.evaluate(np.add(x, FD_STEP)) - self.evaluate(np.subtract(x, FD_STEP))) / (2 * FD_STEP)

    def curvature(self, x: ArrayLike) -> ArrayLike:
        """f''(x), closed form when known, else a central difference."""
        if self.second_derivative is not None:
            return self.second_derivative(x)
        left = self.evaluate(np.subtract(x, FD_STEP))
        right = self.evaluate(np.add(x, FD_STEP))
        return (right - 2 * self.evaluate(x) + left) / FD_STEP**2


def exp_decay(sigma: float) -> WeightFunction:
    """f(x) = sigma^x with exact envelope (sigma, sigma, 0)."""
    if not 0 < sigma < 1:
        raise DomainError(f"sigma must lie in (0, 1), got {sigma}.")
    log_sigma = math.log(sigma)
    # sup_x x^4 sigma^x = (4 / (e ln(1/sigma)))^4
    witness = (4.0 / (math.e * -log_sigma)) ** 4
    return WeightFunction(
        descriptor=f"exp:{sigma:g}",
        evaluate=lambda x: np.exp(log_sigma * np.asarray(x, dtype=float)),
        decay_envelope=DecayEnvelope(sigma, sigma, 0.0),
        poly_decay=PolyDecay(witness, 1.0),
        convex_flag=True,
        first_derivative=lambda x: log_sigma * np.exp(log_sigma * np.asarray(x, dtype=float)),
        second_derivative=lambda x: log_sigma**2 * np.exp(log_sigma * np.asarray(x, dtype=float)),
    )


def _logistic_tail(x: ArrayLike) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, np.asarray(x, dtype=float)))


def mcshane() -> WeightFunction:
    """f(x) = 1/(e^x + 1), the weight of McShane's identity.

    With u = f(x): f' = -u(1-u) and f'' = u(1-u)(1-2u) = e^x(e^x-1)/(e^x+1)^3.
    """

    def second(x: ArrayLike) -> np.ndarray:
        u = _logistic_tail(x)
        return u * (1 - u) * (1 - 2 * u)

    def first(x: ArrayLike) -> np.ndarray:
        u = _logistic_tail(x)
        return -u * (1 - u)

    return WeightFunction(
        descriptor="mcshane",
        evaluate=_logistic_tail,
        # e^{-1.01 x} <= 1/(e^x+1) once e^{0.01 x} >= 1 + e^{-x}, true from x = 5.
        decay_envelope=DecayEnvelope(math.exp(-1.01), math.exp(-1.0), 5.0),
        poly_decay=PolyDecay(256.0 * math.exp(-4.0), 1.0),
        convex_flag=True,
        first_derivative=first,
        second_derivative=second,
    )


def power(p: float) -> WeightFunction:
    """f(x) = x^(-p); decay witnessed for x >= 1 when p > 3."""
    if p <= 0:
        raise DomainError(f"Power exponent must be positive, got {p}.")
    decay = PolyDecay(1.0, (p - 3.0) / 2.0, 1.0) if p > 3 else None
    return WeightFunction(
        descriptor=f"pow:{p:g}",
        evaluate=lambda x: np.power(np.asarray(x, dtype=float), -p),
        poly_decay=decay,
        convex_flag=True,
        first_derivative=lambda x: -p * np.power(np.asarray(x, dtype=float), -p - 1),
        second_derivative=lambda x: p * (p + 1) * np.power(np.asarray(x, dtype=float), -p - 2),
    )


def builtin_weights() -> dict[str, Callable[..., WeightFunction]]:
    """Catalogue of weight constructors keyed by descriptor prefix."""
    return {"exp": exp_decay, "mcshane": mcshane, "pow": power}


def parse_weight(descriptor: str) -> WeightFunction:
    kind, parameter = parse_weight_descriptor(descriptor)
    factory = builtin_weights()[kind]
    return factory() if parameter is None else factory(parameter)


def check_weight_contract(f: WeightFunction) -> list[str]:
    """Sampled positivity, monotonicity and envelope checks; returns the failures."""
    problems = []
    grid = np.geomspace(2.0**-6, 2.0**6, 64)
    values = np.asarray(f(grid), dtype=float)
    if np.any(values <= 0):
        problems.append("f is not positive on the sample grid")
    if np.any(np.diff(values) > 1e-15 * np.abs(values[:-1])):
        problems.append("f increases somewhere on the sample grid")
    envelope = f.decay_envelope
    if envelope is not None:
        xs = envelope.start + np.geomspace(1e-2, 1e2, 64)
        fx = np.asarray(f(xs), dtype=float)
        tolerance = 1e-12 * fx
        if np.any(fx < envelope.sigma_lower**xs - tolerance) or np.any(fx > envelope.sigma_upper**xs + tolerance):
            problems.append("decay envelope fails on sampled x >= N")
    return problems


@dataclass(frozen=True)
class ConvergenceCertificate:
    """Why a sum converges or diverges: entropy against the envelope rates."""

    verdict: str
    basis: str
    entropy: Optional[float] = None
    upper_rate: Optional[float] = None
    lower_rate: Optional[float] = None
    margin: Optional[float] = None
    dropped_petal: Optional[int] = None


@dataclass(frozen=True)
class SumBudget:
    """Resource caps for estimates; exceeding one makes a result inconclusive."""

    max_letters: int = 60
    max_box: int = 2000
    oracle_maxlen: Optional[int] = None
    max_radius: float = 200.0

    def __post_init__(self) -> None:
        if self.max_letters < 1 or self.max_box < 1 or self.max_radius <= 0:
            raise DomainError("Budgets must be positive.")
        if self.oracle_maxlen is not None and self.oracle_maxlen < 1:
            raise DomainError("oracle_maxlen must be positive.")

    def letter_budget(self, k: int) -> int:
        """Census length cap; the census grows like |m|^k, so rank >= 4 stops at 30."""
        return self.max_letters if k <= 3 else min(self.max_letters, 30)

    def oracle_length(self, k: int) -> int:
        if self.oracle_maxlen is not None:
            return self.oracle_maxlen
        return {2: 10, 3: 6}.get(k, 4)


@dataclass(frozen=True)
class SumEstimate:
    """Partial sum, certified tail bound and status.

    For a converged estimate the true sum lies in [value, value + tail_bound].
    Every class of length <= R_used is summed; a visible-point box also sums
    some longer ones, up to ``longest_summed``.
    A divergence certificate keeps the largest partial sum reached, never inf.
    """

    kind: str
    value: float
    tail_bound: float
    status: str
    R_used: float
    terms_used: int
    certificate: Optional[ConvergenceCertificate] = None
    notes: tuple[str, ...] = field(default_factory=tuple)
    longest_summed: Optional[float] = None

    @property
    def upper(self) -> float:
        return self.value + self.tail_bound


def _default_census(k: int, max_total: int, caps: Optional[tuple[int, ...]]) -> CensusTable:
    return occurrence_census(k, max_total, caps=caps)


def _check_kind(kind: str) -> None:
    if kind not in SUM_KINDS:
        raise DomainError(f"Unknown sum kind {kind!r}; expected C, P or S.")


def _census_column(kind: str) -> str:
    return "rootfree" if kind == "S" else "all"


def partial_sum(
    series: Iterable[Union[float, CyclicWord, tuple[int, int, float]]],
    f: WeightFunction,
    radius: float,
    metric: Optional[MetricStructure] = None,
) -> tuple[float, int]:
    """Sum f(length) over stream items with length <= radius, pairwise in binary64.

    Items are plain lengths, (p, q, length) triples from the visible-point
    stream, or classes (which need ``metric``).
    """
    lengths = []
    for item in series:
        if isinstance(item, CyclicWord):
            if metric is None:
                raise DomainError("Measuring classes needs a metric.")
            lengths.append(class_length(metric, item))
        elif isinstance(item, tuple):
            lengths.append(float(item[-1]))
        else:
            lengths.append(float(item))
    if not lengths:
        return 0.0, 0
    values = np.asarray(lengths, dtype=float)
    values = values[within_radius(values, radius)]
    if values.size == 0:
        return 0.0, 0
    return float(np.sum(f(values))), int(values.size)


def weighted_sum(lengths: np.ndarray, counts: Sequence[int], f: WeightFunction) -> float:
    """sum_i counts_i * f(lengths_i) with exact integer counts folded into binary64."""
    if len(lengths) == 0:
        return 0.0
    weights = np.asarray(f(lengths), dtype=float)
    try:
        multiplicities = np.array([float(c) for c in counts], dtype=float)
    except OverflowError:
        logger.warning("Class counts overflow binary64; summing in log space")
        logs = np.array([math.log(c) for c in counts]) + np.log(weights)
        return float(np.exp(np.logaddexp.reduce(logs)))
    return float(np.sum(multiplicities * weights))


def census_partial_sum(
    census: CensusTable, metric: MetricStructure, f: WeightFunction, radius: float, kind: str = "C"
) -> tuple[float, int]:
    """Occurrence-census route: sum_m q_m f(m . x) over m . x <= radius."""
    lengths, counts = census.terms_within(metric, radius, _census_column(kind))
    return weighted_sum(lengths, counts, f), int(sum(counts, 0))


def visible_partial_sum(metric: MetricStructure, f: WeightFunction, box: int) -> tuple[float, int]:
    """P_f partial sum over visible points with max(|p|, |q|) <= box (rank 2)."""
    if metric.rank != 2:
        raise DomainError("Visible-point sums need rank 2.")
    p, q, multiplicity = first_quadrant_visible(box, box)
    lengths = metric.lengths[0] * p + metric.lengths[1] * q
    return float(np.sum(multiplicity * np.asarray(f(lengths), dtype=float))), int(multiplicity.sum())


def family_partial_sum(
    metric: MetricStructure,
    petal: int,
    f: WeightFunction,
    radius: float,
    sub_census: CensusTable,
) -> tuple[float, int]:
    """Sum of f over the primitive family [g a_j], g in the sub-rose without petal j.

    ``sub_census`` counts reduced words of that sub-rose; the identity gives
    the class [a_j] itself.
    """
    sub_metric = metric.without_petal(petal)
    extra = metric.lengths[petal]
    budget = radius - extra
    if budget < 0:
        return 0.0, 0
    lengths, counts = sub_census.terms_within(sub_metric, budget, column="words")
    value = weighted_sum(lengths + extra, counts, f) + float(f(extra))
    return value, int(sum(counts, 0)) + 1


def growth_series_values(metric: MetricStructure, s: np.ndarray) -> np.ndarray:
    """Vectorised growth series Z(s); inf where the series diverges."""
    z = np.exp(-np.outer(np.asarray(s, dtype=float), metric.as_array()))
    mass = np.sum(2.0 * z / (1.0 + z), axis=1)
    with np.errstate(divide="ignore"):
        return np.where(mass < 1.0, 1.0 / (1.0 - mass), np.inf)


def chernoff_tail(metric: MetricStructure, envelope: DecayEnvelope, radius: float) -> float:
    """min over h < s' < s of exp(-(s - s')R) (Z(s') - 1), with s = ln(1/sigma2).

    Every class has a distinct cyclically reduced representative of the same
    length, so the classes longer than R are charged against the growth series.
    """
    s = envelope.upper_rate
    h = entropy(metric)
    if s <= h or radius < envelope.start:
        return math.inf
    u = np.linspace(0.0, 1.0, CHERNOFF_GRID)[1:-1]
    s_prime = h + (s - h) * u
    bound = np.exp(-(s - s_prime) * radius) * (growth_series_values(metric, s_prime) - 1.0)
    return float(np.min(bound))


def _necklaces_at(kind: str, k: int, n: int) -> int:
    return rootfree_necklace_count(k, n) if kind == "S" else necklace_count(k, n)


def word_length_tail(
    metric: MetricStructure,
    f: WeightFunction,
    radius: float,
    census: Optional[CensusTable] = None,
    kind: str = "C",
) -> float:
    """Bound by cyclic length: classes of length n weigh at most f(n * m_min).

    Lengths beyond R/m_min use the geometric over-count by cyclically reduced
    words. Classes of length n <= R/m_min that still exceed R are charged
    f(R) each; the census says how many of them were already summed.
    """
    envelope = f.decay_envelope
    if envelope is None:
        raise NoCertificate(f"Weight {f.descriptor} carries no decay envelope.")
    k = metric.rank
    shortest = metric.shortest
    ratio = (2 * k - 1) * envelope.sigma_upper**shortest
    if ratio >= 1:
        return math.inf
    n_radius = max_letters_within(shortest, radius)
    first_beyond = n_radius + 1
    envelope_letters = math.ceil(envelope.start / shortest) if envelope.start > 0 else 0
    geometric_from = max(first_beyond, envelope_letters)
    total = 0.0
    for n in range(first_beyond, geometric_from):
        total += float(cyclically_reduced_count(k, n)) * float(f(n * shortest))
    total += (2 * k / (2 * k - 1)) * ratio**geometric_from / (1 - ratio)

    if n_radius > 0:
        included = _included_by_length(census, metric, radius, kind, n_radius)
        at_radius = float(f(radius))
        for n in range(1, n_radius + 1):
            excess = _necklaces_at(kind, k, n) - included.get(n, 0)
            if excess <= 0:
                continue
            try:
                total += float(excess) * at_radius
            except OverflowError:
                return math.inf
    return total


def _included_by_length(
    census: Optional[CensusTable], metric: MetricStructure, radius: float, kind: str, upto: int
) -> dict[int, int]:
    if census is None or census.rank != metric.rank:
        return {}
    column = "rootfree" if kind == "S" else "classes"
    mask = within_radius(census.metric_lengths(metric), radius)
    totals = census.frame["total"].to_numpy(dtype=np.int64)[mask]
    counts = census.column(column)[mask]
    included: dict[int, int] = {}
    for n, count in zip(totals.tolist(), counts):
        if n <= upto:
            included[n] = included.get(n, 0) + count
    return included


def tail_bound_Cf(
    metric: MetricStructure,
    f: WeightFunction,
    radius: float,
    census: Optional[CensusTable] = None,
    kind: str = "C",
) -> float:
    """Certified bound on sum of f over classes longer than ``radius``.

    The smaller of the cyclic-length bound and the Chernoff bound; inf when
    neither is finite. Raises ``NoCertificate`` without a decay envelope.
    """
    envelope = f.decay_envelope
    if envelope is None:
        raise NoCertificate(f"Weight {f.descriptor} carries no decay envelope.")
    return min(word_length_tail(metric, f, radius, census, kind), chernoff_tail(metric, envelope, radius))


def _envelope_visible_tail(c: float, f: WeightFunction, box: int) -> float:
    envelope = f.decay_envelope
    assert envelope is not None
    first_enveloped = max(box + 1, math.ceil(envelope.start / c))
    explicit = np.arange(box + 1, first_enveloped, dtype=float)
    total = float(np.sum(8.0 * explicit * np.asarray(f(c * explicit), dtype=float))) if explicit.size else 0.0
    ratio = envelope.sigma_upper**c
    start = first_enveloped
    # sum_{M >= start} M r^M = r^start (start - (start - 1) r) / (1 - r)^2
    total += 8.0 * ratio**start * (start - (start - 1) * ratio) / (1.0 - ratio) ** 2
    return total


def _poly_visible_tail(c: float, f: WeightFunction, box: int) -> float:
    decay = f.poly_decay
    assert decay is not None
    exponent = 1.0 + decay.epsilon
    scale = 8.0 * decay.constant * c ** (-3.0 - decay.epsilon) / exponent
    first = max(box + 1, math.ceil(decay.start / c))
    running = 0.0
    if first > box + 1:
        early = np.arange(box + 1, first, dtype=float)
        running += float(np.sum(8.0 * early * np.asarray(f(c * early), dtype=float)))
    position = first
    chunk = 4096
    while True:
        block = np.arange(position, position + chunk, dtype=float)
        running += float(np.sum(8.0 * block * np.asarray(f(c * block), dtype=float)))
        position += chunk
        # sum_{M >= position} 8M C (cM)^(-3-eps) <= scale * (position - 1)^(-1-eps)
        remainder = scale * (position - 1) ** (-exponent)
        if remainder <= EXPLICIT_TAIL_RATIO * running or position > EXPLICIT_TAIL_MAX_TERMS:
            return running + remainder
        chunk = min(chunk * 2, 1 << 20)


def visible_tail(c: float, f: WeightFunction, box: int) -> float:
    """sum_{M > box} 8M f(cM): every visible point on the square of radius M has length >= cM."""
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}.")
    candidates = []
    if f.decay_envelope is not None:
        candidates.append(_envelope_visible_tail(c, f, box))
    if f.poly_decay is not None:
        candidates.append(_poly_visible_tail(c, f, box))
    if not candidates:
        raise NoCertificate(f"Weight {f.descriptor} has neither an envelope nor polynomial decay.")
    return min(candidates)


def tail_bound_Pf_k2(t: float, f: WeightFunction, box: int) -> float:
    """Visible-point tail at L = (t, 1 - t) beyond the box max(|p|, |q|) <= box.

    Uses c = min(t, 1 - t): the axis points (1, 0) and (0, 1) break the
    sharper choice c = max(t, 1 - t).
    """
    if not 0 < t < 1:
        raise DomainError(f"t must lie in (0, 1), got {t}.")
    return visible_tail(min(t, 1.0 - t), f, box)


def best_sub_rose(metric: MetricStructure) -> tuple[int, float]:
    """Petal whose removal leaves the sub-rose of largest entropy."""
    entropies = [entropy(metric.without_petal(j)) for j in range(metric.rank)]
    best = int(np.argmax(entropies))
    return best, entropies[best]


def convergence_certificate(kind: str, metric: MetricStructure, f: WeightFunction) -> ConvergenceCertificate:
    _check_kind(kind)
    if kind == "P" and metric.rank == 2:
        if f.decay_envelope is not None or f.poly_decay is not None:
            return ConvergenceCertificate("converges", "visible points grow quadratically")
        return ConvergenceCertificate("unknown", "no decay witness")
    envelope = f.decay_envelope
    if envelope is None:
        return ConvergenceCertificate("unknown", "no decay envelope")
    h = entropy(metric)
    upper, lower = envelope.upper_rate, envelope.lower_rate
    if h < upper:
        basis = "entropy below ln(1/sigma2)" if kind != "P" else "P_f <= C_f and entropy below ln(1/sigma2)"
        return ConvergenceCertificate("converges", basis, h, upper, lower, upper - h)
    if kind in ("C", "S"):
        if h > lower:
            return ConvergenceCertificate("diverges", "entropy above ln(1/sigma1)", h, upper, lower, h - lower)
        return ConvergenceCertificate("unknown", "entropy between the envelope rates", h, upper, lower)
    petal, sub_h = best_sub_rose(metric)
    if sub_h > lower:
        return ConvergenceCertificate(
            "diverges", "sub-rose entropy of the g.a_j family above ln(1/sigma1)", sub_h, upper, lower, sub_h - lower, petal
        )
    return ConvergenceCertificate("unknown", "sub-rose entropy too small", sub_h, upper, lower, None, petal)


def classify_convergence(kind: str, metric: MetricStructure, f: WeightFunction) -> str:
    """converges | diverges | unknown, from entropy against the envelope rates."""
    return convergence_certificate(kind, metric, f).verdict


def _witness_caps(lengths: Sequence[float], radius: float, budget: SumBudget) -> tuple[int, ...]:
    return tuple(min(max_letters_within(x, radius), budget.max_letters) for x in lengths)


def _box_size(caps: Sequence[int]) -> int:
    return int(np.prod([cap + 1 for cap in caps], dtype=object))


def divergence_witness(
    kind: str,
    metric: MetricStructure,
    f: WeightFunction,
    threshold: Optional[float] = None,
    budget: SumBudget = SumBudget(),
    census_provider: CensusProvider = _default_census,
    petal: Optional[int] = None,
) -> tuple[float, int, float]:
    """Largest certified lower bound reached for a divergent sum: (value, terms, R).

    R doubles from 2 while the capped census box stays within ``max_box``.
    Caps keep every partial sum a sum over a genuine subset of the family.
    """
    _check_kind(kind)
    if kind == "P":
        if metric.rank < 3:
            raise DomainError("The g.a_j witness needs rank at least 3.")
        if petal is None:
            petal, _ = best_sub_rose(metric)
        target = metric.without_petal(petal)
    else:
        target = metric
    best = (0.0, 0, 0.0)
    radius = 2.0
    while radius <= budget.max_radius:
        caps = _witness_caps(target.lengths, radius, budget)
        if _box_size(caps) > budget.max_box and best[1] > 0:
            break
        census = census_provider(target.rank, max(sum(caps), 1), caps)
        if kind == "P":
            value, terms = family_partial_sum(metric, petal, f, radius, census)
        else:
            value, terms = census_partial_sum(census, metric, f, radius, kind)
        logger.debug("Witness at R=%g: partial sum %r over %d terms", radius, value, terms)
        best = (value, terms, radius)
        if threshold is not None and value > threshold:
            break
        if _box_size(caps) > budget.max_box:
            break
        radius *= 2.0
    return best


def _estimate_visible(metric: MetricStructure, f: WeightFunction, target_tail: float, budget: SumBudget,
                      certificate: ConvergenceCertificate) -> SumEstimate:
    c = metric.shortest
    box = 16
    tail = visible_tail(c, f, box)
    while tail > target_tail and box < budget.max_box:
        box = min(box * 2, budget.max_box)
        tail = visible_tail(c, f, box)
        logger.debug("Visible box grown to %d, tail %r", box, tail)
    value, terms = visible_partial_sum(metric, f, box)
    status = "converged" if tail <= target_tail else "inconclusive"
    if status == "inconclusive":
        logger.warning("Visible-point box budget %d reached with tail %r", budget.max_box, tail)
    # (box, box - 1) is the longest visible point in the box.
    longest = box * max(metric.lengths) + (box - 1) * min(metric.lengths)
    return SumEstimate("P", value, tail, status, c * box, terms, certificate, longest_summed=longest)


def _estimate_classes(kind: str, metric: MetricStructure, f: WeightFunction, target_tail: float,
                      budget: SumBudget, census_provider: CensusProvider,
                      certificate: ConvergenceCertificate) -> SumEstimate:
    envelope = f.decay_envelope
    if envelope is None:
        return SumEstimate(kind, 0.0, math.inf, "inconclusive", 0.0, 0, certificate, ("no decay envelope",))
    shortest = metric.shortest
    ceiling = min(budget.letter_budget(metric.rank), max(1, int(budget.max_radius / shortest)))
    step = max(1, ceiling // 15)
    letters, tail = ceiling, math.inf
    size, scanned = min(ceiling, 15), 0
    while True:
        census = census_provider(metric.rank, size, None)
        for n in sorted(set(range(scanned + step, size, step)) | {size}):
            tail = tail_bound_Cf(metric, f, n * shortest, census, kind)
            logger.debug("Tail at %d letters (R=%g): %r", n, n * shortest, tail)
            if tail <= target_tail:
                letters = n
                break
        if tail <= target_tail or size == ceiling:
            break
        scanned, size = size, min(2 * size, ceiling)
    radius = letters * shortest
    value, terms = census_partial_sum(census, metric, f, radius, kind)
    status = "converged" if tail <= target_tail else "inconclusive"
    if status == "inconclusive":
        logger.warning("Letter budget %d reached for %s with tail %r", letters, kind, tail)
    return SumEstimate(kind, value, tail, status, radius, terms, certificate)


def _estimate_primitive_oracle(metric: MetricStructure, f: WeightFunction, target_tail: float,
                               budget: SumBudget, census_provider: CensusProvider,
                               certificate: ConvergenceCertificate) -> SumEstimate:
    k = metric.rank
    maxlen = budget.oracle_length(k)
    shortest = metric.shortest
    # Every primitive class of length <= R has cyclic length <= R / m_min <= maxlen.
    radius = maxlen * shortest
    primitives = sorted(whitehead_primitives_upto(k, maxlen), key=lambda word: length_lex_key(word.letters))
    value, terms = partial_sum(primitives, f, radius, metric)
    notes = ("partial sum over the Whitehead-oracle range; tail dominated by the C_f tail",)
    if f.decay_envelope is None:
        return SumEstimate("P", value, math.inf, "inconclusive", radius, terms, certificate, notes)
    census = census_provider(k, maxlen, None)
    tail = tail_bound_Cf(metric, f, radius, census, "C")
    status = "converged" if tail <= target_tail else "inconclusive"
    return SumEstimate("P", value, tail, status, radius, terms, certificate, notes)


def estimate(
    kind: str,
    metric: MetricStructure,
    f: WeightFunction,
    target_tail: float = 1e-8,
    budget: SumBudget = SumBudget(),
    census_provider: CensusProvider = _default_census,
) -> SumEstimate:
    """Certified estimate of C_f, P_f or S_f at ``metric``.

    Grows R until the tail bound meets ``target_tail`` or a budget trips
    (inconclusive). Divergent sums return a divergence certificate with the
    largest partial sum reached.
    """
    _check_kind(kind)
    if target_tail <= 0:
        raise DomainError(f"Target tail must be positive, got {target_tail}.")
    problems = check_weight_contract(f)
    if problems:
        raise HypothesisViolation(f"Weight {f.descriptor} violates its contract: {'; '.join(problems)}.")
    certificate = convergence_certificate(kind, metric, f)
    if certificate.verdict == "diverges":
        value, terms, radius = divergence_witness(
            kind, metric, f, budget=budget, census_provider=census_provider, petal=certificate.dropped_petal
        )
        return SumEstimate(kind, value, math.inf, "divergence_certified", radius, terms, certificate)
    if kind == "P" and metric.rank == 2:
        if certificate.verdict != "converges":
            return SumEstimate("P", 0.0, math.inf, "inconclusive", 0.0, 0, certificate)
        return _estimate_visible(metric, f, target_tail, budget, certificate)
    if kind == "P":
        return _estimate_primitive_oracle(metric, f, target_tail, budget, census_provider, certificate)
    return _estimate_classes(kind, metric, f, target_tail, budget, census_provider, certificate)


def gpq(t: float, p: int, q: int, f: WeightFunction) -> float:
    """f(t|p| + (1-t)|q|) + f(t|q| + (1-t)|p|)."""
    _check_t(t)
    a, b = abs(p), abs(q)
    return float(f(t * a + (1 - t) * b) + f(t * b + (1 - t) * a))


def gpq_first(t: float, p: int, q: int, f: WeightFunction) -> float:
    _check_t(t)
    a, b = abs(p), abs(q)
    return float(f.derivative(t * a + (1 - t) * b) * (a - b) + f.derivative(t * b + (1 - t) * a) * (b - a))


def gpq_second(t: float, p: int, q: int, f: WeightFunction) -> float:
    _check_t(t)
    a, b = abs(p), abs(q)
    return float((f.curvature(t * a + (1 - t) * b) + f.curvature(t * b + (1 - t) * a)) * (a - b) ** 2)


def _check_t(t: float) -> None:
    if not 0 < t < 1:
        raise DomainError(f"t must lie in (0, 1), got {t}.")


@dataclass(frozen=True)
class AdmissibilityReport:
    """Sampled checks of convexity and x^(3+eps) decay on the grid 2^-6 .. 2^6."""

    grid: tuple[float, ...]
    convex: bool
    monotone: bool
    decay_witness: bool
    eventually_decreasing: bool

    @property
    def admissible(self) -> bool:
        return self.convex and self.monotone and self.decay_witness and self.eventually_decreasing


def check_admissible(f: WeightFunction, grid: Sequence[float] = ADMISSIBILITY_GRID) -> AdmissibilityReport:
    xs = np.asarray(grid, dtype=float)
    values = np.asarray(f(xs), dtype=float)
    convex = bool(f.convex_flag and np.all(np.asarray(f.curvature(xs), dtype=float) > 0))
    monotone = bool(np.all(values > 0) and np.all(np.diff(values) <= 0))
    decay = f.poly_decay
    if decay is None:
        return AdmissibilityReport(tuple(grid), convex, monotone, False, False)
    tail_points = xs[xs >= max(decay.start, 4.0)]
    bound = decay.constant * tail_points ** (-3.0 - decay.epsilon)
    witness = bool(np.all(np.asarray(f(tail_points), dtype=float) <= bound * (1 + 1e-12)))
    scaled = tail_points ** (3.0 + decay.epsilon) * np.asarray(f(tail_points), dtype=float)
    decreasing = bool(tail_points.size > 1 and np.all(np.diff(scaled) < 0))
    return AdmissibilityReport(tuple(grid), convex, monotone, witness, decreasing)


__all__ = [
    "AdmissibilityReport",
    "ConvergenceCertificate",
    "DecayEnvelope",
    "PolyDecay",
    "SUM_KINDS",
    "SumBudget",
    "SumEstimate",
    "WeightFunction",
    "best_sub_rose",
    "builtin_weights",
    "census_partial_sum",
    "check_admissible",
    "check_weight_contract",
    "chernoff_tail",
    "classify_convergence",
    "convergence_certificate",
    "divergence_witness",
    "estimate",
    "exp_decay",
    "family_partial_sum",
    "gpq",
    "gpq_first",
    "gpq_second",
    "mcshane",
    "parse_weight",
    "partial_sum",
    "power",
    "tail_bound_Cf",
    "tail_bound_Pf_k2",
    "visible_partial_sum",
    "visible_tail",
    "weighted_sum",
    "word_length_tail",
]
