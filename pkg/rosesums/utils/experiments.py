"""Experiment drivers: non-constancy, strict convexity and entropy blow-up.

Each driver returns a frozen report embedding its exact inputs, so a rerun
with the same inputs reproduces it bit for bit.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
import pandas as pd

from .census import (
    enumerate_classes,
    length_lex_key,
    occurrence_census,
    primitive_family_ga_k,
    whitehead_primitives_upto,
)
from .errors import DomainError, HypothesisViolation
from .metric import (
    MetricStructure,
    barycenter,
    boundary_family_conj,
    boundary_family_prim,
    class_length,
    entropy,
    tangent_direction,
)
from .sums import (
    SumBudget,
    SumEstimate,
    WeightFunction,
    census_partial_sum,
    classify_convergence,
    check_admissible,
    divergence_witness,
    estimate,
    mcshane,
    partial_sum,
    tail_bound_Cf,
)
from .words import occurrence_vector

logger = logging.getLogger(__name__)

CensusProvider = Callable[..., Any]

THEOREM_C_RADII = (0.3, 0.2, 0.1, 0.05)
SURFACE_CONSTANT = 0.5
WITNESS_FACTOR = 10.0
COUNT_CHECK_SPAN = 1.5


@dataclass(frozen=True)
class ConvexityReport:
    """Values along a one-parameter grid and their certified second differences.

    A second difference D counts as positive only when D exceeds twice the
    propagated tail uncertainty tau_left + 2 tau_mid + tau_right. ``min_margin``
    is the smallest D - 2 (tau_left + 2 tau_mid + tau_right) along the grid.
    """

    label: str
    grid: tuple[float, ...]
    values: tuple[float, ...]
    tail_bounds: tuple[float, ...]
    statuses: tuple[str, ...]
    step: float
    second_differences: tuple[float, ...]
    certified_positive: tuple[bool, ...]
    argmin: float
    all_positive: bool
    symmetry_defect: Optional[float] = None
    notes: dict[str, Any] = field(default_factory=dict)
    min_margin: Optional[float] = None


@dataclass(frozen=True)
class NonConstancyReport:
    """A converged sum and a divergent one at two points of the same simplex."""

    kind: str
    k: int
    weight: str
    point_finite: MetricStructure
    estimate_finite: SumEstimate
    entropy_finite: float
    point_divergent: MetricStructure
    estimate_divergent: SumEstimate
    entropy_divergent: float
    separation: str
    witness_exceeds: bool
    inputs: dict[str, Any]
    checks: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TheoremCReport:
    k: int
    weight: str
    seed: int
    radius: Optional[float]
    scans: tuple[ConvexityReport, ...]
    all_positive: bool
    decomposition_defect: Optional[float]
    coordinate_part_convex: bool
    status: str
    inputs: dict[str, Any]


def _default_census(k: int, max_total: int, caps: Optional[tuple[int, ...]]):
    return occurrence_census(k, max_total, caps=caps)


def _second_differences(
    values: Sequence[float], tails: Sequence[float]
) -> tuple[list[float], list[bool], list[float]]:
    diffs, certified, margins = [], [], []
    for i in range(1, len(values) - 1):
        d = values[i - 1] - 2 * values[i] + values[i + 1]
        uncertainty = tails[i - 1] + 2 * tails[i] + tails[i + 1]
        diffs.append(d)
        margins.append(d - 2 * uncertainty)
        certified.append(bool(math.isfinite(uncertainty) and d > 2 * uncertainty))
    return diffs, certified, margins


def _grid_report(
    label: str,
    grid: Sequence[float],
    values: Sequence[float],
    tails: Sequence[float],
    statuses: Sequence[str],
    step: float,
    symmetry_defect: Optional[float] = None,
    notes: Optional[dict[str, Any]] = None,
) -> ConvexityReport:
    diffs, certified, margins = _second_differences(values, tails)
    argmin = float(grid[int(np.argmin(values))])
    return ConvexityReport(
        label=label,
        grid=tuple(float(x) for x in grid),
        values=tuple(values),
        tail_bounds=tuple(tails),
        statuses=tuple(statuses),
        step=step,
        second_differences=tuple(diffs),
        certified_positive=tuple(certified),
        argmin=argmin,
        all_positive=bool(certified) and all(certified),
        symmetry_defect=symmetry_defect,
        notes=notes or {},
        min_margin=min(margins) if margins else None,
    )


def _convexity_report(
    label: str,
    grid: Sequence[float],
    estimates: Sequence[SumEstimate],
    step: float,
    symmetry_defect: Optional[float] = None,
    notes: Optional[dict[str, Any]] = None,
) -> ConvexityReport:
    values = [e.value for e in estimates]
    tails = [e.tail_bound for e in estimates]
    statuses = [e.status for e in estimates]
    return _grid_report(label, grid, values, tails, statuses, step, symmetry_defect, notes)


def _map_points(func: Callable[[Any], SumEstimate], items: Sequence[Any], workers: int) -> list[SumEstimate]:
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _check_exponential_hypothesis(k: int, f: WeightFunction) -> None:
    bound = float((2 * k - 1) ** (-k))
    envelope = f.decay_envelope
    if envelope is None:
        raise HypothesisViolation(f"Weight {f.descriptor} has no exponential envelope; need limsup f^(1/x) < {bound:.6g}.")
    if not envelope.sigma_upper < bound:
        raise HypothesisViolation(
            f"Weight {f.descriptor} decays at rate sigma2={envelope.sigma_upper:g}, "
            f"not below (2k-1)^(-k) = {bound:.6g} for k={k}."
        )


def _budget_inputs(budget: SumBudget) -> dict[str, Any]:
    return asdict(budget)


def _find_divergent_t(kind: str, k: int, f: WeightFunction, family, t_start: float) -> tuple[float, MetricStructure]:
    t = t_start
    for _ in range(12):
        point = family(k, t)
        if classify_convergence(kind, point, f) == "diverges":
            return t, point
        t /= 2.0
    raise HypothesisViolation(f"No divergent boundary point found for {f.descriptor} down to t={t:g}.")


def theoremA_conj(
    k: int,
    f: WeightFunction,
    t: float = 0.05,
    target_tail: Optional[float] = None,
    budget: SumBudget = SumBudget(),
    census_provider: CensusProvider = _default_census,
) -> NonConstancyReport:
    """C_f is finite at the barycenter and divergent near the boundary."""
    _check_exponential_hypothesis(k, f)
    tail = target_tail if target_tail is not None else (1e-6 if k == 2 else 1e-1)
    center = barycenter(k)
    finite = estimate("C", center, f, tail, budget, census_provider)
    t_used, boundary = _find_divergent_t("C", k, f, boundary_family_conj, t)
    divergent = estimate("C", boundary, f, tail, budget, census_provider)
    threshold = WITNESS_FACTOR * finite.value
    witness_value, witness_terms, witness_radius = divergence_witness(
        "C", boundary, f, threshold, budget, census_provider
    )
    checks = {
        "witness_threshold": threshold,
        "witness_value": witness_value,
        "witness_terms": witness_terms,
        "witness_radius": witness_radius,
        "finite_has_finite_tail": math.isfinite(finite.tail_bound),
        "t_used": t_used,
    }
    return NonConstancyReport(
        kind="C",
        k=k,
        weight=f.descriptor,
        point_finite=center,
        estimate_finite=finite,
        entropy_finite=entropy(center),
        point_divergent=boundary,
        estimate_divergent=divergent,
        entropy_divergent=entropy(boundary),
        separation=f"C_f <= {finite.upper:.12g} at the barycenter but diverges at {boundary.lengths}",
        witness_exceeds=witness_value > threshold,
        inputs={"k": k, "weight": f.descriptor, "t": t, "target_tail": tail, "budget": _budget_inputs(budget)},
        checks=checks,
    )


def family_count_check(
    k: int,
    point: MetricStructure,
    radii: Sequence[float],
    oracle_maxlen: int,
    census_provider: CensusProvider = _default_census,
) -> dict[str, Any]:
    """Exact checks on the [g a_k] family at ``point``.

    For each R the family count equals b_{R - x_k}, the number of reduced words
    of the sub-rose within R - x_k, so p_R >= b_{R - x_k}. Members short enough
    for the Whitehead oracle are confirmed primitive.

    The exact primitive count p_R is only known below (oracle_maxlen + 1) m_min;
    ``p_ge_b`` is None when no radius falls there.
    """
    sub = point.without_petal(k - 1)
    extra = point.lengths[k - 1]
    oracle = whitehead_primitives_upto(k, oracle_maxlen)
    rows = []
    distinct = True
    checked = primitive = 0
    for radius in radii:
        family = list(primitive_family_ga_k(k, point, radius))
        if len(set(family)) != len(family):
            distinct = False
        budget = radius - extra
        if budget < 0:
            b_count = 0
        else:
            letters = max(1, int(math.floor(budget / sub.shortest + 1e-9)))
            census = census_provider(k - 1, letters, None)
            b_count = 1 + census.radius_counts(sub, budget)["words"]
        for word in family:
            if len(word) <= oracle_maxlen:
                checked += 1
                primitive += word in oracle
        exact_p = None
        if radius < (oracle_maxlen + 1) * point.shortest:
            exact_p = sum(1 for word in oracle if class_length(point, word) <= radius + 1e-9)
        rows.append({"R": radius, "family": len(family), "b": b_count, "p_exact": exact_p})
    exact_rows = [row for row in rows if row["p_exact"] is not None]
    return {
        "rows": rows,
        "family_equals_b": all(row["family"] == row["b"] for row in rows),
        "p_checked": len(exact_rows),
        "p_ge_b": all(row["p_exact"] >= row["b"] for row in exact_rows) if exact_rows else None,
        "distinct": distinct,
        "oracle_checked": checked,
        "oracle_confirmed": primitive,
    }


def covered_count_radii(point: MetricStructure, oracle_maxlen: int, samples: int = 3) -> tuple[float, ...]:
    """Radii past x_k below which the oracle lists every primitive class."""
    low = point.lengths[-1]
    high = (oracle_maxlen + 1) * point.shortest
    if high <= low:
        return ()
    return tuple(round(low + (high - low) * j / (samples + 1), 12) for j in range(1, samples + 1))


def _count_check_point(k: int, oracle_maxlen: int) -> Optional[MetricStructure]:
    # (oracle_maxlen + 1) t / 2 = 3/4 leaves room past x_k = 1/2 when t / 2 is the shortest petal.
    t = COUNT_CHECK_SPAN / (oracle_maxlen + 1)
    if not t < 1.0 / (k - 2):
        return None
    return boundary_family_prim(k, t)


def theoremA_prim(
    k: int,
    f: WeightFunction,
    t: float = 0.05,
    target_tail: float = 1e-1,
    budget: SumBudget = SumBudget(),
    census_provider: CensusProvider = _default_census,
    count_radii: Sequence[float] = (0.5, 0.75, 1.0, 1.25, 1.5),
) -> NonConstancyReport:
    """P_f <= C_f is finite at the barycenter; the g.a_k family diverges near the boundary."""
    if k < 3:
        raise DomainError("Non-constancy of P_f is a rank >= 3 statement; rank 2 is the convexity scan.")
    _check_exponential_hypothesis(k, f)
    center = barycenter(k)
    finite = estimate("C", center, f, target_tail, budget, census_provider)
    t_used, boundary = _find_divergent_t("P", k, f, boundary_family_prim, t)
    divergent = estimate("P", boundary, f, target_tail, budget, census_provider)
    threshold = finite.upper
    witness_value, witness_terms, witness_radius = divergence_witness(
        "P", boundary, f, threshold, budget, census_provider, petal=k - 1
    )
    oracle_maxlen = budget.oracle_length(k)
    counts = family_count_check(k, boundary, count_radii, oracle_maxlen, census_provider)
    count_point = _count_check_point(k, oracle_maxlen)
    covered = None
    if count_point is not None:
        radii = covered_count_radii(count_point, oracle_maxlen)
        covered = {
            "point": list(count_point.lengths),
            **family_count_check(k, count_point, radii, oracle_maxlen, census_provider),
        }
    checks = {
        "witness_threshold": threshold,
        "witness_value": witness_value,
        "witness_terms": witness_terms,
        "witness_radius": witness_radius,
        "sub_rose_entropy": entropy(boundary.without_petal(k - 1)),
        "t_used": t_used,
        "family_counts": counts,
        "family_counts_covered": covered,
    }
    return NonConstancyReport(
        kind="P",
        k=k,
        weight=f.descriptor,
        point_finite=center,
        estimate_finite=finite,
        entropy_finite=entropy(center),
        point_divergent=boundary,
        estimate_divergent=divergent,
        entropy_divergent=entropy(boundary),
        separation=f"P_f <= C_f <= {finite.upper:.12g} at the barycenter but P_f diverges at {boundary.lengths}",
        witness_exceeds=witness_value > threshold,
        inputs={
            "k": k,
            "weight": f.descriptor,
            "t": t,
            "target_tail": target_tail,
            "count_radii": list(count_radii),
            "budget": _budget_inputs(budget),
        },
        checks=checks,
    )


def mcshane_contrast(target_tail: float = 1e-8, budget: SumBudget = SumBudget()) -> dict[str, Any]:
    """P_f(1/2) for f = 1/(e^x + 1), next to the surface constant 1/2; no equality is claimed."""
    result = estimate("P", barycenter(2), mcshane(), target_tail, budget)
    return {
        "value": result.value,
        "tail_bound": result.tail_bound,
        "status": result.status,
        "surface_constant": SURFACE_CONSTANT,
        "difference": result.value - SURFACE_CONSTANT,
    }


def theoremB_scan(
    f: WeightFunction,
    grid_step: float = 0.05,
    target_tail: float = 1e-8,
    budget: SumBudget = SumBudget(),
    workers: int = 1,
) -> ConvexityReport:
    """P_f(t) on t = step, 2 step, ..., 1 - step at L = (t, 1 - t)."""
    admissibility = check_admissible(f)
    if not admissibility.admissible:
        raise HypothesisViolation(f"Weight {f.descriptor} is not admissible: {admissibility}.")
    if not 0 < grid_step < 0.5:
        raise DomainError(f"grid_step must lie in (0, 0.5), got {grid_step}.")
    count = int(round(1.0 / grid_step))
    grid = [round(i * grid_step, 12) for i in range(1, count)]
    points = [MetricStructure((t, 1.0 - t)) for t in grid]
    estimates = _map_points(lambda point: estimate("P", point, f, target_tail, budget), points, workers)
    values = [e.value for e in estimates]
    symmetry = max(abs(a - b) for a, b in zip(values, reversed(values)))
    notes = {
        "admissibility": asdict(admissibility),
        "mcshane_contrast": mcshane_contrast(target_tail, budget),
        "inputs": {"weight": f.descriptor, "grid_step": grid_step, "target_tail": target_tail,
                   "budget": _budget_inputs(budget)},
    }
    return _convexity_report("P_f(t) on the two-petal rose", grid, estimates, grid_step, symmetry, notes)


def _scan_points(center: MetricStructure, direction: np.ndarray, radius: float, half: int) -> list[MetricStructure]:
    points = []
    for j in range(-half, half + 1):
        s = radius * j / half
        lengths = center.as_array() + s * direction
        lengths[-1] = 1.0 - float(np.sum(lengths[:-1]))
        points.append(MetricStructure(tuple(lengths.tolist())))
    return points


def _radius_fits(
    center: MetricStructure, direction: np.ndarray, radius: float, f: WeightFunction, target_tail: float,
    budget: SumBudget, census_provider: CensusProvider,
) -> bool:
    ends = center.as_array() + radius * np.outer((-1.0, 1.0), direction)
    if np.any(ends <= 0):
        return False
    for end in ends:
        end = end.copy()
        end[-1] = 1.0 - float(np.sum(end[:-1]))
        point = MetricStructure(tuple(end.tolist()))
        result = estimate("C", point, f, target_tail, budget, census_provider)
        if result.status != "converged":
            return False
    return True


def _oracle_range_values(
    points: Sequence[MetricStructure],
    f: WeightFunction,
    budget: SumBudget,
    census_provider: CensusProvider,
) -> tuple[list[float], list[float], int, int]:
    """P_f summed over the fixed set of oracle classes at each point.

    Returns the finite sums, the C_f tail that bounds the primitive remainder
    at each point, the oracle length and the number of classes.
    """
    k = points[0].rank
    maxlen = budget.oracle_length(k)
    classes = sorted(whitehead_primitives_upto(k, maxlen), key=lambda word: length_lex_key(word.letters))
    occurrences = np.array([occurrence_vector(word) for word in classes], dtype=float)
    census = census_provider(k, maxlen, None)
    values, remainders = [], []
    for point in points:
        lengths = occurrences @ point.as_array()
        values.append(float(np.sum(f(lengths))))
        # Classes outside the oracle have more than maxlen letters.
        remainders.append(tail_bound_Cf(point, f, maxlen * point.shortest, census, "C"))
    return values, remainders, maxlen, len(classes)


def theoremC_scan(
    k: int,
    f: WeightFunction,
    directions: int = 3,
    seed: int = 0,
    target_tail: float = 1e-6,
    half_points: int = 3,
    radii: Sequence[float] = THEOREM_C_RADII,
    budget: SumBudget = SumBudget(),
    census_provider: CensusProvider = _default_census,
    workers: int = 1,
) -> TheoremCReport:
    """C_f, S_f and P_f along seeded random lines through the barycenter.

    At rank 2 P_f comes from visible points. From rank 3 on the P_f scan is the
    sum over the oracle's primitive classes, a fixed finite set, with the
    remainder tails kept in the scan notes.
    """
    if not f.convex_flag:
        raise HypothesisViolation(f"Weight {f.descriptor} is not flagged strictly convex.")
    _check_exponential_hypothesis(k, f)
    if directions < 1:
        raise DomainError(f"Need at least one direction, got {directions}.")
    center = barycenter(k)
    rng = np.random.default_rng(seed)
    unit_directions = []
    while len(unit_directions) < directions:
        candidate = tangent_direction(rng.standard_normal(k))
        if candidate is not None:
            unit_directions.append(candidate)
    inputs = {
        "k": k, "weight": f.descriptor, "directions": directions, "seed": seed,
        "target_tail": target_tail, "half_points": half_points, "radii": list(radii),
        "budget": _budget_inputs(budget),
    }

    radius = None
    for candidate in sorted(radii, reverse=True):
        if all(_radius_fits(center, d, candidate, f, target_tail, budget, census_provider) for d in unit_directions):
            radius = candidate
            break
    if radius is None:
        logger.warning("No scan radius in %s keeps every endpoint convergent within budget", list(radii))
        return TheoremCReport(k, f.descriptor, seed, None, (), False, None, False, "inconclusive", inputs)

    scans = []
    coordinate_convex = True
    worst_defect = 0.0
    for index, direction in enumerate(unit_directions):
        points = _scan_points(center, direction, radius, half_points)
        grid = [radius * j / half_points for j in range(-half_points, half_points + 1)]
        step = radius / half_points
        defects = [decomposition_defect(point, f, census_provider, workers=workers) for point in points]
        worst_defect = max(worst_defect, max(defects))
        notes = {"direction": direction.tolist()}
        for kind in ("C", "S"):
            estimates = _map_points(
                lambda point, kind=kind: estimate(kind, point, f, target_tail, budget, census_provider),
                points,
                workers,
            )
            scan_notes = {**notes, "decomposition_defects": defects} if kind == "C" else notes
            label = f"{kind}_f along direction {index}"
            scans.append(_convexity_report(label, grid, estimates, step, notes=scan_notes))
        coordinate = [float(np.sum(f(point.as_array()))) for point in points]
        diffs, _, _ = _second_differences(coordinate, [0.0] * len(coordinate))
        coordinate_convex = coordinate_convex and all(d > 0 for d in diffs)
        if k == 2:
            p_estimates = _map_points(lambda point: estimate("P", point, f, target_tail, budget), points, workers)
            scans.append(_convexity_report(f"P_f along direction {index}", grid, p_estimates, step, notes=notes))
        else:
            values, remainders, maxlen, count = _oracle_range_values(points, f, budget, census_provider)
            _, full_certified, full_margins = _second_differences(values, remainders)
            oracle_notes = {
                **notes,
                "oracle_maxlen": maxlen,
                "classes": count,
                "remainder_tails": remainders,
                "full_sum_certified": full_certified,
                "full_sum_min_margin": min(full_margins),
            }
            scans.append(_grid_report(
                f"P_f over primitive classes of at most {maxlen} letters along direction {index}",
                grid, values, [0.0] * len(values), ["exact"] * len(values), step, notes=oracle_notes,
            ))

    all_positive = all(scan.all_positive for scan in scans)
    return TheoremCReport(
        k, f.descriptor, seed, radius, tuple(scans), all_positive, worst_defect, coordinate_convex,
        "ok" if all_positive else "inconclusive", inputs,
    )


def decomposition_defect(
    metric: MetricStructure,
    f: WeightFunction,
    census_provider: CensusProvider = _default_census,
    letters: Optional[int] = None,
    workers: int = 1,
) -> float:
    """Relative gap between the census route sum_m q_m f(m . x) and direct
    enumeration over the same radius."""
    k = metric.rank
    letters = letters or (8 if k == 2 else 6)
    radius = letters * metric.shortest
    census = census_provider(k, letters, None)
    census_value, _ = census_partial_sum(census, metric, f, radius)
    classes = sorted(
        enumerate_classes(k, metric, radius, workers=workers), key=lambda word: length_lex_key(word.letters)
    )
    direct_value, _ = partial_sum(classes, f, radius, metric)
    return abs(census_value - direct_value) / max(abs(direct_value), 1e-300)


def entropy_blowup_curve(k: int, t_grid: Sequence[float]) -> pd.DataFrame:
    """Table of (t, h(L_t)) along (t, ..., t, 1 - (k-1)t)."""
    rows = [{"t": float(t), "entropy": entropy(boundary_family_conj(k, t))} for t in sorted(t_grid)]
    frame = pd.DataFrame(rows, columns=["t", "entropy"])
    frame["decreasing"] = frame["entropy"].diff().fillna(-1.0) < 0
    return frame


__all__ = [
    "ConvexityReport",
    "NonConstancyReport",
    "TheoremCReport",
    "covered_count_radii",
    "decomposition_defect",
    "entropy_blowup_curve",
    "family_count_check",
    "mcshane_contrast",
    "theoremA_conj",
    "theoremA_prim",
    "theoremB_scan",
    "theoremC_scan",
]
