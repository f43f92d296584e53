"""Checks for weights, tail bounds and certified sum estimates."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rosesums.utils.census import (
    first_quadrant_visible,
    necklace_count,
    occurrence_census,
    primitive_family_ga_k,
    rootfree_necklace_count,
)
from rosesums.utils.errors import DomainError, HypothesisViolation, NoCertificate
from rosesums.utils.metric import MetricStructure, barycenter, boundary_family_prim
from rosesums.utils.sums import (
    SumBudget,
    WeightFunction,
    census_partial_sum,
    check_admissible,
    check_weight_contract,
    classify_convergence,
    convergence_certificate,
    divergence_witness,
    estimate,
    exp_decay,
    family_partial_sum,
    gpq,
    gpq_first,
    gpq_second,
    mcshane,
    parse_weight,
    power,
    tail_bound_Cf,
    tail_bound_Pf_k2,
    visible_partial_sum,
)


def _reference_barycenter_sum(sigma: float, counter) -> float:
    return sum(counter(2, n) * sigma ** (n / 2) for n in range(1, 240))


def test_parse_weight_descriptors() -> None:
    assert parse_weight("exp:0.05").descriptor == "exp:0.05"
    assert parse_weight("mcshane").descriptor == "mcshane"
    assert parse_weight("pow:4").descriptor == "pow:4"
    for bad in ("", "gauss:1", "exp:abc", "mcshane:2", "exp:1.5"):
        with pytest.raises(DomainError):
            parse_weight(bad)


def test_builtin_weights_meet_their_contracts() -> None:
    for f in (exp_decay(0.05), mcshane(), power(4)):
        assert check_weight_contract(f) == []


def test_mcshane_derivatives_match_finite_differences() -> None:
    f = mcshane()
    xs = np.array([0.1, 0.5, 1.0, 3.0])
    h = 1e-4
    fd_first = (f(xs + h) - f(xs - h)) / (2 * h)
    fd_second = (f(xs + h) - 2 * f(xs) + f(xs - h)) / h**2
    assert np.allclose(f.derivative(xs), fd_first, rtol=1e-6)
    assert np.allclose(f.curvature(xs), fd_second, rtol=1e-4)
    assert np.all(f.curvature(xs) > 0)


def test_admissibility() -> None:
    assert check_admissible(mcshane()).admissible
    assert check_admissible(exp_decay(0.05)).admissible
    assert check_admissible(power(4)).admissible
    report = check_admissible(power(2))
    assert not report.admissible
    assert not report.decay_witness


def test_classification() -> None:
    f = exp_decay(0.05)
    assert classify_convergence("C", barycenter(2), f) == "converges"
    assert classify_convergence("C", MetricStructure((0.05, 0.95)), f) == "diverges"
    assert classify_convergence("S", MetricStructure((0.05, 0.95)), f) == "diverges"
    assert classify_convergence("P", MetricStructure((0.05, 0.95)), f) == "converges"
    assert classify_convergence("C", barycenter(2), power(4)) == "unknown"
    certificate = convergence_certificate("P", boundary_family_prim(3, 0.05), exp_decay(0.005))
    assert certificate.verdict == "diverges"
    assert certificate.dropped_petal == 2
    with pytest.raises(DomainError):
        classify_convergence("Q", barycenter(2), f)


def test_barycenter_sum_against_closed_form_counts() -> None:
    f = exp_decay(0.05)
    result = estimate("C", barycenter(2), f, target_tail=1e-6)
    assert result.status == "converged"
    assert result.tail_bound <= 1e-6
    reference = _reference_barycenter_sum(0.05, necklace_count)
    assert result.value <= reference <= result.value + result.tail_bound + 1e-12


def test_rootfree_sum_against_closed_form_counts() -> None:
    f = exp_decay(0.05)
    result = estimate("S", barycenter(2), f, target_tail=1e-6)
    assert result.status == "converged"
    reference = _reference_barycenter_sum(0.05, rootfree_necklace_count)
    assert result.value <= reference <= result.value + result.tail_bound + 1e-12
    assert result.value < estimate("C", barycenter(2), f, target_tail=1e-6).value


def test_divergent_sum_is_certified_not_infinite() -> None:
    result = estimate("C", MetricStructure((0.05, 0.95)), exp_decay(0.05))
    assert result.status == "divergence_certified"
    assert math.isinf(result.tail_bound)
    assert math.isfinite(result.value) and result.value > 0
    assert result.certificate.verdict == "diverges"


def test_weight_without_envelope_is_inconclusive() -> None:
    result = estimate("C", barycenter(2), power(4))
    assert result.status == "inconclusive"
    with pytest.raises(NoCertificate):
        tail_bound_Cf(barycenter(2), power(4), 5.0)


def test_contract_violation_is_a_hypothesis_error() -> None:
    rising = WeightFunction("rising", lambda x: 1.0 + np.asarray(x, dtype=float))
    with pytest.raises(HypothesisViolation):
        estimate("C", barycenter(2), rising)
    with pytest.raises(DomainError):
        estimate("C", barycenter(2), exp_decay(0.05), target_tail=0.0)


def test_tail_bound_dominates_the_censused_remainder() -> None:
    metric = MetricStructure((0.4, 0.6))
    f = exp_decay(0.03)
    census = occurrence_census(2, 50)
    radius = 4.0
    near, _ = census_partial_sum(census, metric, f, radius)
    far, _ = census_partial_sum(census, metric, f, 50 * 0.4)
    assert far - near <= tail_bound_Cf(metric, f, radius, census)


def test_soundness_regression_on_random_runs() -> None:
    rng = np.random.default_rng(0)
    census = occurrence_census(2, 60)
    violations = 0
    for _ in range(20):
        t = float(rng.uniform(0.3, 0.7))
        metric = MetricStructure((t, 1.0 - t))
        f = exp_decay(float(rng.uniform(0.01, 0.05)))
        radius = float(rng.uniform(2.0, 8.0))
        value, _ = census_partial_sum(census, metric, f, radius)
        tail = tail_bound_Cf(metric, f, radius, census)
        doubled, _ = census_partial_sum(census, metric, f, 2 * radius)
        if not value <= doubled <= value + tail:
            violations += 1
    assert violations == 0


def test_visible_sum_at_half_for_mcshane() -> None:
    result = estimate("P", barycenter(2), mcshane(), target_tail=1e-8)
    assert result.status == "converged"
    assert result.tail_bound <= 1e-8
    assert result.value > 4 * float(mcshane()(0.5))
    mirrored = estimate("P", MetricStructure((0.3, 0.7)), mcshane())
    assert mirrored.value == pytest.approx(estimate("P", MetricStructure((0.7, 0.3)), mcshane()).value, abs=2e-8)


def test_visible_estimate_reports_completeness_radius_and_longest_term() -> None:
    metric = MetricStructure((0.3, 0.7))
    result = estimate("P", metric, mcshane(), target_tail=1e-8)
    box = int(round(result.R_used / metric.shortest))
    p, q, _ = first_quadrant_visible(box, box)
    lengths = 0.3 * p + 0.7 * q
    assert result.longest_summed == pytest.approx(float(lengths.max()))
    assert result.longest_summed > result.R_used
    wide_p, wide_q, _ = first_quadrant_visible(2 * box, 2 * box)
    inside = 0.3 * wide_p + 0.7 * wide_q <= result.R_used
    assert np.all(np.maximum(wide_p[inside], wide_q[inside]) <= box)
    classes = estimate("C", barycenter(2), exp_decay(0.05), target_tail=1e-6)
    assert classes.longest_summed is None


def test_visible_tail_dominates_the_next_shell() -> None:
    f = mcshane()
    metric = MetricStructure((0.5, 0.5))
    inner, _ = visible_partial_sum(metric, f, 32)
    outer, _ = visible_partial_sum(metric, f, 256)
    assert outer - inner <= tail_bound_Pf_k2(0.5, f, 32)
    with pytest.raises(DomainError):
        tail_bound_Pf_k2(1.0, f, 32)


def test_primitive_sum_is_below_the_class_sum() -> None:
    f = exp_decay(0.05)
    primitive = estimate("P", barycenter(2), f, target_tail=1e-6)
    classes = estimate("C", barycenter(2), f, target_tail=1e-6)
    assert primitive.upper <= classes.upper


def test_rank_three_primitive_sum_uses_the_oracle() -> None:
    f = exp_decay(1e-4)
    result = estimate("P", barycenter(3), f, target_tail=1e-3)
    assert result.status == "converged"
    assert result.terms_used > 0
    classes = estimate("C", barycenter(3), f, target_tail=1e-3)
    assert result.value <= classes.upper


def test_divergence_witness_reaches_threshold() -> None:
    f = exp_decay(0.05)
    metric = MetricStructure((0.05, 0.95))
    value, terms, radius = divergence_witness("C", metric, f, threshold=16.0)
    assert value > 16.0
    assert terms > 0 and radius >= 2.0


def test_family_partial_sum_counts_the_family() -> None:
    metric = boundary_family_prim(3, 0.2)
    f = exp_decay(0.005)
    radius = 1.2
    census = occurrence_census(2, 12)
    value, terms = family_partial_sum(metric, 2, f, radius, census)
    family = list(primitive_family_ga_k(3, metric, radius))
    assert terms == len(family)
    assert value > 0


def test_budget_validation() -> None:
    with pytest.raises(DomainError):
        SumBudget(max_letters=0)
    assert SumBudget().oracle_length(2) == 10
    assert SumBudget().oracle_length(5) == 4
    assert SumBudget(max_letters=60).letter_budget(4) == 30


def test_gpq_symmetry_and_convexity() -> None:
    f = mcshane()
    assert gpq(0.3, 2, 5, f) == pytest.approx(gpq(0.7, 2, 5, f))
    assert gpq_first(0.5, 2, 5, f) == pytest.approx(0.0, abs=1e-12)
    assert gpq_second(0.3, 2, 5, f) > 0
    assert gpq_second(0.3, 3, 3, f) == 0.0
    with pytest.raises(DomainError):
        gpq(0.0, 1, 2, f)
