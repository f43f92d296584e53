"""Checks for metric structures and entropy."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rosesums.utils.census import occurrence_census
from rosesums.utils.errors import DomainError, InsufficientData
from rosesums.utils.metric import (
    MetricStructure,
    barycenter,
    boundary_family_conj,
    boundary_family_prim,
    class_length,
    empirical_entropy,
    entropy,
    growth_series,
    sandwich_inequalities,
    tangent_direction,
    word_length,
)
from rosesums.utils.words import CyclicWord, Word


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_barycenter_entropy_closed_form(k: int) -> None:
    assert entropy(barycenter(k)) == pytest.approx(k * math.log(2 * k - 1), abs=1e-9)


@pytest.mark.parametrize("lengths", [(0.3, 0.7), (0.2, 0.3, 0.5), (0.05, 0.95), (0.1, 0.2, 0.3, 0.4)])
def test_scalar_and_spectral_entropy_agree(lengths: tuple[float, ...]) -> None:
    metric = MetricStructure(lengths)
    assert entropy(metric, "spectral") == pytest.approx(entropy(metric, "scalar"), abs=1e-9)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_scalar_and_spectral_entropy_agree_on_random_points(k: int) -> None:
    rng = np.random.default_rng(k)
    for weights in rng.dirichlet(np.ones(k), size=100):
        mixed = 0.9 * weights + 0.1 / k
        lengths = tuple(float(x) for x in mixed[:-1] / mixed.sum())
        metric = MetricStructure(lengths + (1.0 - sum(lengths),))
        scalar = entropy(metric, "scalar")
        assert entropy(metric, "spectral") == pytest.approx(scalar, rel=1e-10, abs=1e-10)


def test_unknown_entropy_method_raises() -> None:
    with pytest.raises(DomainError):
        entropy(barycenter(2), "newton")


def test_metric_validation() -> None:
    with pytest.raises(DomainError):
        MetricStructure((0.5, 0.6))
    with pytest.raises(DomainError):
        MetricStructure((1.0, 0.0))
    with pytest.raises(DomainError):
        MetricStructure((1.0,))
    assert MetricStructure((1.0, 1.0), on_simplex=False).rank == 2
    assert MetricStructure.parse("0.3,0.7").lengths == (0.3, 0.7)
    assert MetricStructure.from_json(MetricStructure((0.25, 0.75)).to_json()).lengths == (0.25, 0.75)


def test_lengths_of_words_and_classes() -> None:
    metric = MetricStructure((0.3, 0.7))
    assert word_length(metric, Word.parse("abA", 2)) == pytest.approx(1.3)
    assert class_length(metric, CyclicWord.parse("abA", 2)) == pytest.approx(0.7)
    with pytest.raises(DomainError):
        word_length(barycenter(3), Word.parse("ab", 2))


def test_boundary_families() -> None:
    assert boundary_family_conj(2, 0.05).lengths == pytest.approx((0.05, 0.95))
    assert boundary_family_prim(3, 0.05).lengths == pytest.approx((0.025, 0.475, 0.5))
    with pytest.raises(DomainError):
        boundary_family_conj(3, 0.5)
    with pytest.raises(DomainError):
        boundary_family_prim(2, 0.1)


def test_entropy_blows_up_at_the_boundary() -> None:
    values = [entropy(boundary_family_conj(2, t)) for t in (0.4, 0.2, 0.1, 0.05, 0.02)]
    assert all(later > earlier for earlier, later in zip(values, values[1:]))
    assert values[-1] > math.log(20)


def test_entropy_is_symmetric_in_petal_order() -> None:
    assert entropy(MetricStructure((0.2, 0.3, 0.5))) == pytest.approx(entropy(MetricStructure((0.5, 0.2, 0.3))))


def test_growth_series_diverges_at_entropy() -> None:
    metric = barycenter(2)
    h = entropy(metric)
    assert growth_series(metric, h * 0.99) == math.inf
    assert math.isfinite(growth_series(metric, h * 1.01))
    # Z(s) = 1 + sum over nontrivial words, so it exceeds one.
    assert growth_series(metric, 10.0) > 1.0


def test_growth_series_matches_word_counts() -> None:
    metric = barycenter(2)
    s = 4.0
    z = math.exp(-0.5 * s)
    counted = 1.0 + sum(4 * 3 ** (n - 1) * z**n for n in range(1, 200))
    assert growth_series(metric, s) == pytest.approx(counted, rel=1e-12)


def test_empirical_entropy_at_rank_two_barycenter() -> None:
    metric = barycenter(2)
    census = occurrence_census(2, 16)
    estimate = empirical_entropy(metric, 7.0, census)
    h = estimate.h_solver
    assert estimate.h_words == pytest.approx(h, rel=0.1)
    assert estimate.h_cyclic == pytest.approx(h, rel=0.1)
    assert estimate.h_classes_increment == pytest.approx(h, rel=0.1)
    assert estimate.h_classes < h


def test_empirical_entropy_needs_coverage() -> None:
    with pytest.raises(InsufficientData):
        empirical_entropy(barycenter(2), 7.0, occurrence_census(2, 8))


@pytest.mark.parametrize("radius", [1.0, 2.0, 3.5, 5.0, 7.0])
def test_sandwich_inequalities_hold_exactly(radius: float) -> None:
    checks = sandwich_inequalities(barycenter(2), radius, occurrence_census(2, 16))
    assert all(checks.values()), checks


def test_tangent_direction() -> None:
    direction = tangent_direction([1.0, -2.0, 0.5])
    assert float(np.sum(direction)) == pytest.approx(0.0, abs=1e-15)
    assert float(np.linalg.norm(direction)) == pytest.approx(1.0)
    assert tangent_direction([2.0, 2.0, 2.0]) is None


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=2, max_size=4))
def test_entropy_solves_the_characteristic_equation(raw: list[float]) -> None:
    lengths = tuple(np.asarray(raw) / sum(raw))
    lengths = lengths[:-1] + (1.0 - sum(lengths[:-1]),)
    metric = MetricStructure(lengths)
    h = entropy(metric)
    residual = sum(1.0 / (1.0 + math.exp(h * x)) for x in metric.lengths) - 0.5
    assert abs(residual) < 1e-9
    assert h >= len(lengths) * math.log(2 * len(lengths) - 1) - 1e-9
