"""Desk-scale runs of the non-constancy, convexity and blow-up experiments."""

from __future__ import annotations

import importlib.util
import math
import sys
from pathlib import Path

import pytest

from rosesums.utils.errors import DomainError, HypothesisViolation
from rosesums.utils.experiments import (
    covered_count_radii,
    decomposition_defect,
    entropy_blowup_curve,
    family_count_check,
    mcshane_contrast,
    theoremA_conj,
    theoremA_prim,
    theoremB_scan,
    theoremC_scan,
)
from rosesums.utils.insights import compute_report_insights, load_top_insights, render_brief
from rosesums.utils.metric import MetricStructure, barycenter, boundary_family_prim
from rosesums.utils.sums import exp_decay, mcshane, power


def test_non_constancy_of_class_sums_rank_two() -> None:
    report = theoremA_conj(2, exp_decay(0.05))
    assert report.estimate_finite.status == "converged"
    assert report.estimate_finite.tail_bound <= 1e-6
    assert report.point_divergent.lengths == pytest.approx((0.05, 0.95))
    assert report.entropy_divergent > math.log(20) > report.entropy_finite
    assert report.estimate_divergent.status == "divergence_certified"
    assert report.witness_exceeds
    assert report.checks["witness_value"] > 10 * report.estimate_finite.value
    assert report.inputs["weight"] == "exp:0.05"


def test_non_constancy_rejects_slow_weights() -> None:
    with pytest.raises(HypothesisViolation, match="0.111111"):
        theoremA_conj(2, exp_decay(0.2))
    with pytest.raises(HypothesisViolation):
        theoremA_conj(2, mcshane())
    with pytest.raises(HypothesisViolation):
        theoremA_conj(2, power(4))
    with pytest.raises(DomainError):
        theoremA_prim(2, exp_decay(0.05))


@pytest.mark.slow
def test_non_constancy_of_primitive_sums_rank_three() -> None:
    report = theoremA_prim(3, exp_decay(0.005))
    assert report.estimate_finite.status == "converged"
    assert report.estimate_finite.tail_bound <= 1e-1
    assert report.estimate_divergent.status == "divergence_certified"
    assert report.checks["sub_rose_entropy"] > math.log(200)
    assert report.witness_exceeds
    counts = report.checks["family_counts"]
    assert counts["family_equals_b"]
    assert counts["distinct"]
    assert counts["oracle_checked"] > 0
    assert counts["oracle_confirmed"] == counts["oracle_checked"]
    covered = report.checks["family_counts_covered"]
    assert covered["p_checked"] == 3
    assert covered["p_ge_b"] is True
    assert covered["family_equals_b"]


def test_family_count_identity_on_a_small_range() -> None:
    counts = family_count_check(3, boundary_family_prim(3, 0.2), (0.6, 0.9, 1.2), oracle_maxlen=4)
    assert counts["family_equals_b"]
    assert counts["distinct"]
    assert counts["oracle_confirmed"] == counts["oracle_checked"] > 0
    assert counts["p_checked"] == 0
    assert counts["p_ge_b"] is None


def test_exact_primitive_counts_inside_the_oracle_range() -> None:
    point = boundary_family_prim(3, 0.2)
    radii = covered_count_radii(point, 6)
    assert radii == pytest.approx((0.55, 0.6, 0.65))
    assert covered_count_radii(point, 4) == ()
    counts = family_count_check(3, point, radii, oracle_maxlen=6)
    assert counts["p_checked"] == 3
    assert counts["p_ge_b"] is True
    assert all(row["p_exact"] is not None for row in counts["rows"])
    last = counts["rows"][-1]
    assert last["b"] == last["family"] == 3
    assert last["p_exact"] > last["b"]


def test_convexity_scan_on_the_two_petal_rose() -> None:
    report = theoremB_scan(mcshane())
    assert len(report.grid) == 19
    assert report.all_positive
    assert report.argmin == pytest.approx(0.5)
    assert report.symmetry_defect <= 2e-8
    assert all(tail <= 1e-8 for tail in report.tail_bounds)
    contrast = report.notes["mcshane_contrast"]
    assert contrast["surface_constant"] == 0.5
    assert contrast["status"] == "converged"


def test_convexity_scan_rejects_inadmissible_weights() -> None:
    with pytest.raises(HypothesisViolation):
        theoremB_scan(power(2))
    with pytest.raises(DomainError):
        theoremB_scan(mcshane(), grid_step=0.6)


def test_mcshane_contrast_is_reported_not_claimed() -> None:
    contrast = mcshane_contrast()
    assert contrast["difference"] == pytest.approx(contrast["value"] - 0.5)
    assert contrast["tail_bound"] <= 1e-8


def test_local_convexity_scan_rank_two() -> None:
    report = theoremC_scan(2, exp_decay(0.01), directions=3, seed=0)
    assert report.radius is not None
    assert report.status == "ok"
    assert report.all_positive
    assert [scan.label.split(" ")[0] for scan in report.scans] == ["C_f", "S_f", "P_f"] * 3
    assert all(scan.min_margin > 0 for scan in report.scans)
    assert report.coordinate_part_convex
    assert report.decomposition_defect <= 1e-12
    defects = [scan.notes["decomposition_defects"] for scan in report.scans if scan.label.startswith("C_f")]
    assert all(len(row) == 7 for row in defects)
    assert report.decomposition_defect == max(max(row) for row in defects)
    again = theoremC_scan(2, exp_decay(0.01), directions=3, seed=0)
    assert again.scans[0].values == report.scans[0].values


@pytest.mark.slow
def test_local_convexity_scan_rank_three() -> None:
    report = theoremC_scan(3, exp_decay(0.001), directions=3, seed=0)
    assert report.radius is not None
    assert report.all_positive
    assert report.decomposition_defect <= 1e-12
    assert len(report.scans) == 9
    assert all(scan.min_margin > 0 for scan in report.scans)


def test_local_convexity_scan_covers_primitive_sums_at_rank_three() -> None:
    report = theoremC_scan(
        3, exp_decay(0.001), directions=1, half_points=1, target_tail=1e-2, radii=(0.1,)
    )
    assert report.radius == 0.1
    labels = [scan.label for scan in report.scans]
    assert labels[:2] == ["C_f along direction 0", "S_f along direction 0"]
    primitive = report.scans[2]
    assert primitive.label.startswith("P_f over primitive classes of at most 6 letters")
    assert primitive.notes["classes"] > 6
    assert math.isfinite(primitive.min_margin)
    assert primitive.min_margin > 0
    assert primitive.all_positive
    assert all(math.isfinite(tail) for tail in primitive.notes["remainder_tails"])
    assert math.isfinite(primitive.notes["full_sum_min_margin"])
    assert report.decomposition_defect <= 1e-12


def test_decomposition_defect_with_partitioned_enumeration() -> None:
    point = MetricStructure((0.3, 0.7))
    serial = decomposition_defect(point, exp_decay(0.05))
    assert serial <= 1e-12
    assert decomposition_defect(point, exp_decay(0.05), workers=2) == serial


def test_local_convexity_scan_hypotheses() -> None:
    with pytest.raises(HypothesisViolation):
        theoremC_scan(2, mcshane())
    with pytest.raises(DomainError):
        theoremC_scan(2, exp_decay(0.01), directions=0)


def test_decomposition_matches_direct_enumeration() -> None:
    assert decomposition_defect(barycenter(2), exp_decay(0.05)) <= 1e-12
    assert decomposition_defect(barycenter(3), exp_decay(0.005), letters=4) <= 1e-12


def test_entropy_blowup_curve() -> None:
    frame = entropy_blowup_curve(2, [0.3, 0.05, 0.1, 0.2])
    assert list(frame["t"]) == [0.05, 0.1, 0.2, 0.3]
    assert frame["decreasing"].all()
    with pytest.raises(DomainError):
        entropy_blowup_curve(3, [0.6])


def test_report_insights_and_brief(tmp_path) -> None:
    frame = entropy_blowup_curve(2, [0.05, 0.1, 0.2])
    bullets = compute_report_insights(frame)
    assert len(bullets) == 1
    assert "decreases" in bullets[0]
    assert compute_report_insights(object()) == []
    brief = tmp_path / "brief.md"
    brief.write_text(render_brief({"Blow-up": bullets, "Empty": []}), encoding="utf-8")
    assert load_top_insights(brief) == bullets
    assert load_top_insights(tmp_path / "missing.md") == []


def test_export_script_prints_the_top_insights(tmp_path, monkeypatch, capsys) -> None:
    script = Path(__file__).resolve().parents[1] / "scripts" / "export_experiment_reports.py"
    spec = importlib.util.spec_from_file_location("export_experiment_reports", script)
    module = importlib.util.module_from_spec(spec)
    monkeypatch.setitem(sys.modules, spec.name, module)
    spec.loader.exec_module(module)
    argv = ["export", "--out-dir", str(tmp_path), "--cache-dir", str(tmp_path / "cache"), "--only", "blowup_k2"]
    monkeypatch.setattr(sys, "argv", argv)
    module.main()
    out = capsys.readouterr().out
    assert (tmp_path / "blowup_k2.json").exists()
    assert (tmp_path / "brief_latest.md").exists()
    assert "  - Entropy along the boundary family decreases" in out
