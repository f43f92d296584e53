"""End-to-end checks of the command line through ``run(argv)``."""

from __future__ import annotations

import json

import pytest

from rosesums.app import build_config, build_parser, run


def _run_json(capsys, argv: list[str]) -> tuple[int, dict]:
    status = run(argv)
    return status, json.loads(capsys.readouterr().out)


def test_entropy_at_the_barycenter_prints_twelve_digits(capsys) -> None:
    assert run(["entropy", "--barycenter", "2"]) == 0
    assert capsys.readouterr().out.strip() == "2.19722457734"


def test_entropy_with_radius_reports_counting_checks(capsys, tmp_path) -> None:
    status, report = _run_json(capsys, ["entropy", "--barycenter", "2", "--radius", "4", "--cache-dir", str(tmp_path)])
    assert status == 0
    assert report["schema_version"] == 1
    assert report["kind"] == "entropy"
    assert all(report["sandwich"].values())
    assert report["empirical"]["h_solver"] == pytest.approx(2.19722457734)


def test_visible_sum_converges(capsys) -> None:
    argv = ["sum", "--kind", "P", "--lengths", "0.5,0.5", "--weight", "mcshane", "--tail", "1e-8"]
    status, report = _run_json(capsys, argv)
    assert status == 0
    assert report["status"] == "converged"
    assert report["tail_bound"] <= 1e-8
    assert report["inputs"]["weight"] == "mcshane"
    assert report["inputs"]["lengths"] == [0.5, 0.5]


def test_divergent_sum_exits_zero_with_certificate(capsys, tmp_path) -> None:
    argv = ["sum", "--kind", "C", "--lengths", "0.05,0.95", "--weight", "exp:0.05", "--cache-dir", str(tmp_path)]
    status, report = _run_json(capsys, argv)
    assert status == 0
    assert report["status"] == "divergence_certified"
    assert report["tail_bound"] == "inf"
    assert report["certificate"]["verdict"] == "diverges"


def test_inconclusive_sum_exits_three(capsys, tmp_path) -> None:
    argv = ["sum", "--barycenter", "2", "--weight", "pow:4", "--cache-dir", str(tmp_path)]
    status, report = _run_json(capsys, argv)
    assert status == 3
    assert report["status"] == "inconclusive"


def test_census_emits_csv(capsys, tmp_path) -> None:
    assert run(["census", "--rank", "2", "--max-total", "3", "--cache-dir", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "m1,m2,q"
    assert "1,1,4" in lines
    assert "2,0,2" in lines


def test_census_cross_check_against_parallel_enumeration(capsys, tmp_path) -> None:
    argv = ["census", "--rank", "3", "--max-total", "4", "--kind", "rootfree", "--cross-check", "--threads", "2"]
    assert run(argv + ["--cache-dir", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "m1,m2,m3,q,enumerated"
    rows = [line.split(",") for line in lines[1:]]
    assert rows
    assert all(row[3] == row[4] for row in rows)
    assert ["1", "1", "0", "4", "4"] in rows


def test_census_cross_check_rejects_primitive_kind(tmp_path) -> None:
    argv = ["census", "--rank", "3", "--max-total", "3", "--kind", "primitive", "--cross-check"]
    assert run(argv + ["--cache-dir", str(tmp_path)]) == 1


def test_count_table_matches_formulas(capsys, tmp_path) -> None:
    assert run(["count", "--rank", "2", "--max-length", "5", "--cache-dir", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    assert all(row["words"] == row["words_formula"] for row in rows)
    assert all(row["classes"] == row["necklaces_formula"] for row in rows)


def test_primitives_cross_check(capsys) -> None:
    status, report = _run_json(capsys, ["primitives", "--rank", "2", "--maxlen", "6"])
    assert status == 0
    assert report["visible_cross_check"]["equal"]
    assert report["count"] == report["visible_cross_check"]["visible_image"]


def test_blowup_experiment_writes_csv(capsys, tmp_path) -> None:
    target = tmp_path / "blowup.csv"
    argv = ["experiment", "--name", "blowup", "--rank", "2", "--t-grid", "0.1,0.2,0.3", "--csv-out", str(target)]
    status, report = _run_json(capsys, argv)
    assert status == 0
    assert report["experiment"] == "blowup"
    assert target.read_text(encoding="utf-8").splitlines()[0] == "t,entropy,decreasing"


def test_hypothesis_violation_exits_two(capsys, tmp_path) -> None:
    argv = ["experiment", "--name", "theoremA", "--rank", "2", "--weight", "exp:0.2", "--cache-dir", str(tmp_path)]
    assert run(argv) == 2
    assert "HypothesisViolation" in capsys.readouterr().err


def test_input_errors_exit_one(capsys) -> None:
    assert run(["entropy", "--barycenter", "2", "--bogus"]) == 1
    assert run(["sum", "--lengths", "0.5,0.6"]) == 1
    assert run(["sum", "--barycenter", "2", "--weight", "gauss:1"]) == 1
    assert run(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_config_collects_options() -> None:
    args = build_parser().parse_args(["sum", "--barycenter", "3", "--kind", "S", "--tail", "1e-4", "--threads", "2"])
    config = build_config(args)
    assert config.rank == 3
    assert config.tail == 1e-4
    assert config.threads == 2
    assert config.options == {"kind": "S"}
    assert config.inputs()["lengths"] == pytest.approx([1 / 3] * 3)
