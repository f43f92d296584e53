"""Checks for the census cache layer."""

from __future__ import annotations

import json

import pytest

from rosesums.utils.census import occurrence_census
from rosesums.utils.errors import CacheError
from rosesums.utils.load_data import (
    CACHE_ENV_VAR,
    CensusSpec,
    cached_specs,
    load_census_bundle,
    load_or_build_census,
    resolve_cache_dir,
    save_census,
)


def test_saved_census_loads_back(tmp_path) -> None:
    table = occurrence_census(2, 10)
    path = save_census(table, tmp_path)
    assert path.name == "census_k2_n10.json"
    loaded = load_or_build_census(2, 10, cache_dir=tmp_path)
    assert loaded.counts_by_occurrence == table.counts_by_occurrence
    assert loaded.q((3, 2)) == table.q((3, 2))


def test_larger_cached_census_is_truncated(tmp_path) -> None:
    save_census(occurrence_census(2, 12), tmp_path)
    smaller = load_or_build_census(2, 7, cache_dir=tmp_path)
    assert smaller.max_total == 7
    assert smaller.counts_by_occurrence == occurrence_census(2, 7).counts_by_occurrence
    assert [spec.name for spec in cached_specs(tmp_path)] == ["census_k2_n12"]


def test_cache_miss_builds_and_persists(tmp_path) -> None:
    table = load_or_build_census(3, 4, cache_dir=tmp_path)
    assert table.q((1, 0, 0)) == 2
    assert (tmp_path / "census_k3_n4.json").exists()
    capped = load_or_build_census(2, 6, cache_dir=tmp_path, caps=(2, 4))
    assert capped.caps == (2, 4)
    assert CensusSpec(2, 6, (2, 4)) in cached_specs(tmp_path)


def test_stale_schema_is_an_error_not_a_silent_rebuild(tmp_path) -> None:
    path = save_census(occurrence_census(2, 6), tmp_path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["schema_version"] = 0
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(CacheError, match="--rebuild"):
        load_or_build_census(2, 6, cache_dir=tmp_path)
    rebuilt = load_or_build_census(2, 6, cache_dir=tmp_path, rebuild=True)
    assert rebuilt.q((1, 1)) == 4
    assert load_or_build_census(2, 6, cache_dir=tmp_path).q((1, 1)) == 4


def test_corrupt_file_is_an_error(tmp_path) -> None:
    (tmp_path / "census_k2_n8.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(CacheError):
        load_or_build_census(2, 8, cache_dir=tmp_path)


def test_bundle_reports_missing_and_loaded_tables(tmp_path) -> None:
    save_census(occurrence_census(2, 6), tmp_path)
    specs = (CensusSpec(2, 6), CensusSpec(3, 5))
    bundle = load_census_bundle(specs, cache_dir=tmp_path, use_cache=False)
    assert bundle.total == 2
    assert bundle.loaded == 1
    assert bundle.has_data()
    assert bundle.get("census_k3_n5") is None
    assert "bootstrap_census_cache.py" in bundle.errors["census_k3_n5"]


def test_cache_dir_resolution(tmp_path, monkeypatch) -> None:
    monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path / "from-env"))
    assert resolve_cache_dir() == (tmp_path / "from-env").resolve()
    assert resolve_cache_dir(tmp_path / "flag") == (tmp_path / "flag").resolve()
    monkeypatch.delenv(CACHE_ENV_VAR)
    assert resolve_cache_dir().parts[-2:] == ("data", "cache")
