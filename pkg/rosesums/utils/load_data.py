"""Census cache helpers: locate, validate, load and persist occurrence censuses."""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np
import pandas as pd

from .census import COUNT_COLUMNS, CensusTable, occurrence_census
from .errors import CacheError

logger = logging.getLogger(__name__)

CENSUS_BOOTSTRAP_COMMAND = "python scripts/bootstrap_census_cache.py"
CACHE_SCHEMA_VERSION = 1
CACHE_ENV_VAR = "ROSESUMS_CACHE_DIR"
CACHE_FILE_PATTERN = re.compile(r"^census_k(?P<rank>\d+)_n(?P<total>\d+)(?P<caps>(_c\d+)*)\.json$")


@dataclass(frozen=True)
class CensusSpec:
    """Blueprint naming one cached occurrence census."""

    rank: int
    max_total: int
    caps: Optional[tuple[int, ...]] = None
    description: str = ""

    @property
    def name(self) -> str:
        suffix = "".join(f"_c{cap}" for cap in self.caps) if self.caps else ""
        return f"census_k{self.rank}_n{self.max_total}{suffix}"

    @property
    def relative_path(self) -> str:
        return f"{self.name}.json"


DEFAULT_CENSUS_SPECS: tuple[CensusSpec, ...] = (
    CensusSpec(rank=2, max_total=60, description="Rank 2 census for sums and scans"),
    CensusSpec(rank=3, max_total=40, description="Rank 3 census for scans near the barycenter"),
)


@dataclass
class CacheBundle:
    """Container holding loaded census tables and any load errors."""

    tables: Dict[str, Optional[CensusTable]]
    errors: Dict[str, str]
    cache_dir: Path

    def get(self, name: str) -> Optional[CensusTable]:
        return self.tables.get(name)

    @property
    def total(self) -> int:
        return len(self.tables)

    @property
    def loaded(self) -> int:
        return sum(table is not None for table in self.tables.values())

    def has_data(self) -> bool:
        return any(table is not None for table in self.tables.values())


def get_project_root() -> Path:
    """Resolve the repository root based on this file's location."""
    return Path(__file__).resolve().parents[2]


def resolve_cache_dir(explicit: Optional[Path] = None) -> Path:
    """Flag, then ``ROSESUMS_CACHE_DIR``, then ``<root>/data/cache``."""
    if explicit:
        return Path(explicit).resolve()
    env_value = os.environ.get(CACHE_ENV_VAR)
    if env_value:
        return Path(env_value).resolve()
    return get_project_root() / "data" / "cache"


def census_to_payload(table: CensusTable) -> dict:
    columns = table.occurrence_columns + ["total", *COUNT_COLUMNS]
    if "primitive" in table.frame.columns and table.rank == 2:
        columns.append("primitive")
    rows = [[int(value) for value in row] for row in table.frame[columns].itertuples(index=False)]
    return {
        "schema_version": CACHE_SCHEMA_VERSION,
        "rank": table.rank,
        "max_total": table.max_total,
        "caps": list(table.caps) if table.caps else None,
        "columns": columns,
        "rows": rows,
    }


def payload_to_census(payload: dict, spec: CensusSpec) -> CensusTable:
    """Rebuild a table, raising ``CacheError`` when the payload is stale or malformed."""
    version = payload.get("schema_version")
    if version != CACHE_SCHEMA_VERSION:
        raise CacheError(
            f"{spec.relative_path} has schema version {version!r}, expected {CACHE_SCHEMA_VERSION}. "
            f"Run `{CENSUS_BOOTSTRAP_COMMAND} --rebuild` to refresh the cache."
        )
    if payload.get("rank") != spec.rank or payload.get("max_total") != spec.max_total:
        raise CacheError(f"{spec.relative_path} describes a different census than its name.")
    caps = payload.get("caps")
    if (tuple(caps) if caps else None) != spec.caps:
        raise CacheError(f"{spec.relative_path} caps {caps} do not match its name.")
    columns = payload.get("columns") or []
    expected = [f"m{i + 1}" for i in range(spec.rank)] + ["total", *COUNT_COLUMNS]
    if columns[: len(expected)] != expected:
        raise CacheError(f"{spec.relative_path} has unexpected columns {columns}.")
    rows = payload.get("rows") or []
    if any(len(row) != len(columns) for row in rows):
        raise CacheError(f"{spec.relative_path} has ragged rows.")
    data: dict[str, pd.Series] = {}
    for position, column in enumerate(columns):
        values = [row[position] for row in rows]
        if position <= spec.rank:
            data[column] = pd.Series(values, dtype=np.int64)
        else:
            data[column] = pd.Series(values, dtype=object)
    frame = pd.DataFrame(data, columns=columns)
    if len(frame) and int(frame["total"].max()) > spec.max_total:
        raise CacheError(f"{spec.relative_path} holds vectors beyond max_total {spec.max_total}.")
    return CensusTable(spec.rank, spec.max_total, frame, "all", spec.caps)


def _load_census(spec: CensusSpec, cache_dir: Path) -> tuple[Optional[CensusTable], Optional[str]]:
    path = cache_dir / spec.relative_path
    if not path.exists():
        return None, (
            f"Missing {spec.name} census at '{path}'. "
            f"Run `{CENSUS_BOOTSTRAP_COMMAND}` to seed the cache."
        )
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return payload_to_census(payload, spec), None
    except CacheError as exc:
        return None, str(exc)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        return None, f"Failed to read {path.name}: {exc}"


def save_census(table: CensusTable, cache_dir: Optional[Path] = None) -> Path:
    target_dir = resolve_cache_dir(cache_dir)
    target_dir.mkdir(parents=True, exist_ok=True)
    spec = CensusSpec(table.rank, table.max_total, table.caps)
    path = target_dir / spec.relative_path
    staging = path.with_suffix(".json.tmp")
    staging.write_text(json.dumps(census_to_payload(table)), encoding="utf-8")
    staging.replace(path)
    logger.info("Saved %s", path)
    return path


def _build_bundle(specs: Iterable[CensusSpec], cache_dir: Path) -> CacheBundle:
    tables: Dict[str, Optional[CensusTable]] = {}
    errors: Dict[str, str] = {}
    for spec in specs:
        table, error = _load_census(spec, cache_dir)
        tables[spec.name] = table
        if error:
            errors[spec.name] = error
    return CacheBundle(tables=tables, errors=errors, cache_dir=cache_dir)


@lru_cache(maxsize=4)
def _load_bundle_cached(specs: tuple[CensusSpec, ...], cache_dir_str: str) -> CacheBundle:
    return _build_bundle(specs, Path(cache_dir_str))


def load_census_bundle(
    specs: Iterable[CensusSpec] = DEFAULT_CENSUS_SPECS,
    cache_dir: Optional[Path] = None,
    use_cache: bool = True,
) -> CacheBundle:
    """Load every requested census, optionally memoising the bundle."""
    root = resolve_cache_dir(cache_dir)
    spec_tuple = tuple(specs)
    if use_cache:
        return _load_bundle_cached(spec_tuple, str(root))
    return _build_bundle(spec_tuple, root)


def cached_specs(cache_dir: Optional[Path] = None) -> list[CensusSpec]:
    """Specs of every census file present in the cache directory."""
    root = resolve_cache_dir(cache_dir)
    if not root.exists():
        return []
    found = []
    for path in sorted(root.iterdir()):
        match = CACHE_FILE_PATTERN.match(path.name)
        if not match:
            continue
        caps = tuple(int(cap) for cap in match.group("caps").split("_c")[1:]) or None
        found.append(CensusSpec(int(match.group("rank")), int(match.group("total")), caps))
    return found


def load_or_build_census(
    k: int,
    max_total: int,
    cache_dir: Optional[Path] = None,
    caps: Optional[tuple[int, ...]] = None,
    rebuild: bool = False,
    persist: bool = True,
) -> CensusTable:
    """Census for (k, max_total, caps), reusing any larger cached table.

    A corrupt or stale file raises ``CacheError`` instead of being rebuilt
    silently; ``rebuild=True`` overwrites it on purpose.
    """
    root = resolve_cache_dir(cache_dir)
    if not rebuild:
        candidates = [
            spec
            for spec in cached_specs(root)
            if spec.rank == k and spec.caps == caps and spec.max_total >= max_total
        ]
        for spec in sorted(candidates, key=lambda item: item.max_total):
            table, error = _load_census(spec, root)
            if error:
                raise CacheError(error)
            logger.info("Census cache hit %s", spec.name)
            return table.truncated(max_total)
        logger.info("Census cache miss k=%d max_total=%d caps=%s", k, max_total, caps)
    table = occurrence_census(k, max_total, caps=caps)
    if persist:
        save_census(table, root)
    return table


__all__ = [
    "CACHE_ENV_VAR",
    "CACHE_SCHEMA_VERSION",
    "CENSUS_BOOTSTRAP_COMMAND",
    "CacheBundle",
    "CensusSpec",
    "DEFAULT_CENSUS_SPECS",
    "cached_specs",
    "census_to_payload",
    "get_project_root",
    "load_census_bundle",
    "load_or_build_census",
    "payload_to_census",
    "resolve_cache_dir",
    "save_census",
]
