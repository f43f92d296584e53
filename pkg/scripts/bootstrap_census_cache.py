"""Seed the census cache with the default occurrence censuses."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Iterable, List

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from rosesums.utils.errors import CacheError  # noqa: E402
from rosesums.utils.load_data import (  # noqa: E402
    DEFAULT_CENSUS_SPECS,
    CensusSpec,
    load_census_bundle,
    load_or_build_census,
    resolve_cache_dir,
)


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Bootstrap occurrence-census cache files")
    parser.add_argument(
        "--cache-dir",
        type=Path,
        default=None,
        help="Cache directory (defaults to ROSESUMS_CACHE_DIR or <root>/data/cache)",
    )
    parser.add_argument("--rebuild", action="store_true", help="Overwrite existing cache files")
    parser.add_argument(
        "--extra",
        action="append",
        default=[],
        metavar="K:N",
        help="Additional census to build, e.g. 4:20 (repeatable)",
    )
    return parser.parse_args()


def parse_extra(values: Iterable[str]) -> List[CensusSpec]:
    specs: List[CensusSpec] = []
    for value in values:
        rank_text, _, total_text = value.partition(":")
        try:
            specs.append(CensusSpec(int(rank_text), int(total_text), description="requested on the command line"))
        except ValueError as exc:
            raise SystemExit(f"Cannot parse census request {value!r}: {exc}")
    return specs


def ensure_cache(specs: Iterable[CensusSpec], cache_dir: Path, rebuild: bool) -> None:
    specs = list(specs)
    bundle = load_census_bundle(specs, cache_dir, use_cache=False)
    for spec in specs:
        if bundle.get(spec.name) is not None and not rebuild:
            print(f"{spec.name} already cached.")
            continue
        if spec.name in bundle.errors and not rebuild:
            print(f"{spec.name}: {bundle.errors[spec.name]}")
        try:
            table = load_or_build_census(spec.rank, spec.max_total, cache_dir, spec.caps, rebuild=True)
        except CacheError as exc:
            raise SystemExit(str(exc))
        print(f"Built {spec.name}: {len(table.frame)} occurrence vectors.")


def main() -> None:
    args = parse_args()
    cache_dir = resolve_cache_dir(args.cache_dir)
    ensure_cache(list(DEFAULT_CENSUS_SPECS) + parse_extra(args.extra), cache_dir, args.rebuild)
    print(f"Census cache ready in {cache_dir}")


if __name__ == "__main__":
    main()
