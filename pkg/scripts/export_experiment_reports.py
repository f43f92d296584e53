"""Run every experiment at desk scale and export JSON/CSV reports plus a brief."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, List

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from rosesums.utils.census import occurrence_census  # noqa: E402
from rosesums.utils.experiments import (  # noqa: E402
    entropy_blowup_curve,
    theoremA_conj,
    theoremA_prim,
    theoremB_scan,
    theoremC_scan,
)
from rosesums.utils.formatters import REPORT_SCHEMA_VERSION, render_csv, render_json  # noqa: E402
from rosesums.utils.insights import compute_report_insights, load_top_insights, render_brief  # noqa: E402
from rosesums.utils.load_data import load_or_build_census, resolve_cache_dir  # noqa: E402
from rosesums.utils.sums import exp_decay, mcshane  # noqa: E402

SEED = 0
BLOWUP_GRID = [0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]


@dataclass(frozen=True)
class Experiment:
    name: str
    title: str
    build: Callable[[Callable[..., Any]], Any]


def get_repo_root() -> Path:
    return Path(__file__).resolve().parents[1]


def experiments() -> List[Experiment]:
    return [
        Experiment("theoremA_k2", "Non-constancy of C_f at rank 2",
                   lambda provider: theoremA_conj(2, exp_decay(0.05), census_provider=provider)),
        Experiment("theoremA_prim_k3", "Non-constancy of P_f at rank 3",
                   lambda provider: theoremA_prim(3, exp_decay(0.005), census_provider=provider)),
        Experiment("theoremB", "Convexity of P_f on the two-petal rose",
                   lambda provider: theoremB_scan(mcshane())),
        Experiment("theoremC_k2", "Convexity of C_f near the rank 2 barycenter",
                   lambda provider: theoremC_scan(2, exp_decay(0.05), seed=SEED, census_provider=provider)),
        Experiment("theoremC_k3", "Convexity of C_f near the rank 3 barycenter",
                   lambda provider: theoremC_scan(3, exp_decay(0.001), seed=SEED, census_provider=provider)),
        Experiment("blowup_k2", "Entropy blow-up at the boundary",
                   lambda provider: entropy_blowup_curve(2, BLOWUP_GRID)),
    ]


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Export experiment reports to docs/reports")
    parser.add_argument("--out-dir", type=Path, default=get_repo_root() / "docs" / "reports")
    parser.add_argument("--cache-dir", type=Path, default=None)
    parser.add_argument("--only", action="append", default=[], help="Run only the named experiment(s)")
    return parser.parse_args()


def write_report(out_dir: Path, experiment: Experiment, report: Any) -> None:
    payload = {"schema_version": REPORT_SCHEMA_VERSION, "kind": "experiment", "experiment": experiment.name,
               "report": report}
    (out_dir / f"{experiment.name}.json").write_text(render_json(payload) + "\n", encoding="utf-8")
    if hasattr(report, "to_csv"):
        (out_dir / f"{experiment.name}.csv").write_text(render_csv(report), encoding="utf-8")
    print(f"Wrote {experiment.name} report to {out_dir}")


def main() -> None:
    args = parse_args()
    cache_dir = resolve_cache_dir(args.cache_dir)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    def provider(k: int, max_total: int, caps=None):
        if caps is not None:
            return occurrence_census(k, max_total, caps=caps)
        return load_or_build_census(k, max_total, cache_dir)

    sections = {}
    for experiment in experiments():
        if args.only and experiment.name not in args.only:
            continue
        report = experiment.build(provider)
        write_report(args.out_dir, experiment, report)
        sections[experiment.title] = compute_report_insights(report)
    brief_path = args.out_dir / "brief_latest.md"
    brief_path.write_text(render_brief(sections), encoding="utf-8")
    print(f"Brief written to {brief_path}")
    for insight in load_top_insights(brief_path):
        print(f"  - {insight}")


if __name__ == "__main__":
    main()
