"""Command-line entry point for rose McShane-type sums.

Subcommands: entropy, count, census, sum, primitives, experiment. Reports go
to stdout; logging goes to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional, Sequence

import pandas as pd

if __package__ in (None, ""):
    sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from rosesums.utils.census import (
    enumerate_classes,
    necklace_count,
    occurrence_census,
    primitive_classes_F2,
    whitehead_primitives_upto,
    length_lex_key,
)
from rosesums.utils.errors import RoseSumsError
from rosesums.utils.experiments import (
    ConvexityReport,
    NonConstancyReport,
    TheoremCReport,
    entropy_blowup_curve,
    theoremA_conj,
    theoremA_prim,
    theoremB_scan,
    theoremC_scan,
)
from rosesums.utils.formatters import REPORT_SCHEMA_VERSION, format_number, render_csv, render_json, to_jsonable
from rosesums.utils.load_data import load_or_build_census, resolve_cache_dir
from rosesums.utils.metric import (
    MetricStructure,
    barycenter,
    empirical_entropy,
    entropy,
    sandwich_inequalities,
)
from rosesums.utils.sums import SumBudget, estimate, parse_weight
from rosesums.utils.words import occurrence_vector, primitive_rep_from_visible, word_count_formula_check

logger = logging.getLogger("rosesums")

SUBCOMMANDS = ("entropy", "count", "census", "sum", "primitives", "experiment")
EXPERIMENTS = ("theoremA", "theoremB", "theoremC", "blowup")
DEFAULT_BLOWUP_GRID = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INCONCLUSIVE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one invocation."""

    subcommand: str
    rank: Optional[int] = None
    metric: Optional[MetricStructure] = None
    weight: Optional[str] = None
    tail: Optional[float] = None
    budget: SumBudget = field(default_factory=SumBudget)
    cache_dir: Optional[Path] = None
    rebuild_cache: bool = False
    output_format: Optional[str] = None
    seed: int = 0
    threads: int = 1
    verbose: bool = False
    options: dict[str, Any] = field(default_factory=dict)

    def inputs(self) -> dict[str, Any]:
        data: dict[str, Any] = {"subcommand": self.subcommand}
        if self.rank is not None:
            data["k"] = self.rank
        if self.metric is not None:
            data["lengths"] = list(self.metric.lengths)
        data.update({"weight": self.weight, "tail": self.tail, "seed": self.seed, "budget": self.budget})
        data.update(self.options)
        return data


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cache-dir", type=Path, default=None, help="Census cache directory.")
    parser.add_argument("--rebuild-cache", action="store_true", help="Recompute and overwrite cached censuses.")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--format", dest="output_format", choices=("json", "csv", "text"), default=None)
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    parser.add_argument("--max-letters", type=int, default=60)
    parser.add_argument("--max-box", type=int, default=2000)
    parser.add_argument("--oracle-maxlen", type=int, default=None)
    parser.add_argument("--max-radius", type=float, default=200.0)


def _add_metric(parser: argparse.ArgumentParser, required: bool) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--lengths", type=str, help="Petal lengths, e.g. 0.3,0.7 (must sum to 1).")
    group.add_argument("--barycenter", type=int, metavar="K", help="Use the barycenter of rank K.")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rosesums", description="Certified McShane-type sums on the metric rose")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    entropy_parser = sub.add_parser("entropy", help="Volume entropy of a metric rose")
    _add_metric(entropy_parser, required=True)
    entropy_parser.add_argument("--method", choices=("scalar", "spectral"), default="scalar")
    entropy_parser.add_argument("--radius", type=float, default=None, help="Also report counting estimates at R.")

    count_parser = sub.add_parser("count", help="Word and class counts by length or within a radius")
    count_parser.add_argument("--rank", type=int, default=2)
    count_parser.add_argument("--max-length", type=int, default=12)
    _add_metric(count_parser, required=False)
    count_parser.add_argument("--radius", type=float, default=None)

    census_parser = sub.add_parser("census", help="Occurrence-vector class counts as CSV")
    census_parser.add_argument("--rank", type=int, default=2)
    census_parser.add_argument("--max-total", type=int, default=12)
    census_parser.add_argument("--kind", choices=("all", "rootfree", "primitive"), default="all")
    census_parser.add_argument("--caps", type=str, default=None, help="Per-generator caps, e.g. 5,3.")
    census_parser.add_argument(
        "--cross-check", action="store_true", help="Add counts from direct class enumeration (uses --threads)."
    )

    sum_parser = sub.add_parser("sum", help="Certified estimate of C_f, P_f or S_f")
    sum_parser.add_argument("--kind", choices=("C", "P", "S"), default="C")
    _add_metric(sum_parser, required=True)
    sum_parser.add_argument("--weight", default="mcshane", help="exp:SIGMA | mcshane | pow:P")
    sum_parser.add_argument("--tail", type=float, default=1e-8)

    primitives_parser = sub.add_parser("primitives", help="Primitive classes from the Whitehead oracle")
    primitives_parser.add_argument("--rank", type=int, default=2)
    primitives_parser.add_argument("--maxlen", type=int, default=6)

    experiment_parser = sub.add_parser("experiment", help="Non-constancy, convexity and blow-up experiments")
    experiment_parser.add_argument("--name", choices=EXPERIMENTS, required=True)
    experiment_parser.add_argument("--rank", type=int, default=2)
    experiment_parser.add_argument("--kind", choices=("C", "P"), default="C", help="theoremA family.")
    experiment_parser.add_argument("--weight", default=None)
    experiment_parser.add_argument("--tail", type=float, default=None)
    experiment_parser.add_argument("--t", dest="boundary_t", type=float, default=0.05)
    experiment_parser.add_argument("--grid-step", type=float, default=0.05)
    experiment_parser.add_argument("--directions", type=int, default=3)
    experiment_parser.add_argument("--t-grid", type=str, default=DEFAULT_BLOWUP_GRID)
    experiment_parser.add_argument("--csv-out", type=Path, default=None, help="Write grid values as CSV.")

    for child in (entropy_parser, count_parser, census_parser, sum_parser, primitives_parser, experiment_parser):
        _add_common(child)
    return parser


def _resolve_metric(args: argparse.Namespace) -> Optional[MetricStructure]:
    if getattr(args, "lengths", None):
        return MetricStructure.parse(args.lengths)
    if getattr(args, "barycenter", None) is not None:
        return barycenter(args.barycenter)
    return None


def build_config(args: argparse.Namespace) -> RunConfig:
    budget = SumBudget(
        max_letters=args.max_letters,
        max_box=args.max_box,
        oracle_maxlen=args.oracle_maxlen,
        max_radius=args.max_radius,
    )
    if args.threads < 1:
        raise UsageError(f"--threads must be positive, got {args.threads}")
    metric = _resolve_metric(args)
    rank = getattr(args, "rank", None)
    if rank is None and metric is not None:
        rank = metric.rank
    skip = {
        "subcommand", "lengths", "barycenter", "rank", "weight", "tail", "cache_dir", "rebuild_cache",
        "output_format", "seed", "threads", "verbose", "max_letters", "max_box", "oracle_maxlen", "max_radius",
    }
    options = {key: value for key, value in vars(args).items() if key not in skip and value is not None}
    options = {key: str(value) if isinstance(value, Path) else value for key, value in options.items()}
    return RunConfig(
        subcommand=args.subcommand,
        rank=rank,
        metric=metric,
        weight=getattr(args, "weight", None),
        tail=getattr(args, "tail", None),
        budget=budget,
        cache_dir=args.cache_dir,
        rebuild_cache=args.rebuild_cache,
        output_format=args.output_format,
        seed=args.seed,
        threads=args.threads,
        verbose=args.verbose,
        options=options,
    )


def configure_logging(verbose: bool) -> None:
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    if not any(getattr(handler, "_rosesums", False) for handler in logger.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._rosesums = True  # type: ignore[attr-defined]
        logger.addHandler(handler)


def make_census_provider(config: RunConfig):
    """Census source backed by the cache; uncapped tables are persisted."""
    cache_dir = resolve_cache_dir(config.cache_dir)
    rebuilt: set[tuple[int, int]] = set()

    @lru_cache(maxsize=32)
    def provider(k: int, max_total: int, caps: Optional[tuple[int, ...]] = None):
        if caps is not None:
            return occurrence_census(k, max_total, caps=caps)
        rebuild = config.rebuild_cache and (k, max_total) not in rebuilt
        rebuilt.add((k, max_total))
        return load_or_build_census(k, max_total, cache_dir, None, rebuild=rebuild, persist=True)

    return provider


def _envelope(kind: str, config: RunConfig, body: dict[str, Any]) -> dict[str, Any]:
    return {"schema_version": REPORT_SCHEMA_VERSION, "kind": kind, "inputs": config.inputs(), **body}


def _emit(config: RunConfig, report: dict[str, Any], frame: Optional[pd.DataFrame], default: str) -> None:
    output = config.output_format or default
    if output == "csv" and frame is not None:
        sys.stdout.write(render_csv(frame))
    else:
        sys.stdout.write(render_json(report) + "\n")


def cmd_entropy(config: RunConfig) -> int:
    metric = config.metric
    method = config.options.get("method", "scalar")
    value = entropy(metric, method=method)
    radius = config.options.get("radius")
    output = config.output_format or ("text" if radius is None else "json")
    if output == "text":
        sys.stdout.write(format_number(value) + "\n")
        return EXIT_OK
    body: dict[str, Any] = {"entropy": value, "method": method}
    if radius is not None:
        provider = make_census_provider(config)
        letters = int((radius + metric.longest) / metric.shortest + 1e-9) + 1
        census = provider(metric.rank, letters)
        body["empirical"] = empirical_entropy(metric, radius, census)
        body["sandwich"] = sandwich_inequalities(metric, radius, census)
    frame = pd.DataFrame([{"entropy": value}])
    _emit(config, _envelope("entropy", config, body), frame, "json")
    return EXIT_OK


def cmd_count(config: RunConfig) -> int:
    provider = make_census_provider(config)
    radius = config.options.get("radius")
    if config.metric is not None and radius is not None:
        metric = config.metric
        letters = int((radius + metric.longest) / metric.shortest + 1e-9) + 1
        census = provider(metric.rank, letters)
        counts = census.radius_counts(metric, radius)
        body = {"radius": radius, "counts": counts, "sandwich": sandwich_inequalities(metric, radius, census)}
        _emit(config, _envelope("count", config, body), pd.DataFrame([counts]), "json")
        return EXIT_OK
    k, n = config.rank, config.options["max_length"]
    frame = provider(k, n).counts_by_wordlength.copy()
    frame["words_formula"] = [word_count_formula_check(k, length) for length in frame["n"]]
    frame["necklaces_formula"] = [necklace_count(k, length) for length in frame["n"]]
    _emit(config, _envelope("count", config, {"table": frame}), frame, "csv")
    return EXIT_OK


def _parse_caps(text: Optional[str]) -> Optional[tuple[int, ...]]:
    if not text:
        return None
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise UsageError(f"Cannot parse caps {text!r}") from exc


def _with_enumerated_counts(
    config: RunConfig, frame: pd.DataFrame, kind: str, caps: Optional[tuple[int, ...]]
) -> pd.DataFrame:
    if kind == "primitive" or caps is not None:
        raise UsageError("--cross-check supports --kind all or rootfree without --caps")
    k, total = config.rank, config.options["max_total"]
    columns = [column for column in frame.columns if column != "q"]
    unit = MetricStructure((1.0,) * k, on_simplex=False)
    classes = enumerate_classes(k, unit, float(total), kind, workers=config.threads)
    found = pd.DataFrame([occurrence_vector(word) for word in classes], columns=columns)
    enumerated = found.groupby(columns).size().rename("enumerated").reset_index()
    merged = frame.merge(enumerated, on=columns, how="left")
    merged["enumerated"] = merged["enumerated"].fillna(0).astype(int)
    mismatches = int((merged["enumerated"] != merged["q"]).sum())
    if mismatches:
        logger.error("Census and direct enumeration disagree on %d occurrence vectors", mismatches)
    else:
        logger.info("Direct enumeration matches the census on %d occurrence vectors", len(merged))
    return merged


def cmd_census(config: RunConfig) -> int:
    k, total = config.rank, config.options["max_total"]
    kind = config.options.get("kind", "all")
    caps = _parse_caps(config.options.get("caps"))
    if kind == "all" and caps is None:
        table = make_census_provider(config)(k, total)
    else:
        table = occurrence_census(k, total, kind, caps)
    columns = table.occurrence_columns
    source = {"all": "classes", "rootfree": "rootfree", "primitive": "primitive"}[kind]
    frame = table.frame[columns].copy()
    frame["q"] = table.frame[source]
    keep = frame["q"] != 0
    if config.options.get("cross_check"):
        frame = _with_enumerated_counts(config, frame, kind, caps)
        keep = (frame["q"] != 0) | (frame["enumerated"] != 0)
    frame = frame.loc[keep].reset_index(drop=True)
    _emit(config, _envelope("census", config, {"rows": frame}), frame, "csv")
    return EXIT_OK


def _estimate_frame(result) -> pd.DataFrame:
    return pd.DataFrame([{
        "kind": result.kind,
        "value": result.value,
        "tail_bound": result.tail_bound,
        "status": result.status,
        "R_used": result.R_used,
        "terms_used": result.terms_used,
    }])


def cmd_sum(config: RunConfig) -> int:
    f = parse_weight(config.weight or "mcshane")
    kind = config.options.get("kind", "C")
    result = estimate(kind, config.metric, f, config.tail or 1e-8, config.budget, make_census_provider(config))
    body = {
        "sum_kind": result.kind,
        "value": result.value,
        "tail_bound": result.tail_bound,
        "status": result.status,
        "R_used": result.R_used,
        "terms_used": result.terms_used,
        "longest_summed": result.longest_summed,
        "certificate": result.certificate,
        "notes": list(result.notes),
    }
    _emit(config, _envelope("sum", config, body), _estimate_frame(result), "json")
    return EXIT_INCONCLUSIVE if result.status == "inconclusive" else EXIT_OK


def cmd_primitives(config: RunConfig) -> int:
    k, maxlen = config.rank, config.options["maxlen"]
    oracle = sorted(whitehead_primitives_upto(k, maxlen), key=lambda word: length_lex_key(word.letters))
    body: dict[str, Any] = {"count": len(oracle), "classes": [str(word) for word in oracle]}
    if k == 2:
        unit = MetricStructure((1.0, 1.0), on_simplex=False)
        image = {primitive_rep_from_visible(p, q) for p, q, _ in primitive_classes_F2(unit, maxlen)}
        found = set(oracle)
        body["visible_cross_check"] = {
            "visible_image": len(image),
            "missing_from_oracle": sorted(str(word) for word in image - found),
            "missing_from_visible": sorted(str(word) for word in found - image),
            "equal": image == found,
        }
    frame = pd.DataFrame({"class": body["classes"], "length": [len(word) for word in oracle]})
    _emit(config, _envelope("primitives", config, body), frame, "json")
    return EXIT_OK


def _grid_frame(report: Any) -> pd.DataFrame:
    if isinstance(report, pd.DataFrame):
        return report
    scans = report.scans if isinstance(report, TheoremCReport) else (report,)
    frames = [
        pd.DataFrame({
            "scan": scan.label,
            "grid": scan.grid,
            "value": scan.values,
            "tail_bound": scan.tail_bounds,
            "status": scan.statuses,
        })
        for scan in scans
    ]
    if not frames:
        return pd.DataFrame(columns=["scan", "grid", "value", "tail_bound", "status"])
    return pd.concat(frames, ignore_index=True)


def _experiment_exit(report: Any) -> int:
    if isinstance(report, ConvexityReport):
        return EXIT_OK if report.all_positive else EXIT_INCONCLUSIVE
    if isinstance(report, TheoremCReport):
        return EXIT_OK if report.status == "ok" else EXIT_INCONCLUSIVE
    if isinstance(report, NonConstancyReport):
        finite = report.estimate_finite.tail_bound != float("inf")
        return EXIT_OK if finite and report.witness_exceeds else EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_experiment(config: RunConfig) -> int:
    name = config.options["name"]
    k = config.rank
    provider = make_census_provider(config)
    tail = config.tail
    if name == "blowup":
        t_grid = [float(part) for part in config.options["t_grid"].split(",") if part.strip()]
        report: Any = entropy_blowup_curve(k, t_grid)
    elif name == "theoremA":
        f = parse_weight(config.weight or "exp:0.05")
        t = config.options["boundary_t"]
        if config.options.get("kind") == "P":
            report = theoremA_prim(k, f, t, tail or 1e-1, config.budget, provider)
        else:
            report = theoremA_conj(k, f, t, tail, config.budget, provider)
    elif name == "theoremB":
        f = parse_weight(config.weight or "mcshane")
        report = theoremB_scan(f, config.options["grid_step"], tail or 1e-8, config.budget, config.threads)
    else:
        f = parse_weight(config.weight or "exp:0.05")
        report = theoremC_scan(
            k, f, config.options["directions"], config.seed, tail or 1e-6,
            budget=config.budget, census_provider=provider, workers=config.threads,
        )
    frame = _grid_frame(report)
    csv_out = config.options.get("csv_out")
    if csv_out:
        Path(csv_out).parent.mkdir(parents=True, exist_ok=True)
        Path(csv_out).write_text(render_csv(frame), encoding="utf-8")
    body = {"experiment": name, "report": to_jsonable(report)}
    _emit(config, _envelope("experiment", config, body), frame, "json")
    return _experiment_exit(report)


HANDLERS = {
    "entropy": cmd_entropy,
    "count": cmd_count,
    "census": cmd_census,
    "sum": cmd_sum,
    "primitives": cmd_primitives,
    "experiment": cmd_experiment,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, dispatch, print the report and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        configure_logging(args.verbose)
        config = build_config(args)
        return HANDLERS[config.subcommand](config)
    except UsageError as exc:
        sys.stderr.write(f"rosesums: error: {exc}\n")
        return EXIT_INPUT
    except RoseSumsError as exc:
        sys.stderr.write(f"rosesums: {type(exc).__name__}: {exc}\n")
        return exc.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
