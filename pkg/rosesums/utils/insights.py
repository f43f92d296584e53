"""Helpers for turning experiment reports into short narrative bullets."""

from __future__ import annotations

from pathlib import Path
from typing import Any, List, Optional

import pandas as pd

from .experiments import ConvexityReport, NonConstancyReport, TheoremCReport
from .formatters import NA_TEXT, format_interval, format_number

DEFAULT_BRIEF_PATH = Path("docs/reports/brief_latest.md")


def _is_bullet(line: str) -> bool:
    return line.lstrip().startswith(("- ", "* "))


def load_top_insights(report_path: Path | None = None, limit: int = 5) -> List[str]:
    """Return up to ``limit`` sentences parsed from the latest narrative brief."""
    target = report_path or DEFAULT_BRIEF_PATH
    if not target.exists():
        return []
    insights: List[str] = []
    try:
        for raw_line in target.read_text(encoding="utf-8").splitlines():
            if _is_bullet(raw_line):
                insights.append(raw_line.lstrip("-* ").strip())
            if len(insights) >= limit:
                break
    except OSError:
        return []
    return [text for text in insights if text]


def _convexity_sentences(report: ConvexityReport) -> List[str]:
    sentences = []
    certified = sum(report.certified_positive)
    total = len(report.certified_positive)
    sentences.append(
        f"{report.label}: {certified} of {total} second differences certified positive "
        f"(smallest {format_number(min(report.second_differences, default=None))})."
    )
    sentences.append(f"Minimum of the scan at {format_number(report.argmin)}.")
    if report.symmetry_defect is not None:
        sentences.append(f"Symmetry defect t <-> 1-t is {format_number(report.symmetry_defect)}.")
    contrast = report.notes.get("mcshane_contrast")
    if contrast:
        sentences.append(
            f"McShane weight at t=1/2 gives {format_interval(contrast['value'], contrast['tail_bound'])} "
            f"against the surface constant {format_number(contrast['surface_constant'])}."
        )
    return sentences


def _non_constancy_sentences(report: NonConstancyReport) -> List[str]:
    finite = report.estimate_finite
    divergent = report.estimate_divergent
    sentences = [
        f"{report.kind}_f with {report.weight} at rank {report.k} lies in "
        f"{format_interval(finite.value, finite.tail_bound)} at the barycenter ({finite.status}).",
        f"At {list(report.point_divergent.lengths)} the entropy is {format_number(report.entropy_divergent)} "
        f"and the sum is {divergent.status}.",
    ]
    witness = report.checks.get("witness_value")
    if witness is not None:
        verdict = "exceeds" if report.witness_exceeds else "stays below"
        sentences.append(
            f"Witness partial sum {format_number(witness)} {verdict} the threshold "
            f"{format_number(report.checks.get('witness_threshold'))}."
        )
    counts = report.checks.get("family_counts")
    if counts:
        status = "holds" if counts["family_equals_b"] and counts["distinct"] else "fails"
        sentences.append(
            f"Family count identity {status}; oracle confirmed {counts['oracle_confirmed']} "
            f"of {counts['oracle_checked']} short members primitive."
        )
    covered = report.checks.get("family_counts_covered")
    if covered is not None and covered["p_ge_b"] is not None:
        verdict = "holds" if covered["p_ge_b"] else "fails"
        sentences.append(
            f"Exact primitive counts p_R >= b {verdict} at {covered['p_checked']} radii near {covered['point']}."
        )
    elif counts:
        sentences.append("Exact primitive counts were not checked; no radius lies inside the oracle range.")
    return sentences


def _theorem_c_sentences(report: TheoremCReport) -> List[str]:
    if report.radius is None:
        return [f"No scan radius fit the budget at rank {report.k}; the scan is inconclusive."]
    positive = sum(scan.all_positive for scan in report.scans)
    defect = NA_TEXT if report.decomposition_defect is None else format_number(report.decomposition_defect)
    margin = min((scan.min_margin for scan in report.scans if scan.min_margin is not None), default=None)
    return [
        f"{positive} of {len(report.scans)} scans at rank {report.k} (radius {format_number(report.radius)}) "
        f"have every second difference certified positive; the smallest margin is {format_number(margin)}.",
        f"Census route and direct enumeration differ by at most {defect} (relative) across the scan points.",
        "Coordinate part sum f(x_i) is convex along every scan."
        if report.coordinate_part_convex
        else "Coordinate part sum f(x_i) fails convexity on some scan.",
    ]


def _blowup_sentences(frame: pd.DataFrame) -> List[str]:
    if frame.empty:
        return []
    first, last = frame.iloc[0], frame.iloc[-1]
    trend = "decreases" if bool(frame["decreasing"].all()) else "is not monotone"
    return [
        f"Entropy along the boundary family {trend} in t, from {format_number(first['entropy'])} "
        f"at t={format_number(first['t'])} to {format_number(last['entropy'])} at t={format_number(last['t'])}."
    ]


def compute_report_insights(report: Any, limit: int = 5) -> List[str]:
    """Synthesize up to ``limit`` deterministic insight bullets for one report."""
    insights: List[str] = []
    if isinstance(report, ConvexityReport):
        insights = _convexity_sentences(report)
    elif isinstance(report, NonConstancyReport):
        insights = _non_constancy_sentences(report)
    elif isinstance(report, TheoremCReport):
        insights = _theorem_c_sentences(report)
    elif isinstance(report, pd.DataFrame) and {"t", "entropy"}.issubset(report.columns):
        insights = _blowup_sentences(report)
    return insights[:limit]


def render_brief(sections: dict[str, Optional[List[str]]]) -> str:
    """Markdown brief with one heading and bullet list per report."""
    lines = ["# Experiment brief", ""]
    for title, bullets in sections.items():
        lines.append(f"## {title}")
        lines.extend(f"- {bullet}" for bullet in (bullets or []))
        lines.append("")
    return "\n".join(lines)


__all__ = [
    "compute_report_insights",
    "load_top_insights",
    "render_brief",
]
