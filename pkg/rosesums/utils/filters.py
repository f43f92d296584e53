"""Filtering helpers shared by the census, sums and CLI layers."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import DomainError

# Metric lengths within this slack of the radius count as inside it, so
# the census route and direct enumeration agree on boundary classes.
RADIUS_SLACK = 1e-9

WEIGHT_KINDS = ("exp", "mcshane", "pow")


def within_radius(lengths: np.ndarray, radius: float) -> np.ndarray:
    """Boolean mask of ``lengths <= radius`` up to :data:`RADIUS_SLACK`."""
    return np.asarray(lengths, dtype=float) <= radius + RADIUS_SLACK


def length_within(length: float, radius: float) -> bool:
    return length <= radius + RADIUS_SLACK


def max_letters_within(shortest: float, radius: float) -> int:
    """Largest word length whose cheapest realisation still fits inside ``radius``."""
    if radius < 0:
        return 0
    return int(np.floor((radius + RADIUS_SLACK) / shortest))


def parse_weight_descriptor(text: Optional[str]) -> tuple[str, Optional[float]]:
    """Split ``exp:0.05`` / ``mcshane`` / ``pow:4`` into kind and parameter."""
    if not text:
        raise DomainError("A weight descriptor is required (exp:<sigma>, mcshane, pow:<p>).")
    kind, _, raw = text.strip().partition(":")
    kind = kind.lower()
    if kind not in WEIGHT_KINDS:
        raise DomainError(f"Unknown weight {text!r}; expected one of {', '.join(WEIGHT_KINDS)}.")
    if kind == "mcshane":
        if raw:
            raise DomainError("The mcshane weight takes no parameter.")
        return kind, None
    try:
        return kind, float(raw)
    except ValueError as exc:
        raise DomainError(f"Weight {text!r} needs a numeric parameter.") from exc


__all__ = [
    "RADIUS_SLACK",
    "length_within",
    "max_letters_within",
    "parse_weight_descriptor",
    "within_radius",
]
