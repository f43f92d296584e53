"""Exhaustive enumeration and exact counting of conjugacy classes in F_k.

Two routes count classes by metric length. Direct enumeration walks reduced
words depth first and emits a necklace only from its canonical rotation.
The occurrence census counts cyclically reduced words per occurrence vector
``m`` with a layered transfer-matrix recursion and turns them into class
counts by Burnside (``phi``) or Moebius (``mu``) inversion. The census is
metric independent, so one table serves every point of the simplex.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache, reduce
from math import gcd
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import BudgetExceeded, DomainError
from .filters import length_within, max_letters_within, within_radius
from .metric import MetricStructure
from .words import (
    CyclicWord,
    Letter,
    Word,
    canonical_class,
    free_reduce,
    has_proper_period,
    is_canonical_rotation,
    letter_key,
)

logger = logging.getLogger(__name__)

CLASS_KINDS = ("all", "rootfree", "primitive")
KIND_COLUMNS = {"all": "classes", "rootfree": "rootfree", "primitive": "primitive"}
COUNT_COLUMNS = ("words", "cyclic", "classes", "rootfree")
WHITEHEAD_VISIT_CAP = 10_000_000


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _totient(n: int) -> int:
    return sum(1 for i in range(1, n + 1) if gcd(i, n) == 1)


def _mobius(n: int) -> int:
    result, value, p = 1, n, 2
    while p * p <= value:
        if value % p == 0:
            value //= p
            if value % p == 0:
                return 0
            result = -result
        p += 1
    return -result if value > 1 else result


def alphabet(k: int) -> tuple[Letter, ...]:
    """All 2k letters in canonical order a < A < b < B < ..."""
    return tuple(sorted((sign * i for i in range(1, k + 1) for sign in (1, -1)), key=letter_key))


def length_lex_key(letters: Sequence[Letter]) -> tuple[int, tuple[int, ...]]:
    return len(letters), tuple(letter_key(value) for value in letters)


def _check_kind(kind: str, allowed: Sequence[str] = CLASS_KINDS) -> None:
    if kind not in allowed:
        raise DomainError(f"Unknown class kind {kind!r}; expected one of {', '.join(allowed)}.")


def cyclically_reduced_count(k: int, n: int) -> int:
    """Closed form for the number of cyclically reduced words of length n >= 1."""
    if n < 1:
        raise DomainError(f"Word length must be at least 1, got {n}.")
    return (2 * k - 1) ** n + 1 + (k - 1) * (1 + (-1) ** n)


def necklace_count(k: int, n: int) -> int:
    """Number of conjugacy classes with cyclic length n."""
    total = sum(_totient(d) * cyclically_reduced_count(k, n // d) for d in _divisors(n))
    return total // n


def rootfree_necklace_count(k: int, n: int) -> int:
    """Number of classes of cyclic length n that are not proper powers."""
    total = sum(_mobius(d) * cyclically_reduced_count(k, n // d) for d in _divisors(n))
    return total // n


@dataclass(frozen=True, eq=False)
class CensusTable:
    """Exact counts per occurrence vector.

    ``frame`` holds one row per vector ``m`` (columns ``m1..mk`` and
    ``total``) with exact integer columns ``words`` (reduced words F_m),
    ``cyclic`` (cyclically reduced words W_m), ``classes`` (q_m) and
    ``rootfree`` (z_m), plus ``primitive`` when the primitive census is known
    for that range. ``class_kind`` picks the column read by :meth:`q`.
    """

    rank: int
    max_total: int
    frame: pd.DataFrame
    class_kind: str = "all"
    caps: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        _check_kind(self.class_kind)
        column = KIND_COLUMNS[self.class_kind]
        if column not in self.frame.columns:
            raise DomainError(f"Census for rank {self.rank} has no {column!r} counts.")

    @property
    def occurrence_columns(self) -> list[str]:
        return [f"m{i + 1}" for i in range(self.rank)]

    @property
    def occurrences(self) -> np.ndarray:
        return self.frame[self.occurrence_columns].to_numpy(dtype=np.int64)

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy(dtype=object)

    @property
    def counts_by_occurrence(self) -> dict[tuple[int, ...], int]:
        counts = self.column(KIND_COLUMNS[self.class_kind])
        return {tuple(int(x) for x in row): int(q) for row, q in zip(self.occurrences, counts)}

    def q(self, m: Sequence[int]) -> int:
        """Count of classes of the table's kind with occurrence vector ``m``."""
        key = tuple(int(x) for x in m)
        if len(key) != self.rank:
            raise DomainError(f"Occurrence vector {key} does not have rank {self.rank}.")
        if sum(key) > self.max_total:
            raise DomainError(f"Occurrence vector {key} lies beyond the census range {self.max_total}.")
        return self.counts_by_occurrence.get(key, 0)

    @property
    def counts_by_wordlength(self) -> pd.DataFrame:
        """Per cyclic length n: reduced, cyclically reduced, class and root-free counts."""
        columns = [col for col in COUNT_COLUMNS + ("primitive",) if col in self.frame.columns]
        rows = []
        totals = self.frame["total"].to_numpy(dtype=np.int64)
        for n in range(1, self.max_total + 1):
            mask = totals == n
            row: dict[str, int] = {"n": n}
            for column in columns:
                row[column] = sum(self.frame[column].to_numpy(dtype=object)[mask], 0)
            rows.append(row)
        return pd.DataFrame(rows, columns=["n", *columns])

    def with_kind(self, kind: str) -> "CensusTable":
        return replace(self, class_kind=kind)

    def truncated(self, max_total: int) -> "CensusTable":
        if max_total >= self.max_total:
            return self
        kept = self.frame.loc[self.frame["total"] <= max_total].reset_index(drop=True)
        return replace(self, max_total=max_total, frame=kept)

    def metric_lengths(self, metric: MetricStructure) -> np.ndarray:
        if metric.rank != self.rank:
            raise DomainError(f"Metric of rank {metric.rank} does not match census rank {self.rank}.")
        return self.occurrences.astype(float) @ metric.as_array()

    def covers(self, metric: MetricStructure, radius: float) -> bool:
        """True iff every class with metric length <= radius is censused."""
        if metric.rank != self.rank:
            return False
        if max_letters_within(metric.shortest, radius) > self.max_total:
            return False
        if self.caps is not None:
            return all(
                max_letters_within(length, radius) <= cap
                for length, cap in zip(metric.lengths, self.caps)
            )
        return True

    def terms_within(
        self,
        metric: MetricStructure,
        radius: float,
        kind: Optional[str] = None,
        column: Optional[str] = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Metric lengths and exact nonzero multiplicities of the rows inside ``radius``.

        ``column`` overrides the kind, e.g. ``words`` for reduced-word counts.
        """
        column = column or KIND_COLUMNS[kind or self.class_kind]
        lengths = self.metric_lengths(metric)
        counts = self.column(column)
        mask = within_radius(lengths, radius) & np.array([c != 0 for c in counts], dtype=bool)
        return lengths[mask], counts[mask]

    def radius_counts(self, metric: MetricStructure, radius: float) -> dict[str, int]:
        """Exact numbers of nontrivial reduced words, cyclically reduced words,
        classes and root-free classes of metric length at most ``radius``."""
        mask = within_radius(self.metric_lengths(metric), radius)
        return {
            "words": sum(self.column("words")[mask], 0),
            "cyclic": sum(self.column("cyclic")[mask], 0),
            "classes": sum(self.column("classes")[mask], 0),
            "rootfree": sum(self.column("rootfree")[mask], 0),
        }


def _primitive_count_f2(m: tuple[int, ...]) -> int:
    p, q = m
    if (p, q) in ((1, 0), (0, 1)):
        return 2
    if p > 0 and q > 0 and gcd(p, q) == 1:
        return 4
    return 0


def _layer_counts(
    k: int, max_total: int, caps: Optional[tuple[int, ...]]
) -> tuple[dict[tuple[int, ...], int], dict[tuple[int, ...], int]]:
    """F_m and W_m for |m| <= max_total, one layer |m| = n at a time.

    A layer maps ``m`` to a 2k x 2k matrix counting reduced words with the
    given first (row) and last (column) letter. Letter a_i sits at index
    2(i-1) and its inverse at 2(i-1)+1.
    """
    size = 2 * k
    index = np.arange(size)
    cyclic_mask = np.ones((size, size), dtype=bool)
    cyclic_mask[index, index ^ 1] = False
    words: dict[tuple[int, ...], int] = {}
    cyclic: dict[tuple[int, ...], int] = {}

    layer: dict[tuple[int, ...], np.ndarray] = {}
    for j in range(k):
        if caps is not None and caps[j] < 1:
            continue
        m = tuple(1 if i == j else 0 for i in range(k))
        start = np.zeros((size, size), dtype=object)
        start[2 * j, 2 * j] = 1
        start[2 * j + 1, 2 * j + 1] = 1
        layer[m] = start

    for n in range(1, max_total + 1):
        for m, counts in layer.items():
            words[m] = int(counts.sum())
            cyclic[m] = int(counts[cyclic_mask].sum())
        if n == max_total:
            break
        following: dict[tuple[int, ...], np.ndarray] = {}
        for m, counts in layer.items():
            row_sums = counts.sum(axis=1)
            for j in range(k):
                if caps is not None and m[j] >= caps[j]:
                    continue
                grown = m[:j] + (m[j] + 1,) + m[j + 1 :]
                target = following.get(grown)
                if target is None:
                    target = np.zeros((size, size), dtype=object)
                    following[grown] = target
                for col in (2 * j, 2 * j + 1):
                    target[:, col] += row_sums - counts[:, col ^ 1]
        layer = following
    return words, cyclic


def _class_counts(
    m: tuple[int, ...], cyclic: Mapping[tuple[int, ...], int]
) -> tuple[int, int]:
    n = sum(m)
    common = reduce(gcd, m)
    classes = rootfree = 0
    for d in _divisors(common):
        reduced = cyclic.get(tuple(x // d for x in m), 0)
        classes += _totient(d) * reduced
        rootfree += _mobius(d) * reduced
    return classes // n, rootfree // n


@lru_cache(maxsize=16)
def _occurrence_frame(k: int, max_total: int, caps: Optional[tuple[int, ...]]) -> pd.DataFrame:
    logger.info("Building occurrence census k=%d max_total=%d caps=%s", k, max_total, caps)
    words, cyclic = _layer_counts(k, max_total, caps)
    ordered = sorted(words, key=lambda vec: (sum(vec), vec))
    exact: dict[str, list[int]] = {column: [] for column in COUNT_COLUMNS}
    for m in ordered:
        classes, rootfree = _class_counts(m, cyclic)
        exact["words"].append(words[m])
        exact["cyclic"].append(cyclic[m])
        exact["classes"].append(classes)
        exact["rootfree"].append(rootfree)
    if k == 2:
        exact["primitive"] = [_primitive_count_f2(m) for m in ordered]
    data: dict[str, pd.Series] = {
        f"m{i + 1}": pd.Series([m[i] for m in ordered], dtype=np.int64) for i in range(k)
    }
    data["total"] = pd.Series([sum(m) for m in ordered], dtype=np.int64)
    # Counts outgrow int64 quickly; keep them as Python ints.
    data.update({column: pd.Series(values, dtype=object) for column, values in exact.items()})
    return pd.DataFrame(data)


def occurrence_census(
    k: int,
    max_total: int,
    kind: str = "all",
    caps: Optional[Sequence[int]] = None,
) -> CensusTable:
    """Exact q_m (or z_m, or primitive counts) for every m with |m| <= max_total.

    ``caps`` bounds each coordinate of m and yields a certified sub-census.
    The primitive kind is exact for k = 2 and comes from the Whitehead oracle
    for k >= 3.
    """
    if not 2 <= k <= 26:
        raise DomainError(f"Rank must lie in 2..26, got {k}.")
    if max_total < 1:
        raise DomainError(f"max_total must be at least 1, got {max_total}.")
    _check_kind(kind)
    cap_tuple = tuple(int(c) for c in caps) if caps is not None else None
    if cap_tuple is not None and len(cap_tuple) != k:
        raise DomainError(f"Expected {k} caps, got {len(cap_tuple)}.")
    if kind == "primitive" and k >= 3:
        return primitive_census(k, max_total)
    return CensusTable(k, max_total, _occurrence_frame(k, max_total, cap_tuple), kind, cap_tuple)


def _necklaces(
    first: Letter, n: int, k: int, lengths: Sequence[float], radius: float, kind: str
) -> Iterator[tuple[Letter, ...]]:
    """Canonical cyclic words of length n starting with ``first``, in lexicographic order."""
    first_key = letter_key(first)
    letters = [value for value in alphabet(k) if letter_key(value) >= first_key]
    cheapest = min(lengths[abs(value) - 1] for value in letters)
    prefix = [first]

    def extend(used: float) -> Iterator[tuple[Letter, ...]]:
        depth = len(prefix)
        if depth == n:
            if prefix[-1] == -first:
                return
            word = tuple(prefix)
            if not is_canonical_rotation(word):
                return
            if kind == "rootfree" and has_proper_period(word):
                return
            yield word
            return
        for value in letters:
            if value == -prefix[-1]:
                continue
            cost = used + lengths[abs(value) - 1]
            if not length_within(cost + (n - depth - 1) * cheapest, radius):
                continue
            prefix.append(value)
            yield from extend(cost)
            prefix.pop()

    start = lengths[abs(first) - 1]
    if length_within(start + (n - 1) * cheapest, radius):
        yield from extend(start)


def _classes_with_first(
    first: Letter, k: int, lengths: tuple[float, ...], radius: float, kind: str
) -> list[tuple[Letter, ...]]:
    longest = max_letters_within(min(lengths), radius)
    found: list[tuple[Letter, ...]] = []
    for n in range(1, longest + 1):
        found.extend(_necklaces(first, n, k, lengths, radius, kind))
    return found


def enumerate_classes(
    k: int,
    metric: MetricStructure,
    radius: float,
    kind: str = "all",
    workers: int = 1,
) -> Iterator[CyclicWord]:
    """Every class with metric length <= radius, once, in length-lexicographic order."""
    _check_kind(kind, ("all", "rootfree"))
    if metric.rank != k:
        raise DomainError(f"Metric of rank {metric.rank} does not match k={k}.")
    if radius <= 0:
        raise DomainError(f"Radius must be positive, got {radius}.")
    if workers > 1:
        firsts = alphabet(k)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = pool.map(
                _classes_with_first,
                firsts,
                itertools.repeat(k),
                itertools.repeat(metric.lengths),
                itertools.repeat(radius),
                itertools.repeat(kind),
            )
            found = [letters for chunk in chunks for letters in chunk]
        found.sort(key=length_lex_key)
        for letters in found:
            yield CyclicWord(letters, k)
        return
    longest = max_letters_within(metric.shortest, radius)
    for n in range(1, longest + 1):
        for first in alphabet(k):
            for letters in _necklaces(first, n, k, metric.lengths, radius, kind):
                yield CyclicWord(letters, k)


@dataclass(frozen=True)
class VisiblePointSet:
    """Coprime lattice points (p, q) with max(|p|, |q|) <= bound."""

    bound: int
    points: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.points)

    def __contains__(self, point: object) -> bool:
        return point in set(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.int64).reshape(-1, 2)

    def dominant(self) -> "VisiblePointSet":
        """The points with |p| > |q|."""
        return VisiblePointSet(self.bound, tuple(pt for pt in self.points if abs(pt[0]) > abs(pt[1])))


def first_quadrant_visible(max_p: int, max_q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Visible (p, q) with 0 <= p <= max_p, 0 <= q <= max_q and their sign multiplicity.

    Interior points stand for four signed points, axis points for two.
    """
    p, q = np.meshgrid(
        np.arange(max(max_p, 0) + 1, dtype=np.int64),
        np.arange(max(max_q, 0) + 1, dtype=np.int64),
        indexing="ij",
    )
    p, q = p.ravel(), q.ravel()
    visible = np.gcd(p, q) == 1
    p, q = p[visible], q[visible]
    multiplicity = np.where((p > 0) & (q > 0), 4, 2)
    return p, q, multiplicity


def _signed_points(p: np.ndarray, q: np.ndarray) -> list[tuple[int, int]]:
    points: set[tuple[int, int]] = set()
    for x, y in zip(p.tolist(), q.tolist()):
        for sx in (1, -1):
            for sy in (1, -1):
                points.add((sx * x, sy * y))
    return list(points)


def visible_points_upto(bound: int) -> VisiblePointSet:
    if bound < 1:
        raise DomainError(f"Bound must be at least 1, got {bound}.")
    p, q, _ = first_quadrant_visible(bound, bound)
    points = sorted(_signed_points(p, q), key=lambda pt: (max(abs(pt[0]), abs(pt[1])), pt))
    return VisiblePointSet(bound, tuple(points))


def primitive_classes_F2(
    metric: MetricStructure, radius: float
) -> Iterator[tuple[int, int, float]]:
    """Visible (p, q) with x_a|p| + x_b|q| <= radius, ordered by length, then (p, q)."""
    if metric.rank != 2:
        raise DomainError(f"Primitive classes via visible points need rank 2, got {metric.rank}.")
    x_a, x_b = metric.lengths
    p, q, _ = first_quadrant_visible(
        max_letters_within(x_a, radius), max_letters_within(x_b, radius)
    )
    keep = within_radius(x_a * p + x_b * q, radius)
    signed = _signed_points(p[keep], q[keep])
    ranked = sorted(
        ((x_a * abs(pp) + x_b * abs(qq), pp, qq) for pp, qq in signed),
    )
    for length, pp, qq in ranked:
        yield pp, qq, float(length)


@lru_cache(maxsize=8)
def whitehead_automorphisms(k: int) -> tuple[tuple[tuple[Letter, ...], ...], ...]:
    """Images of a_1..a_k under every Whitehead automorphism of F_k.

    Type 1 permutes the basis with signs. Type 2 fixes a multiplier a and
    sends each other generator x to one of x, xa, a^-1 x or a^-1 x a.
    """
    basis = tuple(range(1, k + 1))
    automorphisms = []
    for perm in itertools.permutations(basis):
        for signs in itertools.product((1, -1), repeat=k):
            automorphisms.append(tuple((s * g,) for s, g in zip(signs, perm)))
    for generator in basis:
        for multiplier in (generator, -generator):
            others = [x for x in basis if x != generator]
            for choice in itertools.product(range(4), repeat=len(others)):
                images: list[tuple[Letter, ...]] = [()] * k
                images[generator - 1] = (generator,)
                for x, option in zip(others, choice):
                    images[x - 1] = (
                        (x,),
                        (x, multiplier),
                        (-multiplier, x),
                        (-multiplier, x, multiplier),
                    )[option]
                automorphisms.append(tuple(images))
    return tuple(automorphisms)


def _apply_to_class(images: Sequence[tuple[Letter, ...]], word: CyclicWord) -> CyclicWord:
    out: list[Letter] = []
    for value in word.letters:
        image = images[abs(value) - 1]
        if value > 0:
            out.extend(image)
        else:
            out.extend(-x for x in reversed(image))
    return canonical_class(free_reduce(out, word.rank))


@lru_cache(maxsize=32)
def whitehead_primitives_upto(
    k: int, maxlen: int, visit_cap: int = WHITEHEAD_VISIT_CAP
) -> frozenset[CyclicWord]:
    """All primitive classes of cyclic length <= maxlen.

    Breadth-first closure of [a_1] under Whitehead automorphisms, never
    leaving cyclic length maxlen. Peak reduction makes the closure complete.
    """
    if maxlen < 1:
        raise DomainError(f"maxlen must be at least 1, got {maxlen}.")
    start = canonical_class(Word((1,), k))
    seen = {start}
    frontier = deque([start])
    automorphisms = whitehead_automorphisms(k)
    while frontier:
        current = frontier.popleft()
        for images in automorphisms:
            image = _apply_to_class(images, current)
            if len(image) > maxlen or image in seen:
                continue
            seen.add(image)
            if len(seen) > visit_cap:
                raise BudgetExceeded(
                    f"Whitehead closure for k={k}, maxlen={maxlen} passed {visit_cap} classes."
                )
            frontier.append(image)
    logger.info("Whitehead closure k=%d maxlen=%d: %d primitive classes", k, maxlen, len(seen))
    return frozenset(seen)


def primitive_census(k: int, maxlen: int) -> CensusTable:
    """Primitive counts per occurrence vector with |m| <= maxlen."""
    base = _occurrence_frame(k, maxlen, None)
    if k == 2:
        return CensusTable(k, maxlen, base, "primitive")
    counts: dict[tuple[int, ...], int] = {}
    for word in whitehead_primitives_upto(k, maxlen):
        m = tuple(sum(1 for value in word.letters if abs(value) == i) for i in range(1, k + 1))
        counts[m] = counts.get(m, 0) + 1
    frame = base.copy()
    keys = zip(*(frame[f"m{i + 1}"].tolist() for i in range(k)))
    frame["primitive"] = pd.Series([counts.get(tuple(m), 0) for m in keys], dtype=object)
    return CensusTable(k, maxlen, frame, "primitive")


def reduced_words_within(
    letters: Sequence[Letter], lengths: Sequence[float], radius: float
) -> Iterator[tuple[Letter, ...]]:
    """Reduced words over ``letters`` (identity included) of metric length <= radius,
    in length-lexicographic order."""
    if radius < 0:
        return
    ordered = sorted(letters, key=letter_key)
    cheapest = min(lengths[abs(value) - 1] for value in ordered)
    yield ()
    prefix: list[Letter] = []

    def extend(n: int, used: float) -> Iterator[tuple[Letter, ...]]:
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for value in ordered:
            if prefix and value == -prefix[-1]:
                continue
            cost = used + lengths[abs(value) - 1]
            if not length_within(cost + (n - len(prefix) - 1) * cheapest, radius):
                continue
            prefix.append(value)
            yield from extend(n, cost)
            prefix.pop()

    for n in range(1, max_letters_within(cheapest, radius) + 1):
        yield from extend(n, 0.0)


def primitive_family_ga_k(k: int, metric: MetricStructure, radius: float) -> Iterator[CyclicWord]:
    """Classes [g a_k] for g in F_{k-1} with metric length <= radius.

    g a_k is cyclically reduced, so its length is L(g) + x_k, and distinct g
    give non-conjugate primitive elements.
    """
    if k < 3:
        raise DomainError(f"The g.a_k family needs k >= 3, got {k}.")
    if metric.rank != k:
        raise DomainError(f"Metric of rank {metric.rank} does not match k={k}.")
    sub_letters = [sign * i for i in range(1, k) for sign in (1, -1)]
    budget = radius - metric.lengths[k - 1]
    for g in reduced_words_within(sub_letters, metric.lengths, budget):
        yield canonical_class(Word(g + (k,), k))


__all__ = [
    "CLASS_KINDS",
    "CensusTable",
    "VisiblePointSet",
    "WHITEHEAD_VISIT_CAP",
    "alphabet",
    "cyclically_reduced_count",
    "enumerate_classes",
    "length_lex_key",
    "first_quadrant_visible",
    "necklace_count",
    "occurrence_census",
    "primitive_census",
    "primitive_classes_F2",
    "primitive_family_ga_k",
    "reduced_words_within",
    "rootfree_necklace_count",
    "visible_points_upto",
    "whitehead_automorphisms",
    "whitehead_primitives_upto",
]
