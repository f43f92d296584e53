"""Free-group word algebra for F_k = F(a_1, ..., a_k).

Letters are signed integers: ``+i`` is the generator ``a_i`` and ``-i`` its
inverse. The ASCII form writes ``a_i`` as the ``i``-th lowercase letter and
its inverse in uppercase, so ``abA`` is ``a b a^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Sequence, Union

from .errors import DomainError

MAX_RANK = 26

Letter = int


def letter(generator_index: int, sign: int = 1) -> Letter:
    """Return the letter ``a_i^{sign}``."""
    if sign not in (1, -1):
        raise DomainError(f"Letter sign must be +1 or -1, got {sign}.")
    if generator_index < 1:
        raise DomainError(f"Generator index must be positive, got {generator_index}.")
    return sign * generator_index


def generator_index(value: Letter) -> int:
    return abs(value)


def letter_sign(value: Letter) -> int:
    return 1 if value > 0 else -1


def letter_key(value: Letter) -> int:
    """Sort key for the order a_1 < a_1^-1 < a_2 < a_2^-1 < ..."""
    return 2 * (abs(value) - 1) + (1 if value < 0 else 0)


def _check_rank(rank: int) -> None:
    if not 2 <= rank <= MAX_RANK:
        raise DomainError(f"Rank must lie in 2..{MAX_RANK}, got {rank}.")


def _check_letters(letters: Iterable[Letter], rank: int) -> tuple[Letter, ...]:
    checked = tuple(int(value) for value in letters)
    for value in checked:
        if value == 0 or abs(value) > rank:
            raise DomainError(f"Letter {value} is not valid for rank {rank}.")
    return checked


def _is_freely_reduced(letters: Sequence[Letter]) -> bool:
    return all(letters[i] != -letters[i + 1] for i in range(len(letters) - 1))


def format_letters(letters: Iterable[Letter]) -> str:
    chars = []
    for value in letters:
        base = ord("a") if value > 0 else ord("A")
        chars.append(chr(base + abs(value) - 1))
    return "".join(chars)


def parse_letters(text: str) -> tuple[Letter, ...]:
    letters = []
    for char in text.strip():
        if "a" <= char <= "z":
            letters.append(ord(char) - ord("a") + 1)
        elif "A" <= char <= "Z":
            letters.append(-(ord(char) - ord("A") + 1))
        else:
            raise DomainError(f"Cannot parse {char!r} as a generator letter.")
    return tuple(letters)


@dataclass(frozen=True)
class Word:
    """A freely reduced element of F_k."""

    letters: tuple[Letter, ...]
    rank: int

    def __post_init__(self) -> None:
        _check_rank(self.rank)
        object.__setattr__(self, "letters", _check_letters(self.letters, self.rank))
        if not _is_freely_reduced(self.letters):
            raise DomainError(f"Word {format_letters(self.letters)} is not freely reduced.")

    @classmethod
    def parse(cls, text: str, rank: int) -> "Word":
        return free_reduce(parse_letters(text), rank)

    @classmethod
    def identity(cls, rank: int) -> "Word":
        return cls((), rank)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return format_letters(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        if other.rank != self.rank:
            raise DomainError(f"Cannot multiply words of rank {self.rank} and {other.rank}.")
        return free_reduce(self.letters + other.letters, self.rank)

    def inverse(self) -> "Word":
        return Word(tuple(-value for value in reversed(self.letters)), self.rank)

    def is_trivial(self) -> bool:
        return not self.letters


@dataclass(frozen=True)
class CyclicWord:
    """Canonical representative of a nontrivial conjugacy class.

    The letters are cyclically reduced and form the least rotation under
    :func:`letter_key`.
    """

    letters: tuple[Letter, ...]
    rank: int

    def __post_init__(self) -> None:
        _check_rank(self.rank)
        letters = _check_letters(self.letters, self.rank)
        object.__setattr__(self, "letters", letters)
        if not letters:
            raise DomainError("The trivial class is not a conjugacy class of F_k here.")
        if not _is_freely_reduced(letters) or letters[0] == -letters[-1] and len(letters) > 1:
            raise DomainError(f"{format_letters(letters)} is not cyclically reduced.")
        if not is_canonical_rotation(letters):
            raise DomainError(f"{format_letters(letters)} is not the canonical rotation.")

    @classmethod
    def parse(cls, text: str, rank: int) -> "CyclicWord":
        return canonical_class(Word.parse(text, rank))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return format_letters(self.letters)

    def as_word(self) -> Word:
        return Word(self.letters, self.rank)


@dataclass(frozen=True)
class AbelImage:
    """Image of a word under the abelianization F_k -> Z^k."""

    coordinates: tuple[int, ...]

    def __add__(self, other: "AbelImage") -> "AbelImage":
        return AbelImage(tuple(x + y for x, y in zip(self.coordinates, other.coordinates)))


WordLike = Union[Word, CyclicWord]


def free_reduce(raw: Iterable[Letter], rank: int) -> Word:
    """Cancel adjacent ``x x^-1`` pairs until none remain."""
    _check_rank(rank)
    stack: list[Letter] = []
    for value in _check_letters(raw, rank):
        if stack and stack[-1] == -value:
            stack.pop()
        else:
            stack.append(value)
    return Word(tuple(stack), rank)


def cyclic_reduce(word: Word) -> tuple[Word, Word]:
    """Split ``word`` as ``conjugator * core * conjugator^-1``.

    ``core`` is cyclically reduced (not rotated) and empty only when ``word``
    is trivial; :func:`canonical_class` turns it into a :class:`CyclicWord`.
    """
    letters = word.letters
    start, end = 0, len(letters)
    while end - start >= 2 and letters[start] == -letters[end - 1]:
        start += 1
        end -= 1
    core = Word(letters[start:end], word.rank)
    conjugator = Word(letters[:start], word.rank)
    return core, conjugator


def least_rotation(letters: Sequence[Letter]) -> int:
    """Booth's algorithm: start index of the least rotation, in linear time."""
    keys = [letter_key(value) for value in letters]
    n = len(keys)
    if n == 0:
        return 0
    failure = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        current = keys[j % n]
        i = failure[j - k - 1]
        while i != -1 and current != keys[(k + i + 1) % n]:
            if current < keys[(k + i + 1) % n]:
                k = j - i - 1
            i = failure[i]
        if i == -1 and current != keys[(k + i + 1) % n]:
            if current < keys[(k + i + 1) % n]:
                k = j
            failure[j - k] = -1
        else:
            failure[j - k] = i + 1
    return k % n


def is_canonical_rotation(letters: Sequence[Letter]) -> bool:
    start = least_rotation(letters)
    return tuple(letters[start:]) + tuple(letters[:start]) == tuple(letters)


def canonical_class(word: WordLike) -> CyclicWord:
    """Canonical representative of the conjugacy class of ``word``."""
    if isinstance(word, CyclicWord):
        return word
    core, _ = cyclic_reduce(word)
    if core.is_trivial():
        raise DomainError("The trivial word has no conjugacy class in C_k.")
    start = least_rotation(core.letters)
    rotated = core.letters[start:] + core.letters[:start]
    return CyclicWord(rotated, word.rank)


def abelianize(word: WordLike) -> AbelImage:
    coordinates = [0] * word.rank
    for value in word.letters:
        coordinates[abs(value) - 1] += letter_sign(value)
    return AbelImage(tuple(coordinates))


def occurrence_vector(word: WordLike) -> tuple[int, ...]:
    """Per-generator count of letters a_i^{+1} and a_i^{-1}."""
    counts = [0] * word.rank
    for value in word.letters:
        counts[abs(value) - 1] += 1
    return tuple(counts)


def has_proper_period(letters: Sequence[Letter]) -> bool:
    """A string equals one of its own nontrivial rotations exactly when it is
    periodic, so the doubled-string search finds a proper period.
    """
    text = format_letters(letters)
    return (text + text).find(text, 1) < len(text)


def is_proper_power(word: CyclicWord) -> bool:
    """True iff the cyclic word is d^n for some n >= 2."""
    return has_proper_period(word.letters)


def is_visible(p: int, q: int) -> bool:
    if p == 0 and q == 0:
        raise DomainError("(0, 0) is not a lattice direction.")
    return gcd(abs(p), abs(q)) == 1


def christoffel_letters(p: int, q: int) -> tuple[Letter, ...]:
    """Lower Christoffel word with |p| a's and |q| b's, signs taken from (p, q)."""
    a = 1 if p > 0 else -1
    b = 2 if q > 0 else -2
    width, height = abs(p), abs(q)
    total = width + height
    letters = []
    for i in range(1, total + 1):
        if (i * height) // total > ((i - 1) * height) // total:
            letters.append(b)
        else:
            letters.append(a)
    return tuple(letters)


def primitive_rep_from_visible(p: int, q: int) -> CyclicWord:
    """Canonical primitive class of F(a, b) whose abelianization is (p, q)."""
    if not is_visible(p, q):
        raise DomainError(f"({p}, {q}) is not a visible point.")
    return canonical_class(Word(christoffel_letters(p, q), 2))


def word_count_formula_check(k: int, n: int) -> int:
    """Number of freely reduced words of length ``n`` in F_k."""
    if n < 1:
        raise DomainError(f"Word length must be at least 1, got {n}.")
    return 2 * k * (2 * k - 1) ** (n - 1)


__all__ = [
    "AbelImage",
    "CyclicWord",
    "Letter",
    "Word",
    "abelianize",
    "canonical_class",
    "christoffel_letters",
    "cyclic_reduce",
    "format_letters",
    "has_proper_period",
    "free_reduce",
    "is_canonical_rotation",
    "is_proper_power",
    "is_visible",
    "least_rotation",
    "letter",
    "letter_key",
    "occurrence_vector",
    "parse_letters",
    "primitive_rep_from_visible",
    "word_count_formula_check",
]
