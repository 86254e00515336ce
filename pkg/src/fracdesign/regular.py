"""GF(2) algebra for regular 2^(m-p) designs.

Words are bit masks over a label alphabet: bit j set means label j occurs in
the word. Multiplying words is XOR (symmetric difference).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .design import DesignTable, WordLengthPattern, default_labels
from fractions import Fraction


class SpecificationError(ValueError):
    """Malformed word, generator or design request."""


@dataclass(frozen=True)
class FactorWord:
    bits: int
    alphabet: tuple[str, ...]

    def __post_init__(self):
        if self.bits < 0 or self.bits >> len(self.alphabet):
            raise SpecificationError("word has bits outside its alphabet")

    def __len__(self):
        return self.bits.bit_count()

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for j, lab in enumerate(self.alphabet) if self.bits >> j & 1)

    def __mul__(self, other: FactorWord) -> FactorWord:
        if other.alphabet != self.alphabet:
            raise SpecificationError("words over different alphabets")
        return FactorWord(self.bits ^ other.bits, self.alphabet)

    def __str__(self):
        return "".join(self.labels) or "I"


def _tokenize(text: str, alphabet: Sequence[str]) -> list[str]:
    if all(len(lab) == 1 for lab in alphabet):
        return list(text)
    pattern = "|".join(re.escape(lab) for lab in sorted(alphabet, key=len, reverse=True))
    tokens = re.findall(pattern + "|.", text)
    return tokens


def parse_word(text: str, alphabet: Sequence[str]) -> FactorWord:
    """Read a word such as ``"ABC"`` over the given labels."""
    alphabet = tuple(alphabet)
    text = text.strip()
    if not text:
        raise SpecificationError("empty word")
    bits = 0
    for tok in _tokenize(text, alphabet):
        if tok not in alphabet:
            raise SpecificationError(f"unknown factor {tok!r} in word {text!r}")
        bit = 1 << alphabet.index(tok)
        if bits & bit:
            raise SpecificationError(f"factor {tok!r} repeated in word {text!r}")
        bits |= bit
    return FactorWord(bits, alphabet)


@dataclass(frozen=True)
class GeneratorSpec:
    target: str
    word: FactorWord

    def __str__(self):
        return f"{self.target}={self.word}"


def parse_generators(text: str, b: int) -> list[GeneratorSpec]:
    """Parse ``"E=ABC,F=ABD"`` with basic factors ``A..`` (b of them)."""
    basics = default_labels(b)
    gens = []
    for item in filter(None, (s.strip() for s in re.split(r"[,;\s]+", text))):
        target, sep, word = item.partition("=")
        if not sep or not target.strip():
            raise SpecificationError(f"generator {item!r} is not of the form X=WORD")
        gens.append(GeneratorSpec(target.strip(), parse_word(word, basics)))
    _check_generators(b, gens)
    return gens


def _check_generators(b: int, generators: Sequence[GeneratorSpec]) -> None:
    if b < 1:
        raise SpecificationError("need at least one basic factor")
    basics = default_labels(b)
    targets = [g.target for g in generators]
    if len(set(targets)) != len(targets):
        raise SpecificationError("generated factor labels must be distinct")
    for g in generators:
        if g.target in basics:
            raise SpecificationError(f"generated factor {g.target!r} clashes with a basic factor")
        if g.word.alphabet != basics:
            raise SpecificationError(f"generator {g} must be a word over {''.join(basics)}")
        if len(g.word) < 2:
            raise SpecificationError(f"generator {g} has length {len(g.word)}; need at least 2")


def full_factorial(b: int) -> list[tuple[int, ...]]:
    """All 2^b level combinations, last factor fastest, starting at all -1."""
    return [tuple(1 if r >> (b - 1 - j) & 1 else -1 for j in range(b)) for r in range(1 << b)]


def build_design(b: int, generators: Sequence[GeneratorSpec] = ()) -> DesignTable:
    """Full 2^b factorial in the basic factors plus one product column per generator."""
    _check_generators(b, generators)
    rows = []
    for base in full_factorial(b):
        row = list(base)
        for g in generators:
            level = 1
            for j in range(b):
                if g.word.bits >> j & 1:
                    level *= base[j]
            row.append(level)
        rows.append(tuple(row))
    labels = default_labels(b) + tuple(g.target for g in generators)
    return DesignTable(tuple(rows), labels)


@dataclass(frozen=True)
class DefiningRelation:
    """Nonempty words of the defining contrast subgroup; I itself is implied."""

    words: tuple[FactorWord, ...]
    alphabet: tuple[str, ...]

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def as_strings(self) -> set[str]:
        return {str(w) for w in self.words}

    def __str__(self):
        return " = ".join(["I"] + [str(w) for w in self.words])


def defining_relation(generators: Sequence[GeneratorSpec], m: int) -> DefiningRelation:
    """Closure of the generator words ``word * target`` under multiplication."""
    p = len(generators)
    b = m - p
    if generators:
        b_gen = len(generators[0].word.alphabet)
        if b_gen != b:
            raise SpecificationError(f"{p} generators over {b_gen} basics do not give {m} factors")
        _check_generators(b, generators)
    alphabet = default_labels(b) + tuple(g.target for g in generators)
    base = [g.word.bits | 1 << (b + i) for i, g in enumerate(generators)]
    words = set()
    for size in range(1, p + 1):
        for subset in combinations(base, size):
            acc = 0
            for w in subset:
                acc ^= w
            words.add(acc)
    ordered = sorted(words, key=lambda w: (w.bit_count(), _label_key(w, m)))
    return DefiningRelation(tuple(FactorWord(w, alphabet) for w in ordered), alphabet)


def _label_key(bits: int, m: int) -> tuple[int, ...]:
    return tuple(j for j in range(m) if bits >> j & 1)


def wlp_from_relation(relation: DefiningRelation, m: int) -> WordLengthPattern:
    counts = [0] * m
    for w in relation.words:
        counts[len(w) - 1] += 1
    return WordLengthPattern(tuple(Fraction(c) for c in counts))


def resolution_from_wlp(wlp: WordLengthPattern) -> int | None:
    return wlp.resolution


# --- column selections -------------------------------------------------------


def gf2_rank(vectors: Sequence[int]) -> int:
    pivots: dict[int, int] = {}
    rank = 0
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top not in pivots:
                pivots[top] = v
                rank += 1
                break
            v ^= pivots[top]
    return rank


def generators_for_columns(b: int, vectors: Sequence[int]) -> tuple[list[int], list[GeneratorSpec]]:
    """Rewrite a full-rank selection of GF(2)^b vectors as basics plus generators.

    The first b independent vectors become the new basic factors; every other
    vector is expressed in that basis. Returns the selection reordered
    (basis first) and the generator list.
    """
    basis: list[int] = []
    # reduced rows: (vector, combination of basis indices that produces it)
    pivots: dict[int, tuple[int, int]] = {}
    rest: list[tuple[int, int]] = []
    for v in vectors:
        x, combo = v, 0
        while x:
            top = x.bit_length() - 1
            if top not in pivots:
                break
            px, pc = pivots[top]
            x ^= px
            combo ^= pc
        if x:
            idx = len(basis)
            basis.append(v)
            pivots[x.bit_length() - 1] = (x, combo ^ 1 << idx)
        else:
            rest.append((v, combo))
    if len(basis) != b:
        raise SpecificationError(f"selection has rank {len(basis)}, need {b}")
    labels = default_labels(b + len(rest))
    basics = labels[:b]
    gens = [GeneratorSpec(labels[b + i], FactorWord(combo, basics))
            for i, (_, combo) in enumerate(rest)]
    return basis + [v for v, _ in rest], gens
