"""Two-level design tables and model-free evaluation criteria.

Everything here works in exact arithmetic: coincidence counts and column
sums are Python integers and every criterion value is a
:class:`fractions.Fraction`. Floats only appear when a pattern is rendered.
"""

from __future__ import annotations

import enum
import math
import re
import string
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Sequence

LEVELS = (-1, 1)

# Full generalized WLP costs O(n 2^m); beyond this only early-exit resolution.
WLP_MAX_FACTORS = 16

_LEVEL_TOKEN = re.compile(r"^([+\-−]?)1(?:\.0+)?$")


class DesignError(ValueError):
    """Dimension or content violation of a design table."""


def default_labels(m: int) -> tuple[str, ...]:
    """Factor labels ``A, B, ...``; lowercase letters continue after ``Z``."""
    alphabet = string.ascii_uppercase + string.ascii_lowercase
    if m > len(alphabet):
        raise DesignError(f"no default labels for {m} factors")
    return tuple(alphabet[:m])


@dataclass(frozen=True)
class DesignTable:
    """An n x m table of -1/+1 levels with factor labels and run ids."""

    rows: tuple[tuple[int, ...], ...]
    factor_labels: tuple[str, ...] = ()
    run_ids: tuple[int, ...] = ()

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.rows)
        if not rows:
            raise DesignError("a design needs at least one run")
        m = len(rows[0])
        if m < 1:
            raise DesignError("a design needs at least one factor")
        for i, row in enumerate(rows):
            if len(row) != m:
                raise DesignError(f"run {i + 1} has {len(row)} levels, expected {m}")
            if any(v not in LEVELS for v in row):
                raise DesignError(f"run {i + 1} has a level outside {{-1, 1}}")
        labels = tuple(self.factor_labels) or default_labels(m)
        if len(labels) != m:
            raise DesignError(f"{len(labels)} labels for {m} factors")
        if len(set(labels)) != m:
            raise DesignError("factor labels must be distinct")
        run_ids = tuple(self.run_ids) or tuple(range(1, len(rows) + 1))
        if len(run_ids) != len(rows):
            raise DesignError(f"{len(run_ids)} run ids for {len(rows)} runs")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "factor_labels", labels)
        object.__setattr__(self, "run_ids", run_ids)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], factor_labels=()) -> DesignTable:
        return cls(tuple(zip(*columns)), tuple(factor_labels))

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return len(self.rows[0])

    @property
    def columns(self) -> tuple[tuple[int, ...], ...]:
        return tuple(zip(*self.rows))

    @cached_property
    def row_masks(self) -> tuple[int, ...]:
        # bit k set <=> factor k at level -1
        return tuple(_mask(row) for row in self.rows)

    @cached_property
    def column_masks(self) -> tuple[int, ...]:
        # bit i set <=> run i at level -1
        return tuple(_mask(col) for col in self.columns)

    def run_multiset(self) -> list[tuple[int, ...]]:
        return sorted(self.rows)


def _mask(levels: Iterable[int]) -> int:
    mask = 0
    for k, v in enumerate(levels):
        if v == -1:
            mask |= 1 << k
    return mask


def coincidence(run_a: Sequence[int], run_b: Sequence[int]) -> int:
    """Number of positions at which two runs carry the same level."""
    if len(run_a) != len(run_b):
        raise DesignError(f"runs of length {len(run_a)} and {len(run_b)}")
    return sum(1 for a, b in zip(run_a, run_b) if a == b)


def coincidence_histogram(design: DesignTable) -> list[int]:
    """``hist[v]`` is the number of run pairs i < j that coincide in v factors."""
    m = design.m
    hist = [0] * (m + 1)
    masks = design.row_masks
    for i, a in enumerate(masks):
        for b in masks[i + 1:]:
            hist[m - (a ^ b).bit_count()] += 1
    return hist


def power_sums(hist: Sequence[int], tmax: int) -> tuple[int, ...]:
    """Exact sums ``sum_v hist[v] * v**t`` for t = 1..tmax."""
    sums = []
    powers = [1] * len(hist)
    for _ in range(tmax):
        powers = [p * v for v, p in enumerate(powers)]
        sums.append(sum(c * p for c, p in zip(hist, powers) if c))
    return tuple(sums)


@dataclass(frozen=True)
class MomentPattern:
    """Moments K_1..K_tmax of the pairwise coincidence distribution."""

    moments: tuple[Fraction, ...]
    n: int
    m: int

    def __len__(self):
        return len(self.moments)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.moments)

    def __getitem__(self, idx):
        return self.moments[idx]

    @property
    def pair_count(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def numerators(self) -> tuple[int, ...]:
        return tuple(int(k * self.pair_count) for k in self.moments)

    def display(self, places: int = 2, length: int | None = None) -> str:
        return format_pattern(self.moments[:length], places)


def moment_pattern(design: DesignTable, tmax: int | None = None) -> MomentPattern:
    """Moment aberration pattern (K_1, ..., K_tmax), exact.

    ``K_t`` is the mean of ``delta(d_i, d_j) ** t`` over the n(n-1)/2 run
    pairs, where ``delta`` is :func:`coincidence`.
    """
    n, m = design.n, design.m
    tmax = m if tmax is None else tmax
    if n < 2:
        raise DesignError("moment pattern needs at least two runs")
    if not 1 <= tmax <= m:
        raise DesignError(f"tmax={tmax} outside 1..{m}")
    pairs = n * (n - 1) // 2
    sums = power_sums(coincidence_histogram(design), tmax)
    return MomentPattern(tuple(Fraction(s, pairs) for s in sums), n, m)


def _subset_xors(masks: Sequence[int], k: int) -> Iterator[int]:
    """XOR of every size-k subset of ``masks`` (depth-first)."""
    m = len(masks)

    def walk(start, depth, acc):
        if depth == k:
            yield acc
            return
        for j in range(start, m - (k - depth) + 1):
            yield from walk(j + 1, depth + 1, acc ^ masks[j])

    return walk(0, 0, 0)


def generalized_word_count(design: DesignTable, k: int) -> Fraction:
    """A_k = n^-2 * sum over k-column subsets S of (sum_i prod_{j in S} x_ij)^2.

    For a regular design this is the number of length-k words in its defining
    relation.
    """
    n, m = design.n, design.m
    if not 1 <= k <= m:
        raise DesignError(f"word length {k} outside 1..{m}")
    total = 0
    for x in _subset_xors(design.column_masks, k):
        s = n - 2 * x.bit_count()
        total += s * s
    return Fraction(total, n * n)


@dataclass(frozen=True)
class WordLengthPattern:
    counts: tuple[Fraction, ...]

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def __getitem__(self, idx):
        return self.counts[idx]

    @property
    def resolution(self) -> int | None:
        for i, a in enumerate(self.counts, start=1):
            if a > 0:
                return i
        return None

    @property
    def is_integral(self) -> bool:
        return all(a.denominator == 1 for a in self.counts)

    def __str__(self):
        return "(" + ", ".join(str(a) for a in self.counts) + ")"


def generalized_wlp(design: DesignTable) -> WordLengthPattern:
    """All generalized word counts A_1..A_m in one pass over the 2^m subsets."""
    n, m = design.n, design.m
    if m > WLP_MAX_FACTORS:
        raise DesignError(f"full WLP is limited to {WLP_MAX_FACTORS} factors, got {m}")
    cols = design.column_masks
    xors = [0] * (1 << m)
    totals = [0] * (m + 1)
    for subset in range(1, 1 << m):
        low = subset & -subset
        x = xors[subset ^ low] ^ cols[low.bit_length() - 1]
        xors[subset] = x
        s = n - 2 * x.bit_count()
        totals[subset.bit_count()] += s * s
    return WordLengthPattern(tuple(Fraction(t, n * n) for t in totals[1:]))


def resolution(design: DesignTable) -> int | None:
    """Smallest k with A_k > 0, or None when every A_k vanishes."""
    for k in range(1, design.m + 1):
        if generalized_word_count(design, k) > 0:
            return k
    return None


class Order(enum.Enum):
    BETTER = "better"
    EQUAL = "equal"
    WORSE = "worse"


def compare_patterns(a: Sequence, b: Sequence) -> Order:
    """Lexicographic comparison; smaller is better."""
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise DesignError(f"cannot compare patterns of length {len(a)} and {len(b)}")
    for x, y in zip(a, b):
        if x != y:
            return Order.BETTER if x < y else Order.WORSE
    return Order.EQUAL


def round_half_up(value, places: int) -> Fraction:
    """Round an exact value half away from zero to ``places`` decimals."""
    q = Fraction(value) * 10**places
    r = math.floor(abs(q) + Fraction(1, 2))
    return Fraction(r if q >= 0 else -r, 10**places)


def format_decimal(value, places: int) -> str:
    r = round_half_up(value, places)
    if places == 0:
        return str(int(r))
    scaled = abs(r * 10**places).numerator
    whole, frac = divmod(scaled, 10**places)
    sign = "-" if r < 0 else ""
    return f"{sign}{whole}.{frac:0{places}d}"


def format_pattern(values: Iterable, places: int) -> str:
    return "(" + ", ".join(format_decimal(v, places) for v in values) + ")"


def display_length(n: int, m: int) -> int:
    """Moments shown in tables: all for 8 runs, four for 16, six otherwise."""
    if n <= 8:
        return m
    return min(m, 4 if n == 16 else 6)


# --- compliance -------------------------------------------------------------


class Compliance(enum.Enum):
    COMPLIANT = "Compliant"
    REFUSAL = "Refusal"
    WRONG_DIMENSIONS = "WrongDimensions"
    MISSING_ENTRIES = "MissingEntries"
    INVALID_LEVEL = "InvalidLevel"


@dataclass
class ComplianceReport:
    status: Compliance
    detail: str = ""
    repair_log: list[str] = field(default_factory=list)
    design: DesignTable | None = None

    @property
    def compliant(self) -> bool:
        return self.status is Compliance.COMPLIANT


def parse_level(token: str | None) -> int | None:
    if token is None:
        return None
    match = _LEVEL_TOKEN.match(token.strip())
    if not match:
        return None
    return -1 if match.group(1) in ("-", "−") else 1


def validate_table(candidate, requested_m: int, requested_n: int) -> ComplianceReport:
    """Classify a parsed response table against the requested size.

    ``candidate`` is a parse outcome (anything with ``rows`` of string/None
    cells, and optionally ``header`` and ``repair_log``), a refusal outcome
    (has ``phrase``), or any other outcome without rows. Failures are
    reported, never raised.
    """
    log = list(getattr(candidate, "repair_log", ()) or ())
    rows = getattr(candidate, "rows", None)
    if rows is None and isinstance(candidate, (list, tuple)):
        rows = candidate
    if rows is None:
        phrase = getattr(candidate, "phrase", None)
        if phrase is not None:
            return ComplianceReport(Compliance.REFUSAL, f"refusal: {phrase!r}", log)
        reason = getattr(candidate, "reason", "no table found")
        return ComplianceReport(Compliance.WRONG_DIMENSIONS, f"no table: {reason}", log)

    rows = [list(r) for r in rows]
    if len(rows) != requested_n:
        return ComplianceReport(
            Compliance.WRONG_DIMENSIONS, f"{len(rows)} runs, expected {requested_n}", log)
    width = max((len(r) for r in rows), default=0)
    if width != requested_m:
        return ComplianceReport(
            Compliance.WRONG_DIMENSIONS, f"{width} factors, expected {requested_m}", log)

    missing = [(i + 1, j + 1) for i, r in enumerate(rows)
               for j in range(requested_m) if j >= len(r) or r[j] is None or not r[j].strip()]
    if missing:
        i, j = missing[0]
        return ComplianceReport(
            Compliance.MISSING_ENTRIES,
            f"{len(missing)} missing cell(s), first at run {i} factor {j}", log)

    levels = []
    for i, r in enumerate(rows):
        parsed = [parse_level(tok) for tok in r]
        if None in parsed:
            j = parsed.index(None)
            return ComplianceReport(
                Compliance.INVALID_LEVEL, f"run {i + 1} factor {j + 1} is {r[j]!r}", log)
        levels.append(parsed)

    labels = tuple(getattr(candidate, "header", None) or ())
    expected = default_labels(requested_m)
    if labels and labels != expected:
        log.append(f"header labels {','.join(labels)} differ from {','.join(expected)}")
    if len(labels) != requested_m or len(set(labels)) != requested_m:
        labels = expected
    design = DesignTable(tuple(tuple(r) for r in levels), labels)
    return ComplianceReport(Compliance.COMPLIANT, "", log, design)


# --- design files -------------------------------------------------------------


def format_design(design: DesignTable, dialect: str = "prompt") -> str:
    """Render a design as CSV; the ``prompt`` dialect ends each row with ``\\\\``."""
    if dialect not in ("prompt", "plain"):
        raise ValueError(f"unknown dialect {dialect!r}")
    end = "\\\\" if dialect == "prompt" else ""
    lines = [",".join(("Run",) + design.factor_labels) + end]
    for rid, row in zip(design.run_ids, design.rows):
        lines.append(",".join([str(rid)] + [str(v) for v in row]) + end)
    return "\n".join(lines) + "\n"


def read_design(text: str) -> DesignTable:
    """Read a design file in either CSV dialect."""
    from .harness.parsing import parse_table_text

    outcome = parse_table_text(text)
    if getattr(outcome, "rows", None) is None:
        raise DesignError(f"no design table found: {getattr(outcome, 'reason', outcome)}")
    rows = outcome.rows
    m = len(rows[0]) if rows else 0
    report = validate_table(outcome, m, len(rows))
    if not report.compliant:
        raise DesignError(f"{report.status.value}: {report.detail}")
    return report.design
