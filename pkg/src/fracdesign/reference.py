"""Best-known moment patterns and optimality flags.

The store is a plain text file, one record per line::

    n m status provenance precision value value ...

``status`` is ``optimal``, ``best-found`` or ``unconfirmed``; ``precision``
is ``exact`` (values are integers or ``p/q`` rationals covering the full
pattern) or ``display`` (decimals transcribed at printed precision,
usually a prefix). Lines starting with ``#`` are comments; the first
non-comment line must be ``version 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable

from .design import (
    DesignTable,
    Order,
    compare_patterns,
    format_decimal,
    moment_pattern,
    round_half_up,
)

STORE_VERSION = 1
STATUSES = ("optimal", "best-found", "unconfirmed")
PRECISIONS = ("exact", "display")


class ReferenceError(ValueError):
    pass


class Optimality(enum.Enum):
    OPTIMAL = "optimal"
    SUBOPTIMAL = "suboptimal"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ReferencePattern:
    n: int
    m: int
    values: tuple[Fraction, ...]
    status: str
    provenance: str
    places: tuple[int, ...] | None = None  # set for display precision

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ReferenceError(f"unknown status {self.status!r}")

    @property
    def exact(self) -> bool:
        return self.places is None

    def display(self, places: int = 1, length: int | None = None) -> str:
        vals = self.values[:length]
        if self.exact:
            return "(" + ", ".join(format_decimal(v, places) for v in vals) + ")"
        return "(" + ", ".join(format_decimal(v, p) for v, p in zip(vals, self.places)) + ")"

    def to_line(self) -> str:
        if self.exact:
            vals = [str(v) for v in self.values]
            precision = "exact"
        else:
            vals = [format_decimal(v, p) for v, p in zip(self.values, self.places)]
            precision = "display"
        return " ".join([str(self.n), str(self.m), self.status, self.provenance, precision] + vals)


def _parse_line(line: str, lineno: int) -> ReferencePattern:
    parts = line.split()
    if len(parts) < 6:
        raise ReferenceError(f"line {lineno}: expected n m status provenance precision values")
    n, m, status, provenance, precision, *vals = parts
    if precision not in PRECISIONS:
        raise ReferenceError(f"line {lineno}: unknown precision {precision!r}")
    try:
        values = tuple(Fraction(v) for v in vals)
    except ValueError as exc:
        raise ReferenceError(f"line {lineno}: {exc}") from None
    places = None
    if precision == "display":
        places = tuple(len(v.partition(".")[2]) for v in vals)
    return ReferencePattern(int(n), int(m), values, status, provenance, places)


class ReferenceStore:
    def __init__(self, records: Iterable[ReferencePattern] = ()):
        self._records: dict[tuple[int, int], ReferencePattern] = {}
        for rec in records:
            self._records[rec.n, rec.m] = rec

    @classmethod
    def parse(cls, text: str) -> ReferenceStore:
        records = []
        seen_version = False
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if not seen_version:
                if line != f"version {STORE_VERSION}":
                    raise ReferenceError(f"line {lineno}: expected 'version {STORE_VERSION}'")
                seen_version = True
                continue
            records.append(_parse_line(line, lineno))
        return cls(records)

    @classmethod
    def load(cls, path: str | Path | None = None) -> ReferenceStore:
        if path is None:
            text = resources.files("fracdesign.data").joinpath("reference_patterns.txt").read_text()
        else:
            text = Path(path).read_text()
        return cls.parse(text)

    def dumps(self) -> str:
        lines = ["# n m status provenance precision pattern", f"version {STORE_VERSION}"]
        lines += [self._records[k].to_line() for k in sorted(self._records)]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def get(self, n: int, m: int) -> ReferencePattern | None:
        return self._records.get((n, m))

    def put(self, record: ReferencePattern) -> None:
        self._records[record.n, record.m] = record

    def __iter__(self):
        return iter(self._records[k] for k in sorted(self._records))

    def __len__(self):
        return len(self._records)


_default_store: ReferenceStore | None = None


def default_store() -> ReferenceStore:
    global _default_store
    if _default_store is None:
        _default_store = ReferenceStore.load()
    return _default_store


def reference_patterns(n: int, m: int, store: ReferenceStore | None = None) -> ReferencePattern | None:
    return (default_store() if store is None else store).get(n, m)


def judge_pattern(moments, n: int, m: int, store: ReferenceStore | None = None) -> Optimality:
    """Compare exact moments against the stored reference for (n, m)."""
    ref = reference_patterns(n, m, store)
    if ref is None:
        return Optimality.UNKNOWN
    k = len(ref.values)
    if len(moments) < k:
        return Optimality.UNKNOWN
    if ref.exact:
        order = compare_patterns(tuple(moments[:k]), ref.values)
    else:
        shown = tuple(round_half_up(v, p) for v, p in zip(moments, ref.places))
        order = compare_patterns(shown, ref.values)
    if order is Order.WORSE:
        return Optimality.SUBOPTIMAL
    if order is Order.EQUAL and ref.status == "optimal":
        return Optimality.OPTIMAL
    return Optimality.UNKNOWN


def is_optimal(design: DesignTable, store: ReferenceStore | None = None) -> Optimality:
    """Optimal, suboptimal or unknown relative to the best-known pattern."""
    if design.n < 2:
        return Optimality.UNKNOWN
    return judge_pattern(moment_pattern(design).moments, design.n, design.m, store)


def publish(store: ReferenceStore, result) -> bool:
    """Record a search result; returns whether the store changed.

    Exhaustive results replace any record. Heuristic results only fill gaps
    or improve on an earlier best-found record.
    """
    n, m = result.design.n, result.design.m
    values = tuple(result.pattern.moments)
    current = store.get(n, m)
    if result.mode.value == "exhaustive":
        record = ReferencePattern(n, m, values, "optimal", "exhaustive")
    else:
        if current is not None and current.status != "best-found":
            return False
        if current is not None and compare_patterns(values, current.values) is not Order.BETTER:
            return False
        record = ReferencePattern(n, m, values, "best-found", "heuristic")
    if record == current:
        return False
    store.put(record)
    return True
