"""Tolerant extraction of CSV design tables from model responses.

Only format repairs are applied (whitespace, doubled or trailing commas,
missing row terminators, surrounding prose). A cell is never filled in: a
blank cell stays ``None`` so that compliance checking can see it.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence, Union

DEFAULT_REFUSAL_PHRASES = (
    "I'm sorry, but I cannot generate a valid design that meets your requirements",
    "I'm sorry",
    "I am sorry",
    "I cannot",
    "I can't",
    "I am unable",
    "I'm unable",
    "not possible to construct",
)

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)
_TERMINATOR = re.compile(r"\\+")
_INT = re.compile(r"^[+\-−]?\d+$")
_NUMBER = re.compile(r"^[+\-−]?\d+(?:\.\d*)?$")


@dataclass(frozen=True)
class Table:
    rows: tuple[tuple[str | None, ...], ...]
    header: tuple[str, ...] = ()
    repair_log: tuple[str, ...] = ()


@dataclass(frozen=True)
class Refusal:
    phrase: str
    repair_log: tuple[str, ...] = ()


@dataclass(frozen=True)
class Unparseable:
    reason: str
    repair_log: tuple[str, ...] = ()


ParseOutcome = Union[Table, Refusal, Unparseable]


def _normalize_quotes(text: str) -> str:
    return text.replace("’", "'").replace("‘", "'")


def find_refusal(raw: str, phrases: Sequence[str] = DEFAULT_REFUSAL_PHRASES) -> str | None:
    haystack = _normalize_quotes(raw).lower()
    for phrase in phrases:
        if _normalize_quotes(phrase).lower() in haystack:
            return phrase
    return None


def _is_tabular(segment: str) -> bool:
    if "," not in segment:
        return False
    return all(not re.search(r"\s", f.strip()) for f in segment.split(","))


def _segments(block: str, log: list[str]) -> list[tuple[str, bool]]:
    """Split on row terminators and line breaks; flag terminated segments."""
    out = []
    irregular = False
    for line in block.splitlines():
        pieces = _TERMINATOR.split(line)
        marks = _TERMINATOR.findall(line)
        irregular |= any(len(t) != 2 for t in marks)
        for idx, piece in enumerate(pieces):
            if piece.strip():
                out.append((piece.strip(), idx < len(marks)))
    if irregular:
        log.append("normalized row terminators other than '\\\\'")
    return out


def _pick_block(segments: list[tuple[str, bool]]) -> list[tuple[str, bool]]:
    blocks, current = [], []
    for seg in segments:
        if _is_tabular(seg[0]):
            current.append(seg)
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)
    if not blocks:
        return []
    for block in blocks:
        if block[0][0].split(",")[0].strip().lower() == "run":
            return block
    return max(blocks, key=len)


def parse_table_text(text: str, m: int | None = None) -> Table | Unparseable:
    """Extract the design table from free text; ``m`` helps resolve empty fields."""
    log: list[str] = []
    block = text
    fenced = [b for b in _FENCE.findall(text) if "," in b]
    if fenced:
        block = fenced[0]
        log.append("extracted table from code fence")

    segments = _segments(block, log)
    table = _pick_block(segments)
    if not table:
        return Unparseable("no comma-separated table found", tuple(log))
    dropped = len(segments) - len(table)
    if dropped:
        log.append(f"stripped {dropped} line(s) of surrounding text")

    if any(term for _, term in table):
        for k, (_, term) in enumerate(table, start=1):
            if not term:
                log.append(f"line {k}: missing '\\\\' terminator")
    else:
        log.append("rows have no '\\\\' terminators")

    raw_rows = [seg.split(",") for seg, _ in table]
    if any(f != f.strip() for row in raw_rows for f in row):
        log.append("trimmed whitespace around fields")
    raw_rows = [[f.strip() for f in row] for row in raw_rows]

    labels: tuple[str, ...] = ()
    has_run = False
    first = [f for f in raw_rows[0] if f]
    is_header = bool(first) and (first[0].lower() == "run"
                                 or not any(_NUMBER.match(f) for f in first))
    if is_header:
        if len(first) != len(raw_rows[0]):
            log.append("header row: dropped empty field")
        has_run = first[0].lower() == "run"
        labels = tuple(first[1:] if has_run else first)
        raw_rows = raw_rows[1:]
    header_fields = len(labels)
    if not raw_rows:
        return Unparseable("table has a header but no data rows", tuple(log))

    if not has_run:
        leading = [next((f for f in row if f), "") for row in raw_rows]
        if (len(leading) >= 2 and all(_INT.match(f) for f in leading)
                and [int(f) for f in leading] == list(range(1, len(leading) + 1))):
            has_run = True

    if labels:
        target = header_fields
    elif m is not None:
        target = m
    else:
        target = Counter(sum(1 for f in row if f) - has_run for row in raw_rows).most_common(1)[0][0]

    rows: list[list[str | None]] = []
    for k, fields in enumerate(raw_rows, start=1):
        trailing = 0
        while fields and not fields[-1]:
            fields = fields[:-1]
            trailing += 1
        if trailing:
            log.append(f"data row {k}: dropped trailing comma")
        nonempty = [f for f in fields if f]
        if len(nonempty) != len(fields):
            if len(nonempty) == target + has_run:
                log.append(f"data row {k}: dropped empty field from doubled comma")
                fields = nonempty
        cells: list[str | None] = [f if f else None for f in fields]
        if has_run:
            cells = cells[1:]
        rows.append(cells)

    width = target if labels else max(len(r) for r in rows)
    for k, cells in enumerate(rows, start=1):
        if len(cells) > width:
            return Unparseable(f"data row {k} has {len(cells)} cells, expected {width}", tuple(log))
        if len(cells) < width:
            log.append(f"data row {k}: {len(cells)} of {width} cells present; rest marked missing")
            cells.extend([None] * (width - len(cells)))
    return Table(tuple(tuple(r) for r in rows), labels, tuple(log))


def parse_design_response(raw: str, m: int, n: int,
                          refusal_phrases: Sequence[str] = DEFAULT_REFUSAL_PHRASES) -> ParseOutcome:
    """Turn a raw model reply into a Table, a Refusal or an Unparseable outcome.

    A refusal phrase only wins when no table can be extracted, so a reply
    that apologizes and still delivers a table is graded on the table.
    """
    phrase = find_refusal(raw, refusal_phrases)
    outcome = parse_table_text(raw, m)
    if isinstance(outcome, Unparseable) and phrase is not None:
        return Refusal(phrase, outcome.repair_log)
    return outcome
