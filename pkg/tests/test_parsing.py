import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracdesign.design import DesignTable, format_design, validate_table
from fracdesign.harness.parsing import (
    Refusal,
    Table,
    Unparseable,
    find_refusal,
    parse_design_response,
    parse_table_text,
)
from fracdesign.harness.prompt import prompt_template, render_prompt

from conftest import HALF_FRACTION_ROWS
from parser_corpus import CORPUS, REFUSAL, WELL_FORMED

KINDS = {"table": Table, "refusal": Refusal, "unparseable": Unparseable}


@pytest.mark.parametrize("case", CORPUS, ids=lambda c: c.name)
def test_corpus(case):
    outcome = parse_design_response(case.raw, 4, 8)
    assert isinstance(outcome, KINDS[case.kind])
    report = validate_table(outcome, 4, 8)
    assert report.status.value == case.compliance, report.detail
    log = " | ".join(outcome.repair_log)
    for fragment in case.log:
        assert fragment in log
    if case.clean_log:
        assert outcome.repair_log == ()
    if report.compliant:
        assert report.design.rows == tuple(HALF_FRACTION_ROWS)


def test_spec_single_line_example():
    raw = "Run,A,B\\\\ 1,-1,-1\\\\ 2,1,1\\\\ 3,-1,1\\\\ 4,1,-1\\\\"
    outcome = parse_design_response(raw, 2, 4)
    assert outcome == Table((("-1", "-1"), ("1", "1"), ("-1", "1"), ("1", "-1")), ("A", "B"))


def test_apology_with_table_is_graded_on_table():
    outcome = parse_design_response("I'm sorry for the delay.\n" + WELL_FORMED, 4, 8)
    assert isinstance(outcome, Table)


def test_refusal_phrase_list_is_configurable():
    assert find_refusal("Nope, not doing that.", ("not doing that",)) == "not doing that"
    assert isinstance(parse_design_response("Nope, not doing that.", 4, 8, ("not doing that",)), Refusal)
    assert isinstance(parse_design_response("Nope, not doing that.", 4, 8, ()), Unparseable)


def test_refusal_verbatim():
    assert isinstance(parse_design_response(REFUSAL, 7, 16), Refusal)


def test_header_without_rows():
    assert isinstance(parse_table_text("Run,A,B,C\\\\"), Unparseable)


def test_overlong_row_is_unparseable():
    raw = WELL_FORMED.replace("8,1,1,1,1", "8,1,1,1,1,1,1")
    assert isinstance(parse_table_text(raw), Unparseable)


# -- conservative repairs ------------------------------------------------------------


LEVEL_TOKENS = re.compile(r"[+\-−]?\d+(?:\.\d*)?")


@st.composite
def messy_tables(draw):
    n = draw(st.integers(2, 10))
    m = draw(st.integers(1, 6))
    rows = draw(st.lists(st.tuples(*[st.sampled_from((-1, 1))] * m), min_size=n, max_size=n))
    lines = ["Run," + ",".join("ABCDEFGH"[:m]) + "\\\\"]
    for i, row in enumerate(rows, start=1):
        cells = [str(i)] + [str(v) for v in row]
        if draw(st.booleans()):
            k = draw(st.integers(1, len(cells) - 1))
            cells.insert(k, "")  # doubled comma
        sep = draw(st.sampled_from([",", ", ", " ,"]))
        end = draw(st.sampled_from(["\\\\", "", ",\\\\", " \\\\"]))
        lines.append(sep.join(cells) + end)
    prose = draw(st.sampled_from(["", "Here it is:\n", "```csv\n"]))
    tail = "\n```" if prose == "```csv\n" else ""
    return rows, m, prose + "\n".join(lines) + tail


@settings(max_examples=150)
@given(messy_tables())
def test_repairs_never_invent_cells(case):
    rows, m, raw = case
    outcome = parse_design_response(raw, m, len(rows))
    assert isinstance(outcome, Table)
    raw_tokens = set(LEVEL_TOKENS.findall(raw))
    for row in outcome.rows:
        for cell in row:
            assert cell is None or cell in raw_tokens
    report = validate_table(outcome, m, len(rows))
    assert report.compliant, (report.detail, outcome.repair_log)
    assert list(report.design.rows) == rows


@settings(max_examples=80)
@given(st.integers(1, 8).flatmap(lambda m: st.lists(
    st.tuples(*[st.sampled_from((-1, 1))] * m), min_size=2, max_size=12)))
def test_compliant_round_trip(rows):
    design = DesignTable(tuple(rows))
    for dialect in ("prompt", "plain"):
        outcome = parse_design_response(format_design(design, dialect), design.m, design.n)
        report = validate_table(outcome, design.m, design.n)
        assert report.compliant
        assert report.design == design


# -- prompt ----------------------------------------------------------------------


def test_prompt_substitution():
    text = render_prompt(7, 16)
    assert "The number of factors is 7 and the number of runs is 16" in text
    assert "with 16 runs and 7 factors that has maximum resolution and minimum aberration" in text


@pytest.mark.parametrize("m, n", [(4, 8), (26, 32), (1, 2)])
def test_prompt_fixed_text(m, n):
    text = render_prompt(m, n)
    assert "each row must end with" in text
    assert text.count("maximum resolution and minimum aberration") == 2
    assert text.startswith("You are an expert in the subfield of statistics")


@pytest.mark.parametrize("m, n", [(4, 8), (13, 32)])
def test_prompt_differs_only_at_slots(m, n):
    template = prompt_template()
    pieces = template.split("{")
    rendered = render_prompt(m, n)
    # rebuild from the template, swapping slot contents only
    rebuilt = pieces[0]
    for piece in pieces[1:]:
        slot, rest = piece.split("}", 1)
        rebuilt += {"m": str(m), "n": str(n)}[slot] + rest
    assert rendered == rebuilt
    assert template.count("{m}") == 2 and template.count("{n}") == 2


def test_prompt_rejects_bad_sizes():
    with pytest.raises(ValueError):
        render_prompt(0, 8)
