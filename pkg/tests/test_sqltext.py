from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from askdb.sqltext import ModelOutput, OutputKind, classify_output, normalize_sql

# (raw output, expected kind, expected extracted SQL) covering the cascade:
# fences, [SQL]: markers, bare keywords, the abstention phrase, and mixes.
CLASSIFY_FIXTURES = [
    ("unanswerable question", OutputKind.ABSTENTION, None),
    ("Unanswerable Question", OutputKind.ABSTENTION, None),
    ("  unanswerable question.  ", OutputKind.ABSTENTION, None),
    ("This is an unanswerable question, sorry.", OutputKind.ABSTENTION, None),
    ("[SQL]: unanswerable question", OutputKind.ABSTENTION, None),
    # marker outside a fence dominates even when SQL is present
    ("unanswerable question ```SELECT 1;```", OutputKind.ABSTENTION, None),
    ("```SELECT 1;``` unanswerable question", OutputKind.ABSTENTION, None),
    ("SELECT 1; -- this is an unanswerable question", OutputKind.ABSTENTION, None),
    # fence extraction
    ("Sure! ```SELECT symbol FROM gene;```", OutputKind.SQL, "SELECT symbol FROM gene;"),
    ("```sql\nSELECT 1;\n```", OutputKind.SQL, "SELECT 1;"),
    ("```sql SELECT 1;```", OutputKind.SQL, "SELECT 1;"),
    ("text ```SELECT a FROM t``` more ```SELECT b FROM u```", OutputKind.SQL, "SELECT a FROM t"),
    # marker inside a fence does not abstain; the fence content is the candidate
    ("```unanswerable question```", OutputKind.SQL, "unanswerable question"),
    # [SQL]: marker extraction (last marker wins)
    ("[Q]: x\n[SQL]: SELECT 1", OutputKind.SQL, "SELECT 1"),
    ("[SQL]: draft\n[SQL]: SELECT 2 FROM t;", OutputKind.SQL, "SELECT 2 FROM t;"),
    # keyword extraction up to the first semicolon
    ("The query is SELECT a FROM t; hope that helps", OutputKind.SQL, "SELECT a FROM t;"),
    ("with cte as (select 1) select * from cte", OutputKind.SQL,
     "with cte as (select 1) select * from cte"),
    ("I would select carefully", OutputKind.SQL, "select carefully"),
    # unusable
    ("I think the answer is 42", OutputKind.UNUSABLE, None),
    ("", OutputKind.UNUSABLE, None),
    ("``````", OutputKind.UNUSABLE, None),
    ("[SQL]:   ", OutputKind.UNUSABLE, None),
    ("No idea, try rephrasing.", OutputKind.UNUSABLE, None),
    ("selection criteria unclear", OutputKind.UNUSABLE, None),
]


@pytest.mark.parametrize("raw,kind,sql", CLASSIFY_FIXTURES)
def test_classify_cascade(raw, kind, sql):
    out = classify_output(raw)
    assert out.kind is kind
    assert out.sql == sql
    assert out.raw == raw


def test_fixture_count_covers_requirement():
    assert len(CLASSIFY_FIXTURES) >= 20


def test_sql_candidate_never_empty():
    for raw, _, _ in CLASSIFY_FIXTURES:
        out = classify_output(raw)
        if out.kind is OutputKind.SQL:
            assert out.sql is not None and out.sql.strip()


def test_abstention_dominates_mixed_output():
    out = classify_output("unanswerable question\n[SQL]: SELECT 1;")
    assert out.kind is OutputKind.ABSTENTION


def test_normalize_examples():
    assert normalize_sql("SELECT  name\nFROM gene;") == "select name from gene"
    assert normalize_sql("select name from gene") == "select name from gene"


def test_normalize_trailing_semicolon_with_space():
    assert normalize_sql("SELECT 1 ; ") == "select 1"


def test_normalize_idempotent_on_fixture_sqls(dev_items, seed_items):
    sqls = [it.gold_sql for it in dev_items + seed_items]
    # pad with whitespace-mangled variants to reach a 50-sample sweep
    variants = [s.replace(" ", "  ").replace("FROM", "\nFROM") for s in sqls]
    variants += [s.upper() + ";" for s in sqls]
    sweep = (sqls + variants)[:50]
    assert len(sweep) >= 44
    for sql in sweep:
        once = normalize_sql(sql)
        assert normalize_sql(once) == once


def test_normalize_whitespace_insensitive(dev_items):
    for item in dev_items:
        doubled = item.gold_sql.replace(" ", "  ")
        assert normalize_sql(item.gold_sql) == normalize_sql(doubled)


@given(st.text(max_size=200))
def test_normalize_idempotent_arbitrary(text):
    once = normalize_sql(text)
    assert normalize_sql(once) == once


@given(st.text(max_size=200))
def test_classify_total(text):
    out = classify_output(text)
    assert isinstance(out, ModelOutput)
    if out.kind is OutputKind.SQL:
        assert out.sql and out.sql.strip()
