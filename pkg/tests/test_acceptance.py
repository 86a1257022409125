"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the criterion lines.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
import time

import numpy as np
from click.testing import CliRunner

from askdb.cli import main
from askdb.executor import ExecError, open_database
from askdb.harness import sweep
from askdb.llm import LlmClient, ScriptedProvider
from askdb.metrics import ResultComparison, compare_results, soft_correct
from askdb.pipeline import PipelineOptions, VerdictKind, answer_question
from askdb.prompt import PromptConfig
from askdb.retriever import cosine_similarity, top_k_similar
from askdb.sqltext import OutputKind, classify_output, normalize_sql

from ._oracles import oracle_compare, oracle_top_k
from .table_pairs import build_pairs
from .test_retriever import _store
from .test_sqltext import CLASSIFY_FIXTURES

CONFIG = PromptConfig(shots=0, include_nar=True)


def _announce(name: str, ok: bool) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    assert ok


class CountingExecutor:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def execute_sql(self, sql, limits=None):
        self.calls += 1
        return self.inner.execute_sql(sql, limits)

    def ping(self):
        return self.inner.ping()


def test_metrics_oracle_suite():
    """compare_results equals the brute-force permutation oracle; tiers ordered."""
    started = time.monotonic()
    pairs = build_pairs()
    ok = len(pairs) >= 30
    tiers_seen = set()
    for pred, gold in pairs:
        got = compare_results(pred, gold)
        tiers_seen.add(got)
        if got.value != oracle_compare(pred, gold):
            ok = False
        if not isinstance(pred, ExecError):
            if (got is ResultComparison.EXACT_MATCH) and not soft_correct(pred, gold):
                ok = False
    ok = ok and tiers_seen == set(ResultComparison)
    elapsed = time.monotonic() - started
    ok = ok and elapsed < 5.0
    _announce(f"metrics oracle suite ({len(pairs)} pairs, {elapsed:.2f}s)", ok)


def test_state_machine_suite(mini_schema, executor):
    """Exact call counts for re-prompt, correction budget, and short-circuits."""

    def run(responses, **options):
        provider = ScriptedProvider(responses)
        counting = CountingExecutor(executor)
        outcome = answer_question(
            "How many genes are in the database?", mini_schema, CONFIG,
            LlmClient(provider), executor=counting,
            options=PipelineOptions(**options),
        )
        return outcome, provider, counting

    ok = True

    # abstention: one call, one transcript entry, zero executions
    outcome, provider, counting = run(["unanswerable question"])
    ok &= outcome.verdict.kind == VerdictKind.ABSTAINED
    ok &= provider.calls == 1 and len(outcome.transcript) == 1 and counting.calls == 0

    # unusable output triggers exactly one re-prompt
    outcome, provider, counting = run(["gibberish", "SELECT 1;"])
    ok &= outcome.verdict.kind == VerdictKind.EXECUTED
    ok &= provider.calls == 2 and outcome.reprompts_used == 1 and len(outcome.transcript) == 2

    # still unusable after the single re-prompt: stop at two calls
    outcome, provider, counting = run(["gibberish", "more gibberish"])
    ok &= outcome.verdict.kind == VerdictKind.UNUSABLE
    ok &= provider.calls == 2 and counting.calls == 0

    # correction budget of three: transcript length 4, four executions
    outcome, provider, counting = run(
        ["SELECT * FROM nope;", "SELECT * FROM nope2;", "SELECT * FROM nope3;", "SELECT * FROM nope4;"]
    )
    ok &= outcome.verdict.kind == VerdictKind.DB_FAILED
    ok &= outcome.corrections_used == 3 and len(outcome.transcript) == 4
    ok &= provider.calls == 4 and counting.calls == 4

    # worst case: re-prompt plus full correction budget = five calls
    outcome, provider, counting = run(
        ["gibberish", "SELECT * FROM nope;", "SELECT * FROM nope2;",
         "SELECT * FROM nope3;", "SELECT * FROM nope4;"]
    )
    ok &= provider.calls == 5 and len(outcome.transcript) == 5
    ok &= len(outcome.transcript) == 1 + outcome.reprompts_used + outcome.corrections_used

    # abstention during correction short-circuits: no further executions
    outcome, provider, counting = run(["SELECT * FROM nope;", "unanswerable question"])
    ok &= outcome.verdict.kind == VerdictKind.ABSTAINED
    ok &= provider.calls == 2 and counting.calls == 1

    # correction loop disabled: zero corrections always
    outcome, provider, counting = run(["SELECT * FROM nope;"], correction_loop=False)
    ok &= outcome.verdict.kind == VerdictKind.DB_FAILED and outcome.corrections_used == 0

    _announce("state-machine suite (exact call counts)", ok)


def test_retriever_oracle():
    """top_k_similar equals brute force on 200 random stores; cosine hand values."""
    ok = abs(cosine_similarity([1, 2, 3], [4, 5, 6]) - 0.9746318) < 1e-6
    ok &= abs(cosine_similarity([1, 0], [1, 0]) - 1.0) < 1e-6
    ok &= abs(cosine_similarity([1, 0], [0, 1]) - 0.0) < 1e-6

    rng = np.random.RandomState(20240809)
    for trial in range(200):
        n = int(rng.randint(1, 65))
        dim = int(rng.randint(2, 17))
        vectors = [list(rng.uniform(-1, 1, dim)) for _ in range(n)]
        store = _store({f"q{i}": vectors[i] for i in range(n)})
        query = list(rng.uniform(-1, 1, dim))
        k = int(rng.randint(0, n + 2))
        exclude_idx = int(rng.randint(0, n)) if trial % 2 else None
        exclude_id = f"q{exclude_idx}" if exclude_idx is not None else None
        got = [it.id for it in top_k_similar(query, store, k, exclude_id=exclude_id)]
        expected = [f"q{i}" for i in oracle_top_k(vectors, query, k, exclude_idx)]
        if got != expected:
            ok = False
            break
    _announce("retriever oracle (200 random stores + hand cosines)", ok)


def test_normalization_suite(dev_items, seed_items):
    """normalize_sql idempotence, the exact-match trio, and the classify fixtures."""
    ok = normalize_sql("SELECT  name\nFROM gene;") == "select name from gene"
    ok &= normalize_sql("select name from gene") == "select name from gene"

    ok &= normalize_sql("SELECT  name FROM gene;") == normalize_sql("select name from gene")
    ok &= normalize_sql("select name from gene") != normalize_sql("select symbol from gene")
    ok &= normalize_sql("select count(*) from gene") != normalize_sql("select count( * ) from gene")

    sqls = [it.gold_sql for it in dev_items + seed_items]
    sweep_sqls = (sqls + [s.replace(" ", "\t\t").upper() + " ;" for s in sqls])[:50]
    for sql in sweep_sqls:
        if normalize_sql(normalize_sql(sql)) != normalize_sql(sql):
            ok = False

    ok &= len(CLASSIFY_FIXTURES) >= 20
    for raw, kind, sql in CLASSIFY_FIXTURES:
        out = classify_output(raw)
        if out.kind is not kind or out.sql != sql:
            ok = False
    ok &= classify_output("unanswerable question\nSELECT 1;").kind is OutputKind.ABSTENTION
    _announce(f"normalization suite ({len(CLASSIFY_FIXTURES)} classify fixtures)", ok)


EXPECTED_DESK_AGGREGATES = {
    "answerable_total": 10,
    "unanswerable_total": 16,
    "sql_exact_match_acc": 0.5,
    "result_acc_exact": 0.5,
    "result_acc_soft": 0.6,
    "db_error_rate": 0.125,
    "naq_detection_acc": 1.0,
    "false_abstention_rate_on_answerable": 0.1,
    "naq_detection_by_category": {
        "NonSql": 1.0, "ColumnsMissing": 1.0, "ValuesMissing": 1.0, "OutOfDomain": 1.0,
        "ColumnAmbiguous": 1.0, "ValueAmbiguous": 1.0, "ContextualAmbiguous": 1.0,
        "OperatorAmbiguous": 1.0,
    },
}


def test_end_to_end_desk_run(tmp_path, fixtures_dir):
    """CLI evaluate on the fixtures: exact hand-computed aggregates, stable bytes."""
    started = time.monotonic()
    runner = CliRunner()
    outputs = []
    for name in ("r1.json", "r2.json"):
        out = tmp_path / name
        result = runner.invoke(main, [
            "evaluate",
            "--dataset", str(fixtures_dir / "dev.json"),
            "--naq", str(fixtures_dir / "naq.json"),
            "--schema", str(fixtures_dir / "oncomx_mini.schema.json"),
            "--db", str(fixtures_dir / "oncomx_mini.sql"),
            "--llm", f"scripted:{fixtures_dir / 'scripted_eval.json'}",
            "--nar",
            "--out", str(out),
        ], catch_exceptions=False)
        assert result.exit_code == 0, result.output
        outputs.append(out)
    elapsed = time.monotonic() - started

    report = json.loads(outputs[0].read_text(encoding="utf-8"))
    agg = report["aggregates"]
    ok = all(agg[key] == value for key, value in EXPECTED_DESK_AGGREGATES.items())
    ok &= report["infra_failures"] == []

    by_id = {r["id"]: r for r in report["per_question"]}
    ok &= by_id["dev-006"]["result_comparison"] == "soft_correct"
    ok &= by_id["dev-007"]["result_comparison"] == "incorrect"
    ok &= by_id["dev-008"]["verdict"] == "db_failed"
    ok &= by_id["dev-009"]["verdict"] == "abstained"
    ok &= by_id["dev-010"]["verdict"] == "unusable"
    ok &= all(by_id[f"naq-{i:03d}"]["naq_detected"] is True for i in range(1, 17))

    ok &= outputs[0].read_bytes() == outputs[1].read_bytes()
    ok &= outputs[0].with_suffix(".csv").read_bytes() == outputs[1].with_suffix(".csv").read_bytes()
    csv_lines = outputs[0].with_suffix(".csv").read_text(encoding="utf-8").strip().split("\n")
    ok &= len(csv_lines) == 27
    ok &= elapsed < 60.0
    _announce(f"end-to-end desk run (26 items, 2 runs, {elapsed:.2f}s)", ok)


def test_database_safety(tmp_path, fixtures_dir):
    """The database file is bit-identical after a full evaluation run."""
    db_path = tmp_path / "mini.sqlite"
    conn = sqlite3.connect(db_path)
    conn.executescript((fixtures_dir / "oncomx_mini.sql").read_text(encoding="utf-8"))
    conn.commit()
    conn.close()
    before = hashlib.sha256(db_path.read_bytes()).hexdigest()

    runner = CliRunner()
    result = runner.invoke(main, [
        "evaluate",
        "--dataset", str(fixtures_dir / "dev.json"),
        "--naq", str(fixtures_dir / "naq.json"),
        "--schema", str(fixtures_dir / "oncomx_mini.schema.json"),
        "--db", str(db_path),
        "--llm", f"scripted:{fixtures_dir / 'scripted_eval.json'}",
        "--nar",
        "--out", str(tmp_path / "report.json"),
    ], catch_exceptions=False)
    assert result.exit_code == 0, result.output

    after = hashlib.sha256(db_path.read_bytes()).hexdigest()
    _announce("database safety (checksum unchanged)", before == after)


def test_live_mode_report_schema(tmp_path, fixtures_dir, mini_schema, dev_items, naq_items,
                                 retriever, pools):
    """The sweep emits per-regime aggregates with per-category NAQ detection.

    Desk-scale stand-in for live mode: a real endpoint plugs in via --llm; the
    schema of the emitted report is what this test pins.
    """
    items = dev_items + naq_items
    responses = ["unanswerable question"] * (len(items) * 2)
    llm = LlmClient(ScriptedProvider(responses))
    executor = open_database(fixtures_dir / "oncomx_mini.sql")
    doc = sweep(items, mini_schema, llm, executor, retriever=retriever, pools=pools,
                grid=[("nar", 0), ("nar+both", 5)])
    ok = set(doc["runs"]) == {"nar@0shot", "nar+both@5shot"}
    for run in doc["runs"].values():
        agg = run["aggregates"]
        for key in ("sql_exact_match_acc", "result_acc_exact", "result_acc_soft",
                    "db_error_rate", "naq_detection_acc", "naq_detection_by_category",
                    "false_abstention_rate_on_answerable"):
            if key not in agg:
                ok = False
        if len(run["aggregates"]["naq_detection_by_category"]) != 8:
            ok = False
        if run["config"]["regime"] not in ("nar@0shot", "nar+both@5shot"):
            ok = False
        if len(run["per_question"]) != len(items):
            ok = False
    _announce("live-mode report schema (per-regime, per-category)", ok)
