"""Scoring: SQL exact match, tiered result comparison, and NAQ detection.

Result comparison has four mutually exclusive tiers. Exact match requires
identical column names, column order, row order, and content. Soft correct
drops id-like columns from both tables independently, then looks for a column
bijection under which the row multisets agree; numeric cells compare with a
relative tolerance of 1e-9, text exactly. A prediction that failed to execute
is a DB error; everything else is incorrect.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .dataset import GoldEntry, GoldResultCache, NaqCategory, QuestionItem
from .errors import MissingOutcome
from .executor import ExecError, ResultTable
from .pipeline import PipelineOutcome, VerdictKind
from .schema import identifier_columns
from .sqltext import normalize_sql

NUMERIC_TOLERANCE = 1e-9
# exhaustive column-permutation search up to this width; signatures above
EXHAUSTIVE_COLUMN_LIMIT = 8

REPORT_SCHEMA_VERSION = 1


class ResultComparison(str, Enum):
    EXACT_MATCH = "exact_match"
    SOFT_CORRECT = "soft_correct"
    INCORRECT = "incorrect"
    DB_ERROR = "db_error"


def sql_exact_match(pred_sql: str, gold_sql: str) -> bool:
    """String equality after normalization (lowercase, whitespace, semicolon)."""
    if not pred_sql or not gold_sql:
        raise ValueError("both SQL strings must be nonempty")
    return normalize_sql(pred_sql) == normalize_sql(gold_sql)


# --- cell and row comparison -------------------------------------------------

_DECIMAL_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


def _as_number(cell: object) -> float | None:
    if isinstance(cell, bool):
        return float(cell)
    if isinstance(cell, (int, float)):
        return float(cell)
    if isinstance(cell, str) and _DECIMAL_RE.fullmatch(cell):
        return float(cell)
    return None


def cells_equal(a: object, b: object) -> bool:
    if a is None or b is None:
        return a is None and b is None
    na, nb = _as_number(a), _as_number(b)
    if na is not None and nb is not None:
        return abs(na - nb) <= NUMERIC_TOLERANCE * max(1.0, abs(na), abs(nb))
    return isinstance(a, str) and isinstance(b, str) and a == b


def rows_equal(a: Sequence, b: Sequence) -> bool:
    return len(a) == len(b) and all(cells_equal(x, y) for x, y in zip(a, b))


def _row_multiset_equal(rows_a: Sequence[tuple], rows_b: Sequence[tuple]) -> bool:
    if len(rows_a) != len(rows_b):
        return False
    if Counter(rows_a) == Counter(rows_b):
        return True
    remaining = list(rows_b)
    for ra in rows_a:
        for i, rb in enumerate(remaining):
            if rows_equal(ra, rb):
                remaining.pop(i)
                break
        else:
            return False
    return True


# --- soft-correct predicate ---------------------------------------------------


def _drop_id_columns(table: ResultTable) -> tuple[tuple[str, ...], list[tuple]]:
    id_cols = identifier_columns(table.columns)
    keep = [i for i, name in enumerate(table.columns) if name.lower() not in id_cols]
    columns = tuple(table.columns[i] for i in keep)
    rows = [tuple(row[i] for i in keep) for row in table.rows]
    return columns, rows


def _column_signature(rows: Sequence[tuple], index: int) -> tuple:
    # canonical per-column value-multiset fingerprint; numerics rendered so
    # int 1 and "1" collide, which the final multiset check then verifies
    sig = []
    for row in rows:
        cell = row[index]
        num = _as_number(cell)
        if cell is None:
            sig.append(("null", ""))
        elif num is not None:
            sig.append(("num", format(num, ".12g")))
        else:
            sig.append(("text", str(cell)))
    return tuple(sorted(sig))


def _permuted(rows: Sequence[tuple], perm: Sequence[int]) -> list[tuple]:
    return [tuple(row[j] for j in perm) for row in rows]


def _bijection_exists(rows_a: list[tuple], rows_b: list[tuple], width: int) -> bool:
    if width == 0:
        return len(rows_a) == len(rows_b)
    if width <= EXHAUSTIVE_COLUMN_LIMIT:
        return any(
            _row_multiset_equal(rows_a, _permuted(rows_b, perm))
            for perm in itertools.permutations(range(width))
        )
    # wide tables: columns can only map within equal-signature groups
    sig_a: dict[tuple, list[int]] = {}
    sig_b: dict[tuple, list[int]] = {}
    for j in range(width):
        sig_a.setdefault(_column_signature(rows_a, j), []).append(j)
        sig_b.setdefault(_column_signature(rows_b, j), []).append(j)
    if set(sig_a) != set(sig_b):
        return False
    if any(len(sig_a[s]) != len(sig_b[s]) for s in sig_a):
        return False
    groups = sorted(sig_a, key=lambda s: len(sig_a[s]))
    a_order = [j for s in groups for j in sig_a[s]]
    group_perms = [itertools.permutations(sig_b[s]) for s in groups]
    for combo in itertools.product(*group_perms):
        b_order = [j for chunk in combo for j in chunk]
        if _row_multiset_equal(_permuted(rows_a, a_order), _permuted(rows_b, b_order)):
            return True
    return False


def soft_correct(pred: ResultTable, gold: ResultTable) -> bool:
    """Row multisets agree under some column bijection, ignoring id columns."""
    cols_p, rows_p = _drop_id_columns(pred)
    cols_g, rows_g = _drop_id_columns(gold)
    if len(cols_p) != len(cols_g) or len(rows_p) != len(rows_g):
        return False
    return _bijection_exists(rows_p, rows_g, len(cols_p))


def compare_results(pred: ResultTable | ExecError, gold: ResultTable) -> ResultComparison:
    """Assign a prediction its comparison tier against the gold result."""
    if isinstance(pred, ExecError):
        return ResultComparison.DB_ERROR
    lower_p = tuple(n.lower() for n in pred.columns)
    lower_g = tuple(n.lower() for n in gold.columns)
    if (
        lower_p == lower_g
        and len(pred.rows) == len(gold.rows)
        and all(rows_equal(rp, rg) for rp, rg in zip(pred.rows, gold.rows))
    ):
        return ResultComparison.EXACT_MATCH
    if soft_correct(pred, gold):
        return ResultComparison.SOFT_CORRECT
    return ResultComparison.INCORRECT


# --- per-question scoring and aggregation ------------------------------------


def score_unanswerable(outcome: PipelineOutcome, item: QuestionItem) -> bool | None:
    """Detection flag for unanswerable items; None for answerable ones."""
    if item.is_answerable:
        return None
    return outcome.verdict.kind == VerdictKind.ABSTAINED


@dataclass(frozen=True)
class PerQuestionRecord:
    id: str
    label: str
    category: str | None
    verdict: str
    sql_exact_match: bool | None
    result_comparison: ResultComparison | None
    naq_detected: bool | None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "category": self.category,
            "verdict": self.verdict,
            "sql_exact_match": self.sql_exact_match,
            "result_comparison": self.result_comparison.value if self.result_comparison else None,
            "naq_detected": self.naq_detected,
        }


@dataclass(frozen=True)
class Aggregates:
    answerable_total: int
    unanswerable_total: int
    sql_exact_match_acc: float | None
    result_acc_exact: float | None
    result_acc_soft: float | None
    db_error_rate: float | None
    naq_detection_acc: float | None
    naq_detection_by_category: dict[str, float | None]
    false_abstention_rate_on_answerable: float | None

    def to_dict(self) -> dict:
        return {
            "answerable_total": self.answerable_total,
            "unanswerable_total": self.unanswerable_total,
            "sql_exact_match_acc": self.sql_exact_match_acc,
            "result_acc_exact": self.result_acc_exact,
            "result_acc_soft": self.result_acc_soft,
            "db_error_rate": self.db_error_rate,
            "naq_detection_acc": self.naq_detection_acc,
            "naq_detection_by_category": self.naq_detection_by_category,
            "false_abstention_rate_on_answerable": self.false_abstention_rate_on_answerable,
        }


@dataclass
class EvalReport:
    per_question: list[PerQuestionRecord]
    aggregates: Aggregates
    config: dict
    infra_failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": self.config,
            "aggregates": self.aggregates.to_dict(),
            "infra_failures": self.infra_failures,
            "per_question": [r.to_dict() for r in self.per_question],
        }


def _ratio(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def _gold_table(entry: GoldEntry) -> ResultTable:
    return ResultTable(columns=entry.columns, rows=entry.rows)


def evaluate_dataset(
    items: Sequence[QuestionItem],
    outcomes: Mapping[str, PipelineOutcome],
    gold_cache: GoldResultCache,
    config: dict | None = None,
    infra_failures: Mapping[str, str] | None = None,
) -> EvalReport:
    """Build the per-question records and aggregate accuracies.

    ``infra_failures`` maps item ids to run-level LLM failure messages; those
    items are listed in the report but excluded from every aggregate. Any item
    with neither an outcome nor a recorded failure raises MissingOutcome.
    """
    infra_failures = dict(infra_failures or {})
    records: list[PerQuestionRecord] = []
    scored_items: list[tuple[QuestionItem, PipelineOutcome]] = []
    for item in items:
        if item.id in infra_failures:
            continue
        outcome = outcomes.get(item.id)
        if outcome is None:
            raise MissingOutcome(f"no outcome and no infra failure recorded for '{item.id}'")
        scored_items.append((item, outcome))

    exact_sql = 0
    res_exact = 0
    res_soft = 0
    db_failed = 0
    sql_verdicts = 0
    false_abstentions = 0
    answerable_total = 0
    naq_total: Counter[str] = Counter()
    naq_detected: Counter[str] = Counter()

    for item, outcome in scored_items:
        verdict = outcome.verdict
        sql_match: bool | None = None
        comparison: ResultComparison | None = None
        detected: bool | None = None
        if item.is_answerable:
            answerable_total += 1
            assert item.gold_sql is not None
            if verdict.sql:
                sql_match = sql_exact_match(verdict.sql, item.gold_sql)
                exact_sql += int(sql_match)
            if verdict.kind in (VerdictKind.EXECUTED, VerdictKind.DB_FAILED):
                sql_verdicts += 1
                entry = gold_cache.get(item.id)
                if entry is None or entry.is_error:
                    # gold result unavailable; the item still counts in the
                    # denominators but cannot score as correct
                    comparison = (
                        ResultComparison.DB_ERROR
                        if verdict.kind == VerdictKind.DB_FAILED
                        else None
                    )
                elif verdict.kind == VerdictKind.DB_FAILED:
                    assert verdict.error is not None
                    comparison = compare_results(verdict.error, _gold_table(entry))
                else:
                    assert verdict.table is not None
                    comparison = compare_results(verdict.table, _gold_table(entry))
                if comparison == ResultComparison.DB_ERROR:
                    db_failed += 1
                elif comparison == ResultComparison.EXACT_MATCH:
                    res_exact += 1
                    res_soft += 1
                elif comparison == ResultComparison.SOFT_CORRECT:
                    res_soft += 1
            elif verdict.kind == VerdictKind.ABSTAINED:
                false_abstentions += 1
        else:
            assert item.category is not None
            detected = score_unanswerable(outcome, item)
            naq_total[item.category.value] += 1
            naq_detected[item.category.value] += int(bool(detected))
        records.append(
            PerQuestionRecord(
                id=item.id,
                label=item.label.value,
                category=item.category.value if item.category else None,
                verdict=verdict.kind,
                sql_exact_match=sql_match,
                result_comparison=comparison,
                naq_detected=detected,
            )
        )

    records.sort(key=lambda r: r.id)
    unanswerable_total = sum(naq_total.values())
    by_category: dict[str, float | None] = {
        cat.value: _ratio(naq_detected[cat.value], naq_total[cat.value])
        for cat in NaqCategory
    }
    aggregates = Aggregates(
        answerable_total=answerable_total,
        unanswerable_total=unanswerable_total,
        sql_exact_match_acc=_ratio(exact_sql, answerable_total),
        result_acc_exact=_ratio(res_exact, answerable_total),
        result_acc_soft=_ratio(res_soft, answerable_total),
        db_error_rate=_ratio(db_failed, sql_verdicts),
        naq_detection_acc=_ratio(sum(naq_detected.values()), unanswerable_total),
        naq_detection_by_category=by_category,
        false_abstention_rate_on_answerable=_ratio(false_abstentions, answerable_total),
    )
    failures = [
        {"id": qid, "error": message} for qid, message in sorted(infra_failures.items())
    ]
    return EvalReport(
        per_question=records,
        aggregates=aggregates,
        config=dict(config or {}),
        infra_failures=failures,
    )


# --- report output ------------------------------------------------------------

_CSV_FIELDS = [
    "id",
    "label",
    "category",
    "verdict",
    "sql_exact_match",
    "result_comparison",
    "naq_detected",
]


def _csv_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def report_csv_text(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_FIELDS)
    for record in report.per_question:
        doc = record.to_dict()
        writer.writerow([_csv_cell(doc[k]) for k in _CSV_FIELDS])
    return buf.getvalue()


def write_report(report: EvalReport, path: str | Path) -> Path:
    """Write ``<path>`` as JSON plus a per-question CSV next to it.

    Output is byte-stable: same report, same bytes.
    """
    json_path = Path(path)
    json_path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    csv_path = json_path.with_suffix(".csv")
    csv_path.write_text(report_csv_text(report), encoding="utf-8")
    return json_path


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
