"""Question datasets: answerable question/SQL pairs and no-answer questions.

Three splits are used: ``dev`` (evaluation pairs), ``seed`` (few-shot pool),
and ``naq`` (unanswerable questions in eight categories). The module also
builds the gold execution-result cache and can draft new no-answer question
candidates with an LLM for human curation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

from . import schema as schema_mod
from .errors import EmptyGeneration, ParseError, ValidationError

if TYPE_CHECKING:
    from .executor import SqlExecutor
    from .llm import LlmClient


class NaqCategory(str, Enum):
    """The eight no-answer question categories. Serialized names are stable."""

    NON_SQL = "NonSql"
    COLUMNS_MISSING = "ColumnsMissing"
    VALUES_MISSING = "ValuesMissing"
    OUT_OF_DOMAIN = "OutOfDomain"
    COLUMN_AMBIGUOUS = "ColumnAmbiguous"
    VALUE_AMBIGUOUS = "ValueAmbiguous"
    CONTEXTUAL_AMBIGUOUS = "ContextualAmbiguous"
    OPERATOR_AMBIGUOUS = "OperatorAmbiguous"


CATEGORY_NAMES = [c.value for c in NaqCategory]


class Label(str, Enum):
    ANSWERABLE = "answerable"
    UNANSWERABLE = "unanswerable"


@dataclass(frozen=True)
class QuestionItem:
    id: str
    question: str
    label: Label
    gold_sql: str | None = None
    category: NaqCategory | None = None

    @property
    def is_answerable(self) -> bool:
        return self.label is Label.ANSWERABLE

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("question item with empty id")
        if not self.question:
            raise ValidationError(f"item '{self.id}' has an empty question")
        if self.label is Label.ANSWERABLE:
            if not self.gold_sql:
                raise ValidationError(f"answerable item '{self.id}' is missing gold_sql")
            if self.category is not None:
                raise ValidationError(f"answerable item '{self.id}' must not set a category")
        else:
            if self.category is None:
                raise ValidationError(f"unanswerable item '{self.id}' is missing a category")
            if self.gold_sql is not None:
                raise ValidationError(f"unanswerable item '{self.id}' must not set gold_sql")


def _item_from_dict(doc: dict) -> QuestionItem:
    try:
        label_raw = doc["label"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed dataset item: {exc}") from exc
    try:
        label = Label(label_raw)
    except ValueError:
        raise ValidationError(
            f"item '{doc.get('id')}': unknown label '{label_raw}' "
            f"(expected 'answerable' or 'unanswerable')"
        ) from None
    category = None
    if doc.get("category") is not None:
        try:
            category = NaqCategory(doc["category"])
        except ValueError:
            raise ValidationError(
                f"item '{doc.get('id')}': unknown category '{doc['category']}'; "
                f"legal names: {', '.join(CATEGORY_NAMES)}"
            ) from None
    try:
        return QuestionItem(
            id=doc["id"],
            question=doc["question"],
            label=label,
            gold_sql=doc.get("gold_sql"),
            category=category,
        )
    except KeyError as exc:
        raise ParseError(f"malformed dataset item: missing {exc}") from exc


def load_questions(path: str | Path) -> list[QuestionItem]:
    """Load a dataset JSON file; ids must be unique and every invariant holds."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        docs = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(docs, list):
        raise ParseError(f"{path}: dataset must be a JSON array")
    items = [_item_from_dict(d) for d in docs]
    seen: set[str] = set()
    for item in items:
        if item.id in seen:
            raise ValidationError(f"duplicate question id '{item.id}'")
        seen.add(item.id)
    return items


def dump_questions(items: Sequence[QuestionItem]) -> list[dict]:
    """Serialize items back into the dataset JSON form (round-trips with load)."""
    return [
        {
            "id": it.id,
            "question": it.question,
            "label": it.label.value,
            "gold_sql": it.gold_sql,
            "category": it.category.value if it.category else None,
        }
        for it in items
    ]


def save_questions(items: Sequence[QuestionItem], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(dump_questions(items), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


# --- gold result cache -----------------------------------------------------


@dataclass(frozen=True)
class GoldEntry:
    """Cached gold execution result: a canonical table or a recorded error."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    error: str | None = None

    @property
    def is_error(self) -> bool:
        return self.error is not None


GoldResultCache = dict[str, GoldEntry]


def build_gold_cache(items: Sequence[QuestionItem], executor: "SqlExecutor") -> GoldResultCache:
    """Execute every answerable item's gold SQL and cache the canonical result.

    Unanswerable items are skipped. A gold query that fails to execute is
    recorded as an error entry rather than aborting the build.
    """
    from .executor import ExecError

    cache: GoldResultCache = {}
    for item in items:
        if not item.is_answerable:
            continue
        assert item.gold_sql is not None
        result = executor.execute_sql(item.gold_sql)
        if isinstance(result, ExecError):
            cache[item.id] = GoldEntry(columns=(), rows=(), error=result.message)
        else:
            cache[item.id] = GoldEntry(
                columns=tuple(result.columns),
                rows=tuple(tuple(r) for r in result.rows),
            )
    return cache


def save_gold_cache(cache: GoldResultCache, path: str | Path) -> None:
    """Write the cache as JSON ordered by question id (byte-stable)."""
    doc = {
        qid: {
            "columns": list(entry.columns),
            "rows": [list(r) for r in entry.rows],
            "error": entry.error,
        }
        for qid, entry in sorted(cache.items())
    }
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_gold_cache(path: str | Path) -> GoldResultCache:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    cache: GoldResultCache = {}
    for qid, entry in doc.items():
        cache[qid] = GoldEntry(
            columns=tuple(entry["columns"]),
            rows=tuple(tuple(r) for r in entry["rows"]),
            error=entry.get("error"),
        )
    return cache


# --- no-answer question candidate generation --------------------------------

GENERATION_PROMPT_VERSION = 1

# One authored generation prompt per category. Wording is ours; the category
# set itself is fixed.
CATEGORY_DEFINITIONS: dict[NaqCategory, str] = {
    NaqCategory.NON_SQL: (
        "a realistic domain question that no SQL query could answer, because it "
        "calls for an explanation, opinion, or procedure rather than stored data"
    ),
    NaqCategory.COLUMNS_MISSING: (
        "a question that asks for information no column in the schema stores"
    ),
    NaqCategory.VALUES_MISSING: (
        "a question that depends on specific data values the database does not "
        "contain, even though suitable columns exist"
    ),
    NaqCategory.OUT_OF_DOMAIN: (
        "a question that needs knowledge from outside the database and its domain"
    ),
    NaqCategory.COLUMN_AMBIGUOUS: (
        "a question where several different columns could plausibly satisfy the request"
    ),
    NaqCategory.VALUE_AMBIGUOUS: (
        "a question that mentions a value or term that could refer to several "
        "different entities or meanings in the database"
    ),
    NaqCategory.CONTEXTUAL_AMBIGUOUS: (
        "a question whose intended meaning depends on context the question itself "
        "does not provide"
    ),
    NaqCategory.OPERATOR_AMBIGUOUS: (
        "a question that implies a comparison or condition without making clear "
        "which operator or threshold is meant"
    ),
}


def generation_prompt(schema: "schema_mod.SchemaModel", category: NaqCategory, n: int) -> str:
    rendered = schema_mod.render_schema_prompt(schema)
    return (
        f"Below is the schema of the '{schema.database_name}' database.\n\n"
        f"{rendered}\n\n"
        f"Write {n} distinct natural-language questions a user might plausibly ask "
        f"about this database, where each question is {CATEGORY_DEFINITIONS[category]}. "
        f"Return one question per line, with no numbering and no commentary."
    )


def _parse_candidate_lines(text: str) -> list[str]:
    candidates: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        # tolerate "1.", "1)", "-", "*" prefixes the model may add anyway
        while line[:1] in {"-", "*"}:
            line = line[1:].strip()
        if line and line[0].isdigit():
            head, _, rest = line.partition(" ")
            if head.rstrip(".)").isdigit():
                line = rest.strip()
        if line:
            candidates.append(line)
    return candidates


def generate_naq_candidates(
    schema: "schema_mod.SchemaModel",
    category: NaqCategory,
    n: int,
    llm_client: "LlmClient",
) -> list[str]:
    """Draft up to ``n`` candidate no-answer questions for one category.

    Candidates are drafts only and require human curation before entering a
    dataset. Case-insensitive exact duplicates are removed.
    """
    from .llm import ChatRequest

    if n < 1:
        raise ValueError("n must be >= 1")
    request = ChatRequest(
        model=llm_client.default_model,
        system="You help build evaluation datasets for natural-language database interfaces.",
        user_turns=[generation_prompt(schema, category, n)],
    )
    response = llm_client.complete(request)
    candidates: list[str] = []
    seen: set[str] = set()
    for cand in _parse_candidate_lines(response.text):
        key = cand.lower()
        if key not in seen:
            seen.add(key)
            candidates.append(cand)
        if len(candidates) == n:
            break
    if not candidates:
        raise EmptyGeneration(f"model returned no usable candidates for {category.value}")
    return candidates
