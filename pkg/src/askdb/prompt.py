"""Prompt assembly: role instruction, no-answer rules, schema, few-shot blocks.

The system message carries the translator role, the no-answer rules (when
enabled), and the rendered schema. The user message carries retrieved example
blocks (answerable pool first, then unanswerable) and finally the question,
always ending with the literal ``[SQL]:`` completion cue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dataset import QuestionItem
from .errors import ValidationError
from .retriever import ExampleStore, Retriever
from .schema import SchemaModel, render_schema_prompt
from .sqltext import ABSTENTION_MARKER

ALLOWED_SHOTS = (0, 1, 3, 5)

ROLE_INSTRUCTION = (
    "You are an expert in natural language to SQL translation. Translate the "
    "user's question about the database described below into a single query. "
    "Return only the SQL query, with no explanation or commentary. The query "
    "must be syntactically correct PostgreSQL."
)

_NAR_TEXT = f"""No-Answer Rules:
Reply with exactly "{ABSTENTION_MARKER}" and nothing else when any of the following holds:
1. No SQL query over this database can answer the question (it asks for an explanation, opinion, or procedure rather than stored data).
2. The question asks for information that is not stored in any column of the schema, or for data values the database does not contain.
3. Answering would require knowledge from outside this database.
4. The question is ambiguous: it is unclear which column, which value, which comparison operator, or what context is intended."""

USER_QUESTION_HEADER = "# Return the SQL for the following Question"


def nar_rules_text() -> str:
    """The fixed no-answer rules block; byte-stable across calls."""
    return _NAR_TEXT


def format_example(item: QuestionItem) -> str:
    """``[Q]:``/``[SQL]:`` block for one few-shot example.

    Answerable items show their gold SQL; unanswerable items show the
    abstention marker as the expected response.
    """
    if item.is_answerable:
        if not item.gold_sql:
            raise ValidationError(f"answerable example '{item.id}' has no gold SQL")
        answer = item.gold_sql
    else:
        answer = ABSTENTION_MARKER
    return f"[Q]: {item.question}\n[SQL]: {answer}"


@dataclass(frozen=True)
class PromptConfig:
    shots: int = 0
    include_nar: bool = True
    include_answerable_examples: bool = False
    include_unanswerable_examples: bool = False

    def __post_init__(self) -> None:
        if self.shots not in ALLOWED_SHOTS:
            raise ValidationError(f"shots must be one of {ALLOWED_SHOTS}, got {self.shots}")

    def describe(self) -> dict:
        return {
            "shots": self.shots,
            "nar": self.include_nar,
            "answerable_examples": self.include_answerable_examples,
            "unanswerable_examples": self.include_unanswerable_examples,
        }


@dataclass(frozen=True)
class FewShotPools:
    answerable: ExampleStore | None = None
    unanswerable: ExampleStore | None = None


@dataclass(frozen=True)
class AssembledPrompt:
    system_text: str
    user_text: str
    example_ids_used: tuple[tuple[str, str], ...] = field(default_factory=tuple)


def build_prompt(
    question: str,
    schema: SchemaModel,
    config: PromptConfig,
    retriever: Retriever | None = None,
    pools: FewShotPools | None = None,
    exclude_id: str | None = None,
) -> AssembledPrompt:
    """Assemble the full prompt for one question.

    With ``shots > 0`` and example pools enabled, the most similar examples
    are retrieved per pool (answerable first), leaving out ``exclude_id`` so a
    dataset question never sees itself as an example.
    """
    system_parts = [ROLE_INSTRUCTION]
    if config.include_nar:
        system_parts.append(nar_rules_text())
    system_parts.append(render_schema_prompt(schema))
    system_text = "\n\n".join(system_parts)

    blocks: list[str] = []
    ids_used: list[tuple[str, str]] = []
    if config.shots > 0:
        for kind, enabled in (
            ("answerable", config.include_answerable_examples),
            ("unanswerable", config.include_unanswerable_examples),
        ):
            if not enabled:
                continue
            store = getattr(pools, kind, None) if pools else None
            if store is None or retriever is None:
                raise ValidationError(f"{kind} examples requested but no {kind} pool configured")
            for item in retriever.select(question, store, config.shots, exclude_id=exclude_id):
                blocks.append(format_example(item))
                ids_used.append((kind, item.id))

    blocks.append(f"{USER_QUESTION_HEADER}\n[Q]: {question}\n[SQL]:")
    return AssembledPrompt(
        system_text=system_text,
        user_text="\n\n".join(blocks),
        example_ids_used=tuple(ids_used),
    )
