"""The question-answering state machine.

One question flows through: prompt -> LLM -> classify -> (single re-prompt if
the output is unusable) -> execute -> (up to three error-correction retries)
-> verdict. UI mode adds enrichment calls (result summary or abstention
explanation) that are flagged in the transcript and excluded from metrics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .dataset import QuestionItem
from .errors import LlmError
from .executor import ExecError, ResultTable, SqlExecutor
from .llm import ChatRequest, LlmClient
from .prompt import FewShotPools, PromptConfig, build_prompt
from .retriever import Retriever
from .schema import SchemaModel, render_schema_prompt
from .sqltext import OutputKind, classify_output

REPROMPT_MESSAGE = (
    "Please return a SQL query or 'unanswerable question' if the question "
    "cannot be answered with an SQL query on the database."
)

CORRECTION_TEMPLATE = "Please correct the SQL query based on the following error message: {error}"

MAX_CORRECTIONS = 3
SUMMARY_ROW_CAP = 20


class VerdictKind:
    EXECUTED = "executed"
    ABSTAINED = "abstained"
    DB_FAILED = "db_failed"
    UNUSABLE = "unusable"


@dataclass(frozen=True)
class Verdict:
    kind: str
    sql: str | None = None
    table: ResultTable | None = None
    error: ExecError | None = None
    raw_output: str | None = None


@dataclass(frozen=True)
class TranscriptEntry:
    request: ChatRequest
    response_text: str
    enrichment: bool = False

    def to_dict(self) -> dict:
        return {
            "model": self.request.model,
            "system": self.request.system,
            "user_turns": list(self.request.user_turns),
            "assistant_turns": list(self.request.assistant_turns),
            "response": self.response_text,
            "enrichment": self.enrichment,
        }


@dataclass
class PipelineOutcome:
    question_id: str
    question: str
    config: PromptConfig
    verdict: Verdict
    transcript: list[TranscriptEntry] = field(default_factory=list)
    reprompts_used: int = 0
    corrections_used: int = 0
    example_ids_used: tuple[tuple[str, str], ...] = ()
    short_answer: str | None = None
    explanation: str | None = None
    enrichment_error: str | None = None

    @property
    def llm_calls(self) -> int:
        return len(self.transcript)


@dataclass(frozen=True)
class PipelineOptions:
    correction_loop: bool = True
    ui_mode: bool = False
    model: str | None = None


def _question_id(question: QuestionItem | str) -> tuple[str, str, str | None]:
    if isinstance(question, QuestionItem):
        return question.id, question.question, question.id
    digest = hashlib.sha256(question.encode("utf-8")).hexdigest()[:12]
    return f"adhoc-{digest}", question, None


def answer_question(
    question: QuestionItem | str,
    schema: SchemaModel,
    config: PromptConfig,
    llm: LlmClient,
    retriever: Retriever | None = None,
    pools: FewShotPools | None = None,
    executor: SqlExecutor | None = None,
    options: PipelineOptions = PipelineOptions(),
) -> PipelineOutcome:
    """Run one question through the full state machine.

    LLM transport errors propagate as run-level failures; every semantic path
    ends in exactly one verdict. Without UI mode the call budget is at most
    five: one initial call, one re-prompt, three corrections.
    """
    qid, text, exclude_id = _question_id(question)
    assembled = build_prompt(text, schema, config, retriever, pools, exclude_id=exclude_id)
    outcome = PipelineOutcome(
        question_id=qid,
        question=text,
        config=config,
        verdict=Verdict(kind=VerdictKind.UNUSABLE),
        example_ids_used=assembled.example_ids_used,
    )
    model = options.model or llm.default_model

    request = ChatRequest(
        model=model, system=assembled.system_text, user_turns=[assembled.user_text]
    )
    response = llm.complete(request)
    outcome.transcript.append(TranscriptEntry(request, response.text))
    classified = classify_output(response.text)

    if classified.kind is OutputKind.UNUSABLE:
        request = request.extended(response.text, REPROMPT_MESSAGE)
        response = llm.complete(request)
        outcome.transcript.append(TranscriptEntry(request, response.text))
        outcome.reprompts_used = 1
        classified = classify_output(response.text)
        if classified.kind is OutputKind.UNUSABLE:
            outcome.verdict = Verdict(kind=VerdictKind.UNUSABLE, raw_output=response.text)
            _enrich(outcome, schema, llm, model, options)
            return outcome

    if classified.kind is OutputKind.ABSTENTION:
        outcome.verdict = Verdict(kind=VerdictKind.ABSTAINED, raw_output=response.text)
        _enrich(outcome, schema, llm, model, options)
        return outcome

    if executor is None:
        raise ValueError("executor required to run SQL verdicts")

    max_corrections = MAX_CORRECTIONS if options.correction_loop else 0
    sql = classified.sql
    assert sql is not None
    while True:
        result = executor.execute_sql(sql)
        if isinstance(result, ResultTable):
            outcome.verdict = Verdict(kind=VerdictKind.EXECUTED, sql=sql, table=result)
            break
        if outcome.corrections_used >= max_corrections:
            outcome.verdict = Verdict(kind=VerdictKind.DB_FAILED, sql=sql, error=result)
            break
        outcome.corrections_used += 1
        request = request.extended(response.text, CORRECTION_TEMPLATE.format(error=result.message))
        response = llm.complete(request)
        outcome.transcript.append(TranscriptEntry(request, response.text))
        classified = classify_output(response.text)
        if classified.kind is OutputKind.ABSTENTION:
            outcome.verdict = Verdict(kind=VerdictKind.ABSTAINED, raw_output=response.text)
            break
        if classified.kind is OutputKind.UNUSABLE:
            # a correction that produced neither SQL nor an abstention ends the loop
            outcome.verdict = Verdict(kind=VerdictKind.DB_FAILED, sql=sql, error=result)
            break
        sql = classified.sql
        assert sql is not None

    _enrich(outcome, schema, llm, model, options)
    return outcome


def _enrich(
    outcome: PipelineOutcome,
    schema: SchemaModel,
    llm: LlmClient,
    model: str,
    options: PipelineOptions,
) -> None:
    """UI-mode-only enrichment; degradation on LLM failure, never a new verdict."""
    if not options.ui_mode:
        return
    try:
        if outcome.verdict.kind == VerdictKind.ABSTAINED:
            outcome.explanation = explain_abstention(
                outcome.question,
                outcome.verdict.raw_output or "",
                llm,
                schema,
                model=model,
                transcript=outcome.transcript,
            )
        elif outcome.verdict.kind == VerdictKind.EXECUTED:
            assert outcome.verdict.table is not None
            outcome.short_answer = summarize_result(
                outcome.question,
                outcome.verdict.table,
                llm,
                model=model,
                transcript=outcome.transcript,
            )
    except LlmError as exc:
        outcome.enrichment_error = str(exc)


def explain_abstention(
    question: str,
    raw_output: str,
    llm: LlmClient,
    schema: SchemaModel | None = None,
    model: str | None = None,
    transcript: list[TranscriptEntry] | None = None,
) -> str:
    """One extra LLM call: why is this question unanswerable, and how to rephrase."""
    system = "You explain the limits of a relational database to non-technical users."
    if schema is not None:
        system += "\n\nThe database schema:\n\n" + render_schema_prompt(schema)
    user = (
        f"The following question was judged not answerable with a SQL query on "
        f"this database:\n[Q]: {question}\n"
    )
    if raw_output.strip():
        user += f"The system's raw reply was: {raw_output.strip()}\n"
    user += (
        "Explain briefly why the question cannot be answered here, and suggest "
        "how the user could rephrase or narrow it so that it becomes answerable."
    )
    request = ChatRequest(model=model or llm.default_model, system=system, user_turns=[user])
    response = llm.complete(request)
    if transcript is not None:
        transcript.append(TranscriptEntry(request, response.text, enrichment=True))
    return response.text


def summarize_result(
    question: str,
    table: ResultTable,
    llm: LlmClient,
    model: str | None = None,
    transcript: list[TranscriptEntry] | None = None,
) -> str:
    """One extra LLM call producing a short natural-language answer."""
    preview_rows = table.rows[:SUMMARY_ROW_CAP]
    lines = [", ".join(table.columns)]
    lines += [", ".join("" if c is None else str(c) for c in row) for row in preview_rows]
    preview = "\n".join(lines)
    user = (
        f"Question: {question}\n\n"
        f"Query result ({len(preview_rows)} of {len(table.rows)} rows shown):\n"
        f"{preview}\n\n"
        "Answer the question in one or two short sentences using only these rows."
    )
    request = ChatRequest(
        model=model or llm.default_model,
        system="You summarize SQL query results as short answers.",
        user_turns=[user],
    )
    response = llm.complete(request)
    if transcript is not None:
        transcript.append(TranscriptEntry(request, response.text, enrichment=True))
    return response.text
