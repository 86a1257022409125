"""HTTP API for the web console.

Endpoints: ``POST /api/ask``, ``GET /api/models``, ``GET /api/health``,
``GET /api/transcripts/{id}``. Each ask runs the full pipeline in UI mode and
returns the verdict, a result preview, the stage list, and a transcript id;
the transcript file on disk holds every prompt and response verbatim.
"""

from __future__ import annotations

import json
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__
from .config import AppContext
from .errors import AskdbError, LlmError, ValidationError
from .harness import regime_label
from .llm import DEFAULT_MODEL
from .pipeline import PipelineOptions, PipelineOutcome, VerdictKind, answer_question

PREVIEW_ROW_CAP = 200

VERDICT_TO_API = {
    VerdictKind.EXECUTED: "sql",
    VerdictKind.ABSTAINED: "abstained",
    VerdictKind.DB_FAILED: "db_failed",
    VerdictKind.UNUSABLE: "unusable",
}

GENERIC_ABSTENTION_NOTICE = (
    "The system judged this question unanswerable for this database; "
    "no further explanation is available."
)


class AskConfig(BaseModel):
    nar: bool | None = None
    shots: int | None = None
    examples: str | None = None


class AskRequest(BaseModel):
    question: str
    model: str | None = None
    config: AskConfig | None = None


class Stage(BaseModel):
    name: str
    status: str
    detail: str


class AskResponse(BaseModel):
    verdict: str
    sql: str | None = None
    columns: list[str] | None = None
    rows: list[list] | None = None
    truncated: bool | None = None
    short_answer: str | None = None
    explanation: str | None = None
    stages: list[Stage]
    transcript_id: str


def list_models(configured: list[str]) -> list[str]:
    """Configured model names; the first entry is the default."""
    return list(configured) if configured else [DEFAULT_MODEL]


def build_stages(outcome: PipelineOutcome) -> list[Stage]:
    """Reconstruct the pipeline's chronology as a stage list.

    One ``llm-called`` stage per transcript entry, so the stage list always
    reconstructs the call count.
    """
    stages = [Stage(name="prompt-built", status="ok", detail=regime_label(outcome.config))]
    call = 1
    stages.append(Stage(name="llm-called", status="ok", detail=f"call {call}"))
    if outcome.reprompts_used:
        call += 1
        stages.append(Stage(name="llm-called", status="ok", detail=f"call {call} (re-prompt)"))
    for _ in range(outcome.corrections_used):
        stages.append(Stage(name="corrected", status="error", detail="execution failed; correction sent"))
        call += 1
        stages.append(Stage(name="llm-called", status="ok", detail=f"call {call} (correction)"))
    verdict = outcome.verdict
    if verdict.kind == VerdictKind.EXECUTED:
        assert verdict.table is not None
        stages.append(Stage(name="executed", status="ok", detail=f"{len(verdict.table.rows)} rows"))
    elif verdict.kind == VerdictKind.DB_FAILED:
        assert verdict.error is not None
        stages.append(Stage(name="executed", status="error", detail=verdict.error.message))
    for entry in outcome.transcript:
        if entry.enrichment:
            call += 1
            stages.append(Stage(name="llm-called", status="ok", detail=f"call {call} (enrichment)"))
    stages.append(Stage(name="verdict", status="ok", detail=VERDICT_TO_API[verdict.kind]))
    return stages


def outcome_to_response(outcome: PipelineOutcome, transcript_id: str) -> AskResponse:
    verdict = outcome.verdict
    response = AskResponse(
        verdict=VERDICT_TO_API[verdict.kind],
        stages=build_stages(outcome),
        transcript_id=transcript_id,
    )
    if verdict.kind == VerdictKind.EXECUTED:
        assert verdict.table is not None
        response.sql = verdict.sql
        response.columns = list(verdict.table.columns)
        response.rows = [list(r) for r in verdict.table.rows[:PREVIEW_ROW_CAP]]
        response.truncated = verdict.table.truncated or len(verdict.table.rows) > PREVIEW_ROW_CAP
        response.short_answer = outcome.short_answer
    elif verdict.kind == VerdictKind.ABSTAINED:
        response.explanation = outcome.explanation or GENERIC_ABSTENTION_NOTICE
    elif verdict.kind == VerdictKind.DB_FAILED:
        response.sql = verdict.sql
    return response


def save_transcript(outcome: PipelineOutcome, transcripts_dir: Path) -> str:
    """Persist the full run: prompts/responses verbatim plus the uncapped result."""
    transcripts_dir.mkdir(parents=True, exist_ok=True)
    transcript_id = uuid.uuid4().hex
    verdict = outcome.verdict
    doc = {
        "id": transcript_id,
        "question_id": outcome.question_id,
        "question": outcome.question,
        "config": outcome.config.describe(),
        "verdict": verdict.kind,
        "sql": verdict.sql,
        "result": verdict.table.to_dict() if verdict.table is not None else None,
        "error": verdict.error.message if verdict.error is not None else None,
        "short_answer": outcome.short_answer,
        "explanation": outcome.explanation,
        "reprompts_used": outcome.reprompts_used,
        "corrections_used": outcome.corrections_used,
        "example_ids_used": [list(pair) for pair in outcome.example_ids_used],
        "entries": [entry.to_dict() for entry in outcome.transcript],
    }
    (transcripts_dir / f"{transcript_id}.json").write_text(
        json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return transcript_id


def create_app(ctx: AppContext) -> FastAPI:
    app = FastAPI(title="askdb", version=__version__)
    transcripts_dir = Path(ctx.config.transcripts_dir)

    @app.post("/api/ask", response_model=AskResponse)
    def ask(request: AskRequest) -> AskResponse:
        if not request.question.strip():
            raise HTTPException(status_code=400, detail={"stage": "validate", "error": "empty question"})
        models = list_models(ctx.config.models)
        model = request.model or models[0]
        if model not in models:
            raise HTTPException(
                status_code=400,
                detail={"stage": "validate", "error": f"unknown model '{model}'"},
            )
        cfg = request.config or AskConfig()
        try:
            prompt_config = ctx.prompt_config(nar=cfg.nar, shots=cfg.shots, examples=cfg.examples)
            outcome = answer_question(
                request.question,
                ctx.schema,
                prompt_config,
                ctx.llm,
                ctx.retriever,
                ctx.pools,
                ctx.executor,
                PipelineOptions(correction_loop=ctx.config.correction_loop, ui_mode=True, model=model),
            )
        except LlmError as exc:
            raise HTTPException(
                status_code=502, detail={"stage": "llm-called", "error": str(exc)}
            ) from exc
        except (ValidationError, AskdbError) as exc:
            raise HTTPException(
                status_code=500, detail={"stage": "pipeline", "error": str(exc)}
            ) from exc
        transcript_id = save_transcript(outcome, transcripts_dir)
        return outcome_to_response(outcome, transcript_id)

    @app.get("/api/models")
    def models() -> dict:
        names = list_models(ctx.config.models)
        return {"models": names, "default": names[0]}

    @app.get("/api/health")
    def health() -> dict:
        db_ok = ctx.executor.ping()
        llm_ok = ctx.llm.ping()
        return {
            "db": "ok" if db_ok else "fail",
            "llm": "ok" if llm_ok else "fail",
            "version": __version__,
        }

    @app.get("/api/transcripts/{transcript_id}")
    def transcript(transcript_id: str) -> dict:
        if not transcript_id.isalnum():
            raise HTTPException(status_code=400, detail="invalid transcript id")
        path = transcripts_dir / f"{transcript_id}.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="transcript not found")
        return json.loads(path.read_text(encoding="utf-8"))

    static_dir = ctx.config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")
    return app
