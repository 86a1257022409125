"""Command-line interface: serve, ask, evaluate, build-cache, generate-naq."""

from __future__ import annotations

import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .config import AppConfig, build_context, load_app_config
from .dataset import (
    CATEGORY_NAMES,
    NaqCategory,
    build_gold_cache,
    generate_naq_candidates,
    load_gold_cache,
    load_questions,
    save_gold_cache,
)
from .errors import AskdbError
from .executor import open_database
from .harness import DEFAULT_SWEEP, EXAMPLES_CHOICES, REGIMES, evaluate as run_evaluate, regime_config, sweep as run_sweep
from .metrics import write_report
from .pipeline import PipelineOptions, VerdictKind, answer_question
from .schema import load_schema
from .service import save_transcript

_SHOT_CHOICES = ["0", "1", "3", "5"]


# precedence: CLI flag > environment > config file > defaults
_ENV_KEYS = {
    "llm": "ASKDB_LLM",
    "db": "ASKDB_DB",
    "schema_path": "ASKDB_SCHEMA",
    "embeddings": "ASKDB_EMBEDDINGS",
}


def _load_config(config_path: str | None, **overrides) -> AppConfig:
    cfg = load_app_config(config_path) if config_path else AppConfig()
    updates = {k: v for k, v in overrides.items() if v is not None}
    for key, env_name in _ENV_KEYS.items():
        if key not in updates and env_name in os.environ:
            updates[key] = os.environ[env_name]
    return replace(cfg, **updates) if updates else cfg


def _common_options(fn):
    fn = click.option("--schema", "schema_path", type=click.Path(exists=True), default=None,
                      help="Schema JSON file.")(fn)
    fn = click.option("--db", default=None,
                      help="Database: .sql dump, SQLite file, or postgresql:// DSN.")(fn)
    fn = click.option("--llm", default=None,
                      help="LLM provider: scripted:<path> or an HTTP chat endpoint URL.")(fn)
    fn = click.option("--embeddings", default=None,
                      help="Offline vector JSON file or an HTTP embeddings endpoint.")(fn)
    fn = click.option("--seed", "seed_path", type=click.Path(exists=True), default=None,
                      help="Answerable few-shot pool (seed split).")(fn)
    fn = click.option("--naq-pool", "naq_path", type=click.Path(exists=True), default=None,
                      help="Unanswerable few-shot pool (NAQ split).")(fn)
    return fn


def _regime_options(fn):
    fn = click.option("--nar/--no-nar", default=None, help="Include the no-answer rules block.")(fn)
    fn = click.option("--shots", type=click.Choice(_SHOT_CHOICES), default=None)(fn)
    fn = click.option("--examples", type=click.Choice(sorted(EXAMPLES_CHOICES)), default=None)(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Natural-language questions over a relational database, with refusal
    of unanswerable ones."""


@main.command()
@click.argument("question")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@_common_options
@_regime_options
@click.option("--model", default=None, help="Model name sent to the provider.")
@click.option("--no-correction", is_flag=True, help="Disable the error-correction loop.")
@click.option("--ui-mode", is_flag=True, help="Also request a short answer / abstention explanation.")
def ask(question, config_path, schema_path, db, llm, embeddings, seed_path, naq_path,
        nar, shots, examples, model, no_correction, ui_mode) -> None:
    """Answer one question and print the verdict, SQL, and result preview."""
    cfg = _load_config(config_path, schema_path=schema_path, db=db, llm=llm,
                       embeddings=embeddings, seed_path=seed_path, naq_path=naq_path)
    ctx = build_context(cfg)
    prompt_config = ctx.prompt_config(nar=nar, shots=int(shots) if shots else None, examples=examples)
    outcome = answer_question(
        question, ctx.schema, prompt_config, ctx.llm, ctx.retriever, ctx.pools, ctx.executor,
        PipelineOptions(correction_loop=not no_correction, ui_mode=ui_mode, model=model),
    )
    transcript_id = save_transcript(outcome, Path(cfg.transcripts_dir))
    verdict = outcome.verdict
    click.echo(f"verdict: {verdict.kind}")
    if verdict.sql:
        click.echo(f"sql: {verdict.sql}")
    if verdict.kind == VerdictKind.EXECUTED and verdict.table is not None:
        table = verdict.table
        click.echo(" | ".join(table.columns))
        for row in table.rows[:10]:
            click.echo(" | ".join("" if c is None else str(c) for c in row))
        if len(table.rows) > 10 or table.truncated:
            click.echo(f"... ({len(table.rows)} rows total{', truncated' if table.truncated else ''})")
        if outcome.short_answer:
            click.echo(f"answer: {outcome.short_answer}")
    if verdict.kind == VerdictKind.ABSTAINED and outcome.explanation:
        click.echo(f"explanation: {outcome.explanation}")
    if verdict.kind == VerdictKind.DB_FAILED and verdict.error is not None:
        click.echo(f"error: {verdict.error.message}", err=True)
    click.echo(f"transcript: {Path(cfg.transcripts_dir) / (transcript_id + '.json')}")


@main.command()
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True,
              help="Answerable question/SQL pairs (dev split).")
@click.option("--naq", "naq_dataset_path", type=click.Path(exists=True), default=None,
              help="Unanswerable questions to evaluate.")
@click.option("--config", "config_spec", default=None,
              help=f"Regime preset ({', '.join(sorted(REGIMES))}) or a config file path.")
@_common_options
@_regime_options
@click.option("--gold-cache", "gold_cache_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--no-correction", is_flag=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--sweep", "sweep_flag", is_flag=True, help="Run the full regime grid (live mode).")
def evaluate(dataset_path, naq_dataset_path, config_spec, schema_path, db, llm, embeddings,
             seed_path, naq_path, nar, shots, examples, gold_cache_path, out_path,
             no_correction, workers, sweep_flag) -> None:
    """Score the pipeline over a dataset and write the JSON + CSV report."""
    config_file = None
    regime = None
    if config_spec:
        if Path(config_spec).exists():
            config_file = config_spec
        elif config_spec in REGIMES:
            regime = config_spec
        else:
            raise click.BadParameter(
                f"--config must be a file or one of {sorted(REGIMES)}", param_hint="--config"
            )
    cfg = _load_config(config_file, schema_path=schema_path, db=db, llm=llm,
                       embeddings=embeddings, seed_path=seed_path, naq_path=naq_path)
    ctx = build_context(cfg)
    items = load_questions(dataset_path)
    if naq_dataset_path:
        items = items + load_questions(naq_dataset_path)
    seen = set()
    for item in items:
        if item.id in seen:
            raise click.ClickException(f"duplicate question id across splits: '{item.id}'")
        seen.add(item.id)
    gold_cache = load_gold_cache(gold_cache_path) if gold_cache_path else None

    if sweep_flag:
        doc = run_sweep(
            items, ctx.schema, ctx.llm, ctx.executor,
            retriever=ctx.retriever, pools=ctx.pools, gold_cache=gold_cache,
            grid=DEFAULT_SWEEP, correction_loop=not no_correction, workers=workers,
        )
        Path(out_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        click.echo(f"sweep report written to {out_path} ({len(doc['runs'])} regimes)")
        return

    if regime:
        prompt_config = regime_config(regime, int(shots) if shots else 0)
    else:
        prompt_config = ctx.prompt_config(nar=nar, shots=int(shots) if shots else None, examples=examples)
    report = run_evaluate(
        items, ctx.schema, prompt_config, ctx.llm, ctx.executor,
        retriever=ctx.retriever, pools=ctx.pools, gold_cache=gold_cache,
        correction_loop=not no_correction, workers=workers,
    )
    write_report(report, out_path)
    agg = report.aggregates

    def fmt(value):
        return "n/a" if value is None else f"{value:.4f}"

    click.echo(f"report written to {out_path} (+ .csv)")
    click.echo(f"answerable: {agg.answerable_total}  unanswerable: {agg.unanswerable_total}")
    click.echo(f"sql_exact_match_acc: {fmt(agg.sql_exact_match_acc)}")
    click.echo(f"result_acc_exact:    {fmt(agg.result_acc_exact)}")
    click.echo(f"result_acc_soft:     {fmt(agg.result_acc_soft)}")
    click.echo(f"db_error_rate:       {fmt(agg.db_error_rate)}")
    click.echo(f"naq_detection_acc:   {fmt(agg.naq_detection_acc)}")
    click.echo(f"false_abstention:    {fmt(agg.false_abstention_rate_on_answerable)}")
    if report.infra_failures:
        click.echo(f"infra_failures: {len(report.infra_failures)}", err=True)


@main.command("build-cache")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--db", required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def build_cache(dataset_path, db, out_path) -> None:
    """Execute every gold query and cache the canonical results."""
    items = load_questions(dataset_path)
    executor = open_database(db)
    cache = build_gold_cache(items, executor)
    save_gold_cache(cache, out_path)
    errors = sum(1 for entry in cache.values() if entry.is_error)
    click.echo(f"cached {len(cache)} gold results to {out_path} ({errors} gold errors)")


@main.command("generate-naq")
@click.option("--schema", "schema_path", type=click.Path(exists=True), required=True)
@click.option("--category", type=click.Choice(CATEGORY_NAMES), required=True)
@click.option("--n", type=int, default=5, show_default=True)
@click.option("--llm", required=True, help="scripted:<path> or an HTTP chat endpoint URL.")
@click.option("--review", is_flag=True, help="Print candidates numbered for human review.")
def generate_naq(schema_path, category, n, llm, review) -> None:
    """Draft no-answer question candidates (they require human curation)."""
    from .llm import make_client

    schema = load_schema(schema_path)
    client = make_client(llm)
    candidates = generate_naq_candidates(schema, NaqCategory(category), n, client)
    if review:
        click.echo(f"# {category}: {len(candidates)} candidates -- requires human curation")
        for i, cand in enumerate(candidates, 1):
            click.echo(f"{i}. {cand}")
    else:
        click.echo(json.dumps({"category": category, "requires_human_curation": True,
                               "candidates": candidates}, indent=2, ensure_ascii=False))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@_common_options
def serve(config_path, host, port, schema_path, db, llm, embeddings, seed_path, naq_path) -> None:
    """Run the HTTP API (and the web console when static_dir is configured)."""
    import uvicorn

    from .service import create_app

    cfg = _load_config(config_path, schema_path=schema_path, db=db, llm=llm,
                       embeddings=embeddings, seed_path=seed_path, naq_path=naq_path)
    app = create_app(build_context(cfg))
    uvicorn.run(app, host=host, port=port)


def entrypoint() -> None:
    try:
        main(standalone_mode=True)
    except AskdbError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
