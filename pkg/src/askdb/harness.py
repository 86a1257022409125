"""Evaluation harness: run datasets through the pipeline and score them.

Items run in dataset order so scripted-provider queues line up with
questions; reports themselves are sorted by question id. Per-item LLM
transport failures are recorded as infra failures and excluded from
aggregates instead of aborting the run.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from .dataset import GoldResultCache, QuestionItem, build_gold_cache
from .errors import ConfigError, LlmError
from .executor import SqlExecutor
from .llm import LlmClient
from .metrics import EvalReport, evaluate_dataset
from .pipeline import PipelineOptions, PipelineOutcome, answer_question
from .prompt import FewShotPools, PromptConfig
from .retriever import Retriever
from .schema import SchemaModel

logger = logging.getLogger(__name__)

# Named prompt regimes: no-answer rules on/off crossed with example pools.
REGIMES = {
    "plain": dict(include_nar=False, include_answerable_examples=False, include_unanswerable_examples=False),
    "nar": dict(include_nar=True, include_answerable_examples=False, include_unanswerable_examples=False),
    "nar+aq": dict(include_nar=True, include_answerable_examples=True, include_unanswerable_examples=False),
    "nar+naq": dict(include_nar=True, include_answerable_examples=False, include_unanswerable_examples=True),
    "nar+both": dict(include_nar=True, include_answerable_examples=True, include_unanswerable_examples=True),
}

# The grid a full sweep covers: rules-only baseline, then each pool mix at
# every shot count. "Both pools at k shots" means k examples from each pool.
DEFAULT_SWEEP = [("nar", 0)] + [
    (regime, shots)
    for regime in ("nar+aq", "nar+naq", "nar+both")
    for shots in (1, 3, 5)
]

EXAMPLES_CHOICES = {
    "none": (False, False),
    "aq": (True, False),
    "naq": (False, True),
    "both": (True, True),
}


def regime_config(name: str, shots: int = 0) -> PromptConfig:
    if name not in REGIMES:
        raise ConfigError(f"unknown regime '{name}'; choose from {sorted(REGIMES)}")
    return PromptConfig(shots=shots, **REGIMES[name])


def regime_label(config: PromptConfig) -> str:
    if not config.include_nar and not (
        config.include_answerable_examples or config.include_unanswerable_examples
    ):
        base = "plain"
    elif config.include_answerable_examples and config.include_unanswerable_examples:
        base = "nar+both"
    elif config.include_answerable_examples:
        base = "nar+aq"
    elif config.include_unanswerable_examples:
        base = "nar+naq"
    else:
        base = "nar"
    return f"{base}@{config.shots}shot"


def run_items(
    items: Sequence[QuestionItem],
    schema: SchemaModel,
    config: PromptConfig,
    llm: LlmClient,
    retriever: Retriever | None,
    pools: FewShotPools | None,
    executor: SqlExecutor,
    options: PipelineOptions = PipelineOptions(),
    workers: int = 1,
) -> tuple[dict[str, PipelineOutcome], dict[str, str]]:
    """Run every item; returns (outcomes by id, infra failures by id)."""
    outcomes: dict[str, PipelineOutcome] = {}
    failures: dict[str, str] = {}

    def _run(item: QuestionItem) -> None:
        try:
            outcomes[item.id] = answer_question(
                item, schema, config, llm, retriever, pools, executor, options
            )
        except LlmError as exc:
            logger.warning("infra failure on %s: %s", item.id, exc)
            failures[item.id] = str(exc)

    if workers <= 1:
        for item in items:
            _run(item)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_run, items))
    return outcomes, failures


def config_echo(
    config: PromptConfig,
    model: str,
    answerable_count: int,
    unanswerable_count: int,
    correction_loop: bool,
) -> dict:
    """The configuration block echoed into reports; fixed metric-definition
    notes document what the scores mean."""
    return {
        "regime": regime_label(config),
        "prompt": config.describe(),
        "model": model,
        "correction_loop": correction_loop,
        "dataset": {"answerable": answerable_count, "unanswerable": unanswerable_count},
        "metric_notes": {
            "normalization": "lowercase, whitespace collapsed, trailing semicolons stripped",
            "soft_correct": "id-like columns dropped from both tables; column bijection over row multisets",
            "balanced_shots": "k-shot with both pools means k examples from each pool",
            "numeric_tolerance": 1e-9,
        },
    }


def evaluate(
    items: Sequence[QuestionItem],
    schema: SchemaModel,
    config: PromptConfig,
    llm: LlmClient,
    executor: SqlExecutor,
    retriever: Retriever | None = None,
    pools: FewShotPools | None = None,
    gold_cache: GoldResultCache | None = None,
    correction_loop: bool = True,
    workers: int = 1,
) -> EvalReport:
    """Full evaluation: gold cache, pipeline runs, scored report."""
    if gold_cache is None:
        gold_cache = build_gold_cache(items, executor)
    options = PipelineOptions(correction_loop=correction_loop, ui_mode=False)
    outcomes, failures = run_items(
        items, schema, config, llm, retriever, pools, executor, options, workers=workers
    )
    answerable = sum(1 for it in items if it.is_answerable)
    echo = config_echo(config, llm.default_model, answerable, len(items) - answerable, correction_loop)
    return evaluate_dataset(items, outcomes, gold_cache, config=echo, infra_failures=failures)


def sweep(
    items: Sequence[QuestionItem],
    schema: SchemaModel,
    llm: LlmClient,
    executor: SqlExecutor,
    retriever: Retriever | None = None,
    pools: FewShotPools | None = None,
    gold_cache: GoldResultCache | None = None,
    grid: Sequence[tuple[str, int]] = tuple(DEFAULT_SWEEP),
    correction_loop: bool = True,
    workers: int = 1,
) -> dict:
    """Run every regime in the grid; returns the combined per-regime report."""
    if gold_cache is None:
        gold_cache = build_gold_cache(items, executor)
    runs: dict[str, dict] = {}
    for regime, shots in grid:
        config = regime_config(regime, shots)
        report = evaluate(
            items,
            schema,
            config,
            llm,
            executor,
            retriever=retriever,
            pools=pools,
            gold_cache=gold_cache,
            correction_loop=correction_loop,
            workers=workers,
        )
        runs[regime_label(config)] = report.to_dict()
    return {"schema_version": 1, "kind": "sweep", "runs": runs}
