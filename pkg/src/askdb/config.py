"""Runtime configuration for the CLI and the HTTP service.

Config files are JSON or TOML; every field has a desk-scale default so the
fixture database and a scripted model work out of the box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .dataset import load_questions
from .errors import ConfigError
from .executor import Limits, SqlExecutor, open_database
from .llm import DEFAULT_MODEL, LlmClient, make_client
from .prompt import FewShotPools, PromptConfig
from .retriever import Embedder, HttpEmbedder, OfflineEmbedder, Retriever, build_store
from .schema import SchemaModel, load_schema


@dataclass
class AppConfig:
    schema_path: str = "fixtures/oncomx_mini.schema.json"
    db: str = "fixtures/oncomx_mini.sql"
    llm: str = "http://localhost:11434/v1/chat/completions"
    models: list[str] = field(default_factory=list)
    llm_timeout_s: float = 120.0
    max_in_flight: int = 4
    embeddings: str | None = None
    seed_path: str | None = None
    naq_path: str | None = None
    nar: bool = True
    shots: int = 0
    examples: str = "none"
    correction_loop: bool = True
    transcripts_dir: str = "transcripts"
    static_dir: str | None = None
    exec_timeout_s: float = 30.0
    max_rows: int = 10_000

    @property
    def default_model(self) -> str:
        return self.models[0] if self.models else DEFAULT_MODEL


def config_from_dict(doc: dict) -> AppConfig:
    known = {f.name for f in fields(AppConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return AppConfig(**doc)


def load_app_config(path: str | Path) -> AppConfig:
    """Load a JSON or TOML config file (selected by suffix)."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    if path.suffix == ".toml":
        try:
            import tomllib
        except ImportError:  # Python < 3.11
            import tomli as tomllib
        doc = tomllib.loads(raw)
    else:
        doc = json.loads(raw)
    return config_from_dict(doc)


def make_embedder(spec: str | None) -> Embedder | None:
    if spec is None:
        return None
    if spec.startswith(("http://", "https://")):
        return HttpEmbedder(spec)
    return OfflineEmbedder(spec)


@dataclass
class AppContext:
    """Everything a pipeline run needs, built once from an AppConfig."""

    config: AppConfig
    schema: SchemaModel
    executor: SqlExecutor
    llm: LlmClient
    retriever: Retriever | None
    pools: FewShotPools | None

    def prompt_config(
        self,
        nar: bool | None = None,
        shots: int | None = None,
        examples: str | None = None,
    ) -> PromptConfig:
        from .harness import EXAMPLES_CHOICES

        examples = examples if examples is not None else self.config.examples
        if examples not in EXAMPLES_CHOICES:
            raise ConfigError(f"examples must be one of {sorted(EXAMPLES_CHOICES)}")
        include_aq, include_naq = EXAMPLES_CHOICES[examples]
        return PromptConfig(
            shots=shots if shots is not None else self.config.shots,
            include_nar=nar if nar is not None else self.config.nar,
            include_answerable_examples=include_aq,
            include_unanswerable_examples=include_naq,
        )


def build_context(config: AppConfig) -> AppContext:
    schema = load_schema(config.schema_path)
    executor = open_database(
        config.db, Limits(timeout_s=config.exec_timeout_s, max_rows=config.max_rows)
    )
    llm = make_client(
        config.llm,
        default_model=config.default_model,
        timeout_s=config.llm_timeout_s,
        max_in_flight=config.max_in_flight,
    )
    embedder = make_embedder(config.embeddings)
    retriever = Retriever(embedder) if embedder else None
    pools = None
    if embedder:
        answerable = None
        unanswerable = None
        if config.seed_path:
            answerable = build_store(load_questions(config.seed_path), embedder, "answerable")
        if config.naq_path:
            unanswerable = build_store(load_questions(config.naq_path), embedder, "unanswerable")
        pools = FewShotPools(answerable=answerable, unanswerable=unanswerable)
    return AppContext(
        config=config,
        schema=schema,
        executor=executor,
        llm=llm,
        retriever=retriever,
        pools=pools,
    )
