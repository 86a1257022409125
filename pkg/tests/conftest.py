from __future__ import annotations

import json
from pathlib import Path

import pytest

from askdb.dataset import load_questions
from askdb.executor import SqliteExecutor
from askdb.prompt import FewShotPools
from askdb.retriever import OfflineEmbedder, Retriever, build_store
from askdb.schema import load_schema

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def mini_schema():
    return load_schema(FIXTURES / "oncomx_mini.schema.json")


@pytest.fixture()
def executor():
    ex = SqliteExecutor.from_dump(FIXTURES / "oncomx_mini.sql")
    yield ex
    ex.close()


@pytest.fixture(scope="session")
def dev_items():
    return load_questions(FIXTURES / "dev.json")


@pytest.fixture(scope="session")
def seed_items():
    return load_questions(FIXTURES / "seed.json")


@pytest.fixture(scope="session")
def naq_items():
    return load_questions(FIXTURES / "naq.json")


@pytest.fixture(scope="session")
def embedder():
    return OfflineEmbedder(FIXTURES / "embeddings.json")


@pytest.fixture(scope="session")
def retriever(embedder):
    return Retriever(embedder)


@pytest.fixture(scope="session")
def pools(seed_items, naq_items, embedder):
    return FewShotPools(
        answerable=build_store(seed_items, embedder, "answerable"),
        unanswerable=build_store(naq_items, embedder, "unanswerable"),
    )


@pytest.fixture(scope="session")
def scripted_eval_responses():
    return json.loads((FIXTURES / "scripted_eval.json").read_text(encoding="utf-8"))
