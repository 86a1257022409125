"""Few-shot example selection by embedding cosine similarity.

Embeddings come from a pluggable provider: an HTTP endpoint for live runs, or
a precomputed-vector JSON file (text -> vector) for offline/deterministic
runs. Selection is leave-one-out: the question under evaluation is excluded
from its own pool by dataset id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import numpy as np

from .dataset import QuestionItem
from .errors import DimensionMismatch, EmbeddingError, MissingVector, ZeroVector

Vector = np.ndarray


class Embedder(Protocol):
    def embed_text(self, text: str) -> Vector: ...


class OfflineEmbedder:
    """Looks up vectors in a JSON file mapping question text to a float array."""

    def __init__(self, path: str | Path):
        self._path = str(path)
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        self._vectors = {text: np.asarray(vec, dtype=float) for text, vec in doc.items()}

    def embed_text(self, text: str) -> Vector:
        if not text:
            raise ValueError("cannot embed empty text")
        try:
            return self._vectors[text]
        except KeyError:
            raise MissingVector(f"no precomputed vector for text: {text!r} in {self._path}") from None


class HttpEmbedder:
    """Calls an embeddings endpoint (OpenAI-style ``/v1/embeddings`` body)."""

    def __init__(self, url: str, model: str = "Alibaba-NLP/gte-Qwen2-1.5B-instruct", timeout: float = 60.0):
        self.url = url
        self.model = model
        self._client = httpx.Client(timeout=timeout)

    def embed_text(self, text: str) -> Vector:
        if not text:
            raise ValueError("cannot embed empty text")
        try:
            resp = self._client.post(self.url, json={"model": self.model, "input": text})
            resp.raise_for_status()
            payload = resp.json()
            return np.asarray(payload["data"][0]["embedding"], dtype=float)
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise EmbeddingError(f"embedding request failed: {exc}") from exc


@dataclass(frozen=True)
class EmbeddedExample:
    item: QuestionItem
    vector: Vector


@dataclass(frozen=True)
class ExampleStore:
    """An embedded few-shot pool, either answerable or unanswerable."""

    pool_kind: str  # "answerable" | "unanswerable"
    entries: tuple[EmbeddedExample, ...]
    dimension: int


def build_store(items: Sequence[QuestionItem], embedder: Embedder, pool_kind: str) -> ExampleStore:
    entries = []
    dimension = 0
    for item in items:
        vec = np.asarray(embedder.embed_text(item.question), dtype=float)
        if dimension == 0:
            dimension = vec.shape[0]
        elif vec.shape[0] != dimension:
            raise DimensionMismatch(
                f"vector for '{item.id}' has dimension {vec.shape[0]}, store has {dimension}"
            )
        if not np.linalg.norm(vec) > 0:
            raise ZeroVector(f"vector for '{item.id}' has zero norm")
        entries.append(EmbeddedExample(item=item, vector=vec))
    return ExampleStore(pool_kind=pool_kind, entries=tuple(entries), dimension=dimension)


def cosine_similarity(a: Sequence[float] | Vector, b: Sequence[float] | Vector) -> float:
    """dot(a, b) / (|a| * |b|), clamped into [-1, 1]."""
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"vector dimensions differ: {va.shape} vs {vb.shape}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def top_k_similar(
    query: Sequence[float] | Vector,
    store: ExampleStore,
    k: int,
    exclude_id: str | None = None,
) -> list[QuestionItem]:
    """The k most similar pool items, leaving out ``exclude_id``.

    Results are ordered by descending cosine similarity; ties break by
    ascending store index for determinism.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return []
    qv = np.asarray(query, dtype=float)
    scored: list[tuple[float, int]] = []
    for idx, entry in enumerate(store.entries):
        if exclude_id is not None and entry.item.id == exclude_id:
            continue
        scored.append((cosine_similarity(qv, entry.vector), idx))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [store.entries[idx].item for _, idx in scored[:k]]


class Retriever:
    """Embeds query text and selects examples from a store."""

    def __init__(self, embedder: Embedder):
        self.embedder = embedder

    def select(
        self, question: str, store: ExampleStore, k: int, exclude_id: str | None = None
    ) -> list[QuestionItem]:
        if k == 0:
            return []
        query = self.embedder.embed_text(question)
        return top_k_similar(query, store, k, exclude_id=exclude_id)
