"""Exception types shared across the package."""

from __future__ import annotations


class AskdbError(Exception):
    """Base class for all package errors."""


class ParseError(AskdbError):
    """A document (schema, dataset, script) could not be parsed."""


class ValidationError(AskdbError):
    """A parsed document violates an invariant; the message names the offender."""


class RetrievalError(AskdbError):
    """Few-shot example retrieval failed."""


class EmbeddingError(RetrievalError):
    """The embedding provider failed."""


class MissingVector(RetrievalError):
    """Offline embeddings file has no vector for the requested text."""


class DimensionMismatch(RetrievalError):
    """Vectors of different dimensions were combined."""


class ZeroVector(RetrievalError):
    """Cosine similarity is undefined for zero-norm vectors."""


class LlmError(AskdbError):
    """The LLM provider failed after exhausting transport retries."""


class LlmTimeoutError(LlmError, TimeoutError):
    """An LLM call exceeded its configured timeout."""


class EmptyGeneration(AskdbError):
    """The model returned nothing usable for candidate generation."""


class ConfigError(AskdbError):
    """Invalid runtime configuration."""


class MissingOutcome(AskdbError):
    """A dataset item has no pipeline outcome and no recorded infra failure."""
