"""Classify raw model output and normalize SQL strings for exact match.

Classification is total: every raw text maps to an abstention, a SQL
candidate, or "unusable". The abstention marker phrase dominates whenever it
appears outside a code fence, even if SQL is present too.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

ABSTENTION_MARKER = "unanswerable question"

# Fenced block; an opening tag line like ```sql is captured separately.
_FENCE_RE = re.compile(r"```(?:(\w+)[ \t]*\n)?(.*?)```", re.DOTALL)
_SQL_KEYWORD_RE = re.compile(r"\b(select|with)\b", re.IGNORECASE)


class OutputKind(Enum):
    SQL = "sql"
    ABSTENTION = "abstention"
    UNUSABLE = "unusable"


@dataclass(frozen=True)
class ModelOutput:
    kind: OutputKind
    raw: str
    sql: str | None = None


def _first_fence_candidate(raw: str) -> str | None:
    match = _FENCE_RE.search(raw)
    if not match:
        return None
    content = match.group(2).strip()
    # inline fences carry no tag line; drop a leading "sql" word if present
    head, _, rest = content.partition(" ")
    if head.lower() == "sql" and rest.strip():
        content = rest.strip()
    return content or None


def _sql_marker_candidate(raw: str) -> str | None:
    pos = raw.rfind("[SQL]:")
    if pos < 0:
        return None
    return raw[pos + len("[SQL]:"):].strip() or None


def _keyword_candidate(raw: str) -> str | None:
    match = _SQL_KEYWORD_RE.search(raw)
    if not match:
        return None
    start = match.start()
    semi = raw.find(";", start)
    candidate = raw[start : semi + 1] if semi >= 0 else raw[start:]
    return candidate.strip() or None


def classify_output(raw: str) -> ModelOutput:
    """Sort raw model output into abstention, SQL candidate, or unusable.

    The abstention marker is checked first, case-insensitively, in the text
    outside any code fence. Extraction then tries, in order: the first fenced
    code block, the text after the last ``[SQL]:`` marker, and the first
    substring starting at a SELECT/WITH keyword up to the first semicolon.
    """
    outside_fences = _FENCE_RE.sub(" ", raw)
    if ABSTENTION_MARKER in outside_fences.lower():
        return ModelOutput(kind=OutputKind.ABSTENTION, raw=raw)
    for extract in (_first_fence_candidate, _sql_marker_candidate, _keyword_candidate):
        candidate = extract(raw)
        if candidate:
            return ModelOutput(kind=OutputKind.SQL, raw=raw, sql=candidate)
    return ModelOutput(kind=OutputKind.UNUSABLE, raw=raw)


def normalize_sql(sql: str) -> str:
    """Lowercase, collapse all whitespace runs to single spaces, trim, and
    drop trailing semicolons.
    """
    text = re.sub(r"\s+", " ", sql.lower()).strip()
    while text.endswith(";"):
        text = text[:-1].rstrip()
    return text
