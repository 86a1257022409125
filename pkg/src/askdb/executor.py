"""Read-only SQL execution with canonical result tables.

The desk-scale backend is embedded SQLite, loaded either from a ``.sql`` dump
or from a database file opened read-only. A PostgreSQL backend is available
behind the same interface when ``psycopg`` is installed. All statements run
under a timeout and a row cap; write statements are rejected before reaching
the database, with ``PRAGMA query_only`` as a backstop.
"""

from __future__ import annotations

import decimal
import re
import sqlite3
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_MAX_ROWS = 10_000

# significant digits used when rendering non-integer numbers as text
FLOAT_DIGITS = 12

Cell = bool | int | str | None


@dataclass(frozen=True)
class Limits:
    timeout_s: float = DEFAULT_TIMEOUT_S
    max_rows: int = DEFAULT_MAX_ROWS


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
            "truncated": self.truncated,
        }


class ErrorKind(Enum):
    SYNTAX = "syntax"
    MISSING_RELATION = "missing_relation"
    TIMEOUT = "timeout"
    OTHER = "other"


@dataclass(frozen=True)
class ExecError:
    kind: ErrorKind
    message: str

    def __post_init__(self) -> None:
        if not self.message:
            raise ValueError("ExecError requires a nonempty message")


def canonical_cell(value: object) -> Cell:
    """Map a database cell onto the canonical cell domain.

    Nulls, booleans, and integers pass through; floats and decimals are
    rendered as text with 12 significant digits; text stays verbatim; blobs
    become hex text.
    """
    if value is None or isinstance(value, bool) or isinstance(value, int):
        return value
    if isinstance(value, float) or isinstance(value, decimal.Decimal):
        return format(value, f".{FLOAT_DIGITS}g")
    if isinstance(value, (bytes, bytearray, memoryview)):
        return bytes(value).hex()
    return str(value)


def canonicalize_table(table: ResultTable) -> ResultTable:
    """Lowercase column names and canonicalize every cell; row order is kept."""
    return ResultTable(
        columns=tuple(name.lower() for name in table.columns),
        rows=tuple(tuple(canonical_cell(c) for c in row) for row in table.rows),
        truncated=table.truncated,
    )


_COMMENT_RE = re.compile(r"(?:\s|--[^\n]*\n?|/\*.*?\*/)*", re.DOTALL)
_READ_KEYWORDS = {"select", "with"}


def first_keyword(sql: str) -> str:
    """The first significant token, lowercased, skipping comments."""
    rest = _COMMENT_RE.match(sql)
    pos = rest.end() if rest else 0
    match = re.match(r"[A-Za-z_]+", sql[pos:])
    return match.group(0).lower() if match else ""


def is_read_statement(sql: str) -> bool:
    return first_keyword(sql) in _READ_KEYWORDS


class SqlExecutor(Protocol):
    def execute_sql(self, sql: str, limits: Limits | None = None) -> ResultTable | ExecError: ...

    def ping(self) -> bool: ...


class SqliteExecutor:
    """Embedded backend over a SQLite connection forced read-only."""

    def __init__(self, conn: sqlite3.Connection, limits: Limits = Limits()):
        self._conn = conn
        self._lock = threading.Lock()
        self.limits = limits
        self._conn.execute("PRAGMA query_only = ON")

    @classmethod
    def from_dump(cls, dump_path: str | Path, limits: Limits = Limits()) -> "SqliteExecutor":
        """Load a ``.sql`` dump into an in-memory database."""
        conn = sqlite3.connect(":memory:", check_same_thread=False)
        conn.executescript(Path(dump_path).read_text(encoding="utf-8"))
        conn.commit()
        return cls(conn, limits)

    @classmethod
    def from_file(cls, db_path: str | Path, limits: Limits = Limits()) -> "SqliteExecutor":
        """Open an existing database file strictly read-only."""
        conn = sqlite3.connect(f"file:{Path(db_path)}?mode=ro", uri=True, check_same_thread=False)
        return cls(conn, limits)

    def execute_sql(self, sql: str, limits: Limits | None = None) -> ResultTable | ExecError:
        if not sql or not sql.strip():
            raise ValueError("sql must be nonempty")
        lim = limits or self.limits
        if not is_read_statement(sql):
            return ExecError(ErrorKind.OTHER, "write statements rejected")
        deadline = time.monotonic() + lim.timeout_s

        def _check_deadline() -> int:
            return 1 if time.monotonic() > deadline else 0

        with self._lock:
            self._conn.set_progress_handler(_check_deadline, 2000)
            try:
                cursor = self._conn.execute(sql)
                raw_rows = cursor.fetchmany(lim.max_rows + 1)
                columns = tuple(d[0] for d in cursor.description or ())
            except sqlite3.Error as exc:
                return _classify_sqlite_error(exc)
            finally:
                self._conn.set_progress_handler(None, 0)
        truncated = len(raw_rows) > lim.max_rows
        if truncated:
            raw_rows = raw_rows[: lim.max_rows]
        return canonicalize_table(
            ResultTable(columns=columns, rows=tuple(tuple(r) for r in raw_rows), truncated=truncated)
        )

    def ping(self) -> bool:
        try:
            with self._lock:
                self._conn.execute("SELECT 1")
            return True
        except sqlite3.Error:
            return False

    def close(self) -> None:
        self._conn.close()


def _classify_sqlite_error(exc: sqlite3.Error) -> ExecError:
    message = str(exc) or exc.__class__.__name__
    low = message.lower()
    if "no such table" in low or "no such view" in low:
        kind = ErrorKind.MISSING_RELATION
    elif "syntax error" in low:
        kind = ErrorKind.SYNTAX
    elif "interrupted" in low:
        kind = ErrorKind.TIMEOUT
    else:
        kind = ErrorKind.OTHER
    return ExecError(kind, message)


class PostgresExecutor:
    """Server backend speaking the PostgreSQL wire protocol (needs psycopg)."""

    def __init__(self, dsn: str, limits: Limits = Limits()):
        try:
            import psycopg
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise RuntimeError(
                "PostgreSQL backend requires the 'psycopg' package (pip install askdb[postgres])"
            ) from exc
        self._psycopg = psycopg
        self.limits = limits
        self._conn = psycopg.connect(dsn, autocommit=True)
        self._conn.execute("SET default_transaction_read_only = on")
        self._lock = threading.Lock()

    def execute_sql(self, sql: str, limits: Limits | None = None) -> ResultTable | ExecError:
        if not sql or not sql.strip():
            raise ValueError("sql must be nonempty")
        lim = limits or self.limits
        if not is_read_statement(sql):
            return ExecError(ErrorKind.OTHER, "write statements rejected")
        with self._lock:
            try:
                with self._conn.cursor() as cur:
                    cur.execute(f"SET statement_timeout = {int(lim.timeout_s * 1000)}")
                    cur.execute(sql)
                    raw_rows = cur.fetchmany(lim.max_rows + 1)
                    columns = tuple(d.name for d in cur.description or ())
            except self._psycopg.Error as exc:
                return _classify_postgres_error(exc)
        truncated = len(raw_rows) > lim.max_rows
        if truncated:
            raw_rows = raw_rows[: lim.max_rows]
        return canonicalize_table(
            ResultTable(columns=columns, rows=tuple(tuple(r) for r in raw_rows), truncated=truncated)
        )

    def ping(self) -> bool:
        try:
            with self._lock:
                self._conn.execute("SELECT 1")
            return True
        except self._psycopg.Error:
            return False

    def close(self) -> None:
        self._conn.close()


def _classify_postgres_error(exc: Exception) -> ExecError:
    message = str(exc).strip() or exc.__class__.__name__
    low = message.lower()
    if "does not exist" in low and ("relation" in low or "table" in low):
        kind = ErrorKind.MISSING_RELATION
    elif "syntax error" in low:
        kind = ErrorKind.SYNTAX
    elif "statement timeout" in low or "canceling statement" in low:
        kind = ErrorKind.TIMEOUT
    else:
        kind = ErrorKind.OTHER
    return ExecError(kind, message)


def open_database(spec: str | Path, limits: Limits = Limits()) -> SqlExecutor:
    """Open a backend from a path or DSN.

    ``*.sql`` loads a dump into in-memory SQLite; ``postgresql://`` DSNs use
    the server backend; anything else is treated as a SQLite database file.
    """
    text = str(spec)
    if text.startswith(("postgresql://", "postgres://")):
        return PostgresExecutor(text, limits)
    if text.endswith(".sql"):
        return SqliteExecutor.from_dump(text, limits)
    return SqliteExecutor.from_file(text, limits)
