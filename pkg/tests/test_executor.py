from __future__ import annotations

import hashlib
import sqlite3

import pytest

from askdb.executor import (
    ErrorKind,
    ExecError,
    Limits,
    ResultTable,
    SqliteExecutor,
    canonical_cell,
    canonicalize_table,
    first_keyword,
    is_read_statement,
    open_database,
)


def test_constant_query(executor):
    result = executor.execute_sql("SELECT 1 AS x")
    assert isinstance(result, ResultTable)
    assert result.columns == ("x",)
    assert result.rows == ((1,),)
    assert result.truncated is False


def test_missing_table_error_names_relation(executor):
    result = executor.execute_sql("SELECT * FROM no_such_table")
    assert isinstance(result, ExecError)
    assert result.kind is ErrorKind.MISSING_RELATION
    assert "no_such_table" in result.message


def test_write_statement_rejected(executor):
    result = executor.execute_sql("DELETE FROM gene")
    assert result == ExecError(ErrorKind.OTHER, "write statements rejected")


@pytest.mark.parametrize("sql", [
    "INSERT INTO gene (id, symbol, name, chromosome) VALUES (99, 'X', 'x', '1')",
    "UPDATE gene SET symbol = 'X'",
    "DROP TABLE gene",
    "CREATE TABLE t (x integer)",
    "PRAGMA writable_schema = ON",
    "-- sneaky comment\nDROP TABLE gene",
])
def test_non_select_statements_rejected(executor, sql):
    result = executor.execute_sql(sql)
    assert isinstance(result, ExecError)
    assert result.message == "write statements rejected"


def test_cte_allowed(executor):
    result = executor.execute_sql("WITH t AS (SELECT 2 AS y) SELECT y FROM t")
    assert isinstance(result, ResultTable)
    assert result.rows == ((2,),)


def test_syntax_error_kind(executor):
    result = executor.execute_sql("SELECT FROM WHERE")
    assert isinstance(result, ExecError)
    assert result.kind is ErrorKind.SYNTAX


def test_empty_sql_raises(executor):
    with pytest.raises(ValueError):
        executor.execute_sql("   ")


def test_first_keyword_skips_comments():
    assert first_keyword("  -- hi\n/* block */ SELECT 1") == "select"
    assert is_read_statement("/* x */ WITH t AS (SELECT 1) SELECT * FROM t")
    assert not is_read_statement("EXPLAIN SELECT 1")


def test_row_cap_truncates(executor):
    sql = "WITH RECURSIVE cnt(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM cnt WHERE x < 50) SELECT x FROM cnt"
    result = executor.execute_sql(sql, Limits(timeout_s=30.0, max_rows=10))
    assert isinstance(result, ResultTable)
    assert len(result.rows) == 10
    assert result.truncated is True


def test_timeout_interrupts_runaway_query(executor):
    sql = (
        "WITH RECURSIVE cnt(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM cnt WHERE x < 100000000) "
        "SELECT count(*) FROM cnt"
    )
    result = executor.execute_sql(sql, Limits(timeout_s=0.05, max_rows=10))
    assert isinstance(result, ExecError)
    assert result.kind is ErrorKind.TIMEOUT


def test_float_cells_rendered_as_text(executor):
    result = executor.execute_sql("SELECT log2_fold_change FROM differential_expression WHERE id = 4")
    assert result.rows == (("2.8",),)


def test_same_query_same_result(executor):
    first = executor.execute_sql("SELECT * FROM gene ORDER BY id")
    second = executor.execute_sql("SELECT * FROM gene ORDER BY id")
    assert first == second


def test_canonical_cell_rules():
    assert canonical_cell(None) is None
    assert canonical_cell(True) is True
    assert canonical_cell(7) == 7
    assert canonical_cell(0.1 + 0.2) == "0.3"
    assert canonical_cell(2.0) == "2"
    assert canonical_cell(1.23456789012345e-7) == "1.23456789012e-07"
    assert canonical_cell("TP53") == "TP53"
    assert canonical_cell(b"\x01\xff") == "01ff"


def test_canonicalize_table_lowercases_and_is_idempotent():
    table = ResultTable(columns=("Symbol", "Score"), rows=((("TP53"), 0.1 + 0.2),))
    canonical = canonicalize_table(table)
    assert canonical.columns == ("symbol", "score")
    assert canonical.rows == (("TP53", "0.3"),)
    assert canonicalize_table(canonical) == canonical


def test_readonly_file_checksum_unchanged(tmp_path, fixtures_dir):
    db_path = tmp_path / "mini.sqlite"
    conn = sqlite3.connect(db_path)
    conn.executescript((fixtures_dir / "oncomx_mini.sql").read_text(encoding="utf-8"))
    conn.commit()
    conn.close()
    before = hashlib.sha256(db_path.read_bytes()).hexdigest()
    ex = open_database(db_path)
    assert isinstance(ex, SqliteExecutor)
    ex.execute_sql("SELECT * FROM gene")
    ex.execute_sql("DELETE FROM gene")
    ex.execute_sql("SELECT count(*) FROM disease_mutation")
    ex.close()
    after = hashlib.sha256(db_path.read_bytes()).hexdigest()
    assert before == after


def test_query_only_backstop(tmp_path, fixtures_dir):
    # even if the keyword guard were bypassed, SQLite itself refuses writes
    ex = SqliteExecutor.from_dump(fixtures_dir / "oncomx_mini.sql")
    with pytest.raises(sqlite3.OperationalError):
        ex._conn.execute("DELETE FROM gene")
    ex.close()


def test_open_database_dump_and_dsn(fixtures_dir):
    ex = open_database(str(fixtures_dir / "oncomx_mini.sql"))
    assert isinstance(ex, SqliteExecutor)
    result = ex.execute_sql("SELECT count(*) FROM gene")
    assert result.rows == ((8,),)
    ex.close()
