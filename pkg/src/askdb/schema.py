"""Relational schema model: loading, validation, and prompt rendering.

The schema file is a JSON document (see ``load_schema``). Rendering produces
the human-readable block embedded in LLM prompts; a pre-rendered
``readable_override`` text, when present in the file, is used verbatim so
that a hand-tuned schema description can be checked in as an artifact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class ColumnDef:
    name: str
    data_type: str
    is_primary_key: bool = False
    comment: str | None = None


@dataclass(frozen=True)
class ForeignKey:
    column: str
    ref_table: str
    ref_column: str


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]


@dataclass(frozen=True)
class SchemaModel:
    database_name: str
    tables: tuple[TableDef, ...]
    readable_override: str | None = None

    def table(self, name: str) -> TableDef:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)


def _validate(schema: SchemaModel) -> SchemaModel:
    if not schema.tables:
        raise ValidationError("no tables in schema '%s'" % schema.database_name)
    seen_tables: set[str] = set()
    for table in schema.tables:
        if not table.name:
            raise ValidationError("table with empty name")
        if table.name in seen_tables:
            raise ValidationError(f"duplicate table name '{table.name}'")
        seen_tables.add(table.name)
        if not table.columns:
            raise ValidationError(f"table '{table.name}' has no columns")
        seen_cols: set[str] = set()
        for col in table.columns:
            if not col.name:
                raise ValidationError(f"table '{table.name}' has a column with empty name")
            if col.name in seen_cols:
                raise ValidationError(
                    f"duplicate column name '{col.name}' in table '{table.name}'"
                )
            seen_cols.add(col.name)
    by_name = {t.name: t for t in schema.tables}
    for table in schema.tables:
        for fk in table.foreign_keys:
            if fk.column not in {c.name for c in table.columns}:
                raise ValidationError(
                    f"foreign key on '{table.name}.{fk.column}' references a local "
                    f"column that does not exist"
                )
            target = by_name.get(fk.ref_table)
            if target is None:
                raise ValidationError(
                    f"foreign key '{table.name}.{fk.column}' -> "
                    f"'{fk.ref_table}.{fk.ref_column}': no table '{fk.ref_table}'"
                )
            if fk.ref_column not in {c.name for c in target.columns}:
                raise ValidationError(
                    f"foreign key '{table.name}.{fk.column}' -> "
                    f"'{fk.ref_table}.{fk.ref_column}': no column "
                    f"'{fk.ref_column}' in '{fk.ref_table}'"
                )
    return schema


def schema_from_dict(doc: dict) -> SchemaModel:
    """Build and validate a SchemaModel from the parsed JSON document."""
    if not isinstance(doc, dict):
        raise ParseError("schema document must be a JSON object")
    try:
        tables = []
        for tdoc in doc.get("tables", []):
            columns = tuple(
                ColumnDef(
                    name=c["name"],
                    data_type=c["type"],
                    is_primary_key=bool(c.get("pk", False)),
                    comment=c.get("comment"),
                )
                for c in tdoc.get("columns", [])
            )
            fks = tuple(
                ForeignKey(f["column"], f["ref_table"], f["ref_column"])
                for f in tdoc.get("foreign_keys", [])
            )
            tables.append(TableDef(name=tdoc["name"], columns=columns, foreign_keys=fks))
        schema = SchemaModel(
            database_name=doc["database"],
            tables=tuple(tables),
            readable_override=doc.get("readable_override"),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed schema document: {exc}") from exc
    return _validate(schema)


def load_schema(path: str | Path) -> SchemaModel:
    """Load a schema JSON file and validate every invariant."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return schema_from_dict(doc)


def render_schema_prompt(schema: SchemaModel) -> str:
    """Render the schema into the prompt block, or return the override verbatim.

    One block per table: a ``Table: <name>`` header followed by one line per
    column of the form ``- <name> (<type>) PK, FK -> table.column -- comment``
    with the PK/FK/comment parts present only when applicable. Output is
    deterministic: identical input yields byte-identical text.
    """
    if schema.readable_override is not None:
        return schema.readable_override
    fk_by_column: dict[tuple[str, str], list[ForeignKey]] = {}
    blocks: list[str] = []
    for table in schema.tables:
        for fk in table.foreign_keys:
            fk_by_column.setdefault((table.name, fk.column), []).append(fk)
        lines = [f"Table: {table.name}"]
        for col in table.columns:
            line = f"- {col.name} ({col.data_type})"
            if col.is_primary_key:
                line += " PK"
            for fk in fk_by_column.get((table.name, col.name), []):
                line += f", FK -> {fk.ref_table}.{fk.ref_column}"
            if col.comment:
                line += f" -- {col.comment}"
            lines.append(line)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def identifier_columns(column_names: Iterable[str]) -> set[str]:
    """Return the id-like column names, lowercased.

    A column counts as an identifier when its name, case-insensitively,
    equals ``id`` or ends with ``_id``.
    """
    found: set[str] = set()
    for name in column_names:
        low = name.lower()
        if low == "id" or low.endswith("_id"):
            found.add(low)
    return found
