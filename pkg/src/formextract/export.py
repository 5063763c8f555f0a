"""CSV, JSON and SQL serialization of record tables.

Missing values are kept distinct from zero at every step: ``NaN`` in
numeric CSV columns (empty in text columns), ``null`` in JSON and ``NULL``
in SQL.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from typing import Iterable, Mapping

from .schema import (
    Column,
    SchemaMismatch,
    TableSchema,
    from_json_value,
    from_text,
    row_values,
    schema_for,
    to_json_value,
    to_text,
)

__all__ = [
    "Column",
    "SchemaMismatch",
    "TableSchema",
    "schema_for",
    "to_csv",
    "from_csv",
    "to_json",
    "from_json",
    "record_to_dict",
    "record_from_dict",
    "tables_to_json",
    "tables_from_json",
    "to_sql_dump",
    "quote_identifier",
    "rows_as_dicts",
    "SQL_HEADER",
]

CSV_MISSING_NUMBER = "NaN"
SQL_HEADER = "-- formextract SQL dump\n"


_CSV_SPECIAL = frozenset(',"\r\n')


def csv_field(text: str) -> str:
    """Minimal quoting: only cells holding a comma, quote or line break are quoted."""
    if _CSV_SPECIAL.isdisjoint(text):
        return text
    return '"' + text.replace('"', '""') + '"'


def csv_line(cells: list[str]) -> str:
    # a lone empty cell is quoted so the line does not read back as a blank row
    if cells == [""]:
        return '""\n'
    return ",".join(csv_field(c) for c in cells) + "\n"


def to_csv(rows: Iterable, schema: TableSchema) -> bytes:
    """RFC 4180 style CSV with LF line endings and a header row."""
    lines = [csv_line(schema.column_names)]
    for row in rows:
        cells = []
        for col, value in zip(schema.columns, row_values(row, schema)):
            if value is None:
                cells.append(CSV_MISSING_NUMBER if col.numeric else "")
            else:
                cells.append(to_text(col, value))
        lines.append(csv_line(cells))
    return "".join(lines).encode("utf-8")


def from_csv(data: bytes, schema: TableSchema) -> list[dict]:
    """Rows of a CSV produced by :func:`to_csv`, keyed by attribute name."""
    reader = csv.reader(io.StringIO(data.decode("utf-8"), newline=""))
    header = next(reader, None)
    if header != schema.column_names:
        raise SchemaMismatch(f"CSV header {header!r} does not match {schema.table_name!r}")
    rows = []
    for cells in reader:
        if len(cells) != len(schema.columns):
            raise SchemaMismatch(f"CSV row has {len(cells)} cells, expected {len(schema.columns)}")
        row = {}
        for col, cell in zip(schema.columns, cells):
            missing = cell == (CSV_MISSING_NUMBER if col.numeric else "")
            row[col.attr] = None if missing else from_text(col, cell)
        rows.append(row)
    return rows


def _dumps(obj) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")


def record_to_dict(record, schema: TableSchema | None = None) -> dict:
    if schema is None:
        schema = schema_for(type(record), type(record).__name__)
    values = row_values(record, schema)
    return {col.name: to_json_value(col, v) for col, v in zip(schema.columns, values)}


def record_from_dict(obj: Mapping, schema: TableSchema, cls=None):
    """Inverse of :func:`record_to_dict`; builds ``cls`` when given, else a dict keyed by attribute."""
    if set(obj) != set(schema.column_names):
        raise SchemaMismatch(f"JSON keys do not match {schema.table_name!r}")
    values = {col.attr: from_json_value(col, obj[col.name]) for col in schema.columns}
    return cls(**values) if cls is not None else values


def to_json(record, schema: TableSchema | None = None) -> bytes:
    """One JSON object per record; keys in declaration order, Missing as ``null``."""
    return _dumps(record_to_dict(record, schema))


def from_json(data: bytes, cls, table_name: str | None = None):
    schema = schema_for(cls, table_name or cls.__name__)
    return record_from_dict(json.loads(data), schema, cls)


def tables_to_json(tables: Iterable[tuple[TableSchema, list]], extra: Mapping | None = None) -> bytes:
    """A single JSON document holding every table as a list of row objects."""
    doc = dict(extra or {})
    doc["tables"] = {schema.table_name: [record_to_dict(r, schema) for r in rows] for schema, rows in tables}
    return _dumps(doc)


def tables_from_json(data: bytes, schemas: Mapping[str, TableSchema]) -> dict[str, list[dict]]:
    doc = json.loads(data)
    out = {}
    for name, rows in doc["tables"].items():
        if name not in schemas:
            raise SchemaMismatch(f"unknown table {name!r}")
        out[name] = [record_from_dict(r, schemas[name]) for r in rows]
    return out


def quote_identifier(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def sql_literal(col: Column, value) -> str:
    if value is None:
        return "NULL"
    if col.numeric and isinstance(value, float) and math.isfinite(value):
        # 17 digits: SQLite's decimal reader misrounds some shortest reprs
        return "%.17g" % value
    text = to_text(col, value)
    if col.numeric:
        return text
    return "'" + text.replace("'", "''") + "'"


def create_table_sql(schema: TableSchema) -> str:
    defs = [
        f"  {quote_identifier(c.name)} {c.affinity}" + ("" if c.nullable else " NOT NULL") for c in schema.columns
    ]
    if schema.primary_key:
        defs.append("  PRIMARY KEY (" + ", ".join(quote_identifier(k) for k in schema.primary_key) + ")")
    return f"CREATE TABLE {quote_identifier(schema.table_name)} (\n" + ",\n".join(defs) + "\n);\n"


def to_sql_dump(tables: Iterable[tuple[TableSchema, list]]) -> bytes:
    """CREATE TABLE statements followed by the INSERTs, in the common SQL-92 subset."""
    tables = list(tables)
    names = [schema.table_name for schema, _ in tables]
    if len(set(names)) != len(names):
        raise SchemaMismatch("duplicate table in dump")
    out = [SQL_HEADER]
    for schema, _ in tables:
        out.append(create_table_sql(schema))
    for schema, rows in tables:
        target = quote_identifier(schema.table_name)
        cols = ", ".join(quote_identifier(c.name) for c in schema.columns)
        for row in rows:
            values = ", ".join(sql_literal(c, v) for c, v in zip(schema.columns, row_values(row, schema)))
            out.append(f"INSERT INTO {target} ({cols}) VALUES ({values});\n")
    return "".join(out).encode("utf-8")


def rows_as_dicts(rows: Iterable, schema: TableSchema) -> list[dict]:
    """Rows keyed by attribute name, whatever their original representation."""
    out = []
    for row in rows:
        if dataclasses.is_dataclass(row):
            out.append({c.attr: getattr(row, c.attr) for c in schema.columns})
        else:
            out.append({c.attr: row[c.attr] for c in schema.columns})
    return out
