"""Table schemas and the value codecs shared by records and exporters."""

from __future__ import annotations

import dataclasses
import datetime as dt
import math
import re
import types
import typing
from dataclasses import dataclass

KINDS = ("integer", "number", "boolean", "text", "date", "time", "datetime", "timestamp")
AFFINITY = {
    "integer": "INTEGER",
    "boolean": "INTEGER",
    "number": "REAL",
    "text": "TEXT",
    "date": "TEXT",
    "time": "TEXT",
    "datetime": "TEXT",
    "timestamp": "TEXT",
}
NUMERIC_KINDS = frozenset({"integer", "number", "boolean"})


class SchemaMismatch(ValueError):
    pass


@dataclass(frozen=True, order=True)
class ZonedTimestamp:
    """A local wall-clock time with its zone label kept verbatim (never converted)."""

    local: dt.datetime
    zone: str

    def __str__(self) -> str:
        return f"{self.local:%Y-%m-%d %H:%M} {self.zone}"

    @classmethod
    def parse(cls, text: str) -> ZonedTimestamp:
        m = re.fullmatch(r"\s*(\d{4}-\d{2}-\d{2})[ T](\d{1,2}:\d{2})\s+(\S+)\s*", text)
        if not m:
            raise ValueError(f"not a zoned timestamp: {text!r}")
        return cls(dt.datetime.fromisoformat(f"{m.group(1)} {m.group(2).zfill(5)}"), m.group(3))


@dataclass(frozen=True)
class Column:
    name: str
    kind: str = "text"
    nullable: bool = True
    attr: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatch(f"unknown column kind {self.kind!r}")
        if not self.attr:
            object.__setattr__(self, "attr", self.name)

    @property
    def affinity(self) -> str:
        return AFFINITY[self.kind]

    @property
    def numeric(self) -> bool:
        return self.kind in NUMERIC_KINDS


@dataclass(frozen=True)
class TableSchema:
    table_name: str
    columns: tuple[Column, ...]
    primary_key: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        for name in [self.table_name, *names]:
            if not name or "\x00" in name:
                raise SchemaMismatch(f"invalid identifier {name!r}")
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate column in {self.table_name!r}")
        missing = set(self.primary_key) - set(names)
        if missing:
            raise SchemaMismatch(f"primary key columns not in table: {sorted(missing)}")

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]


def _kind_for(hint) -> tuple[str, bool]:
    args = typing.get_args(hint)
    origin = typing.get_origin(hint)
    nullable = False
    if origin in (typing.Union, types.UnionType):
        nullable = type(None) in args
        inner = [a for a in args if a is not type(None)]
        if set(inner) == {int, float}:
            return "number", nullable
        hint = inner[0] if len(inner) == 1 else str
    for py, kind in (
        (bool, "boolean"),
        (int, "integer"),
        (float, "number"),
        (dt.datetime, "datetime"),
        (dt.date, "date"),
        (dt.time, "time"),
        (ZonedTimestamp, "timestamp"),
    ):
        if hint is py:
            return kind, nullable
    return "text", nullable


def schema_for(cls, table_name: str, primary_key: tuple[str, ...] = ()) -> TableSchema:
    """Schema of a record dataclass; ``metadata={"column": ...}`` renames a column."""
    hints = typing.get_type_hints(cls)
    columns = []
    for f in dataclasses.fields(cls):
        kind, nullable = _kind_for(hints[f.name])
        kind = f.metadata.get("kind", kind)
        columns.append(Column(f.metadata.get("column", f.name), kind, nullable, f.name))
    return TableSchema(table_name, tuple(columns), primary_key)


# -- value codecs --------------------------------------------------------


def check_value(col: Column, value) -> None:
    if value is None:
        if not col.nullable:
            raise SchemaMismatch(f"column {col.name!r} is not nullable")
        return
    ok = {
        "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v),
        "boolean": lambda v: isinstance(v, bool),
        "text": lambda v: isinstance(v, str),
        "date": lambda v: isinstance(v, dt.date) and not isinstance(v, dt.datetime),
        "time": lambda v: isinstance(v, dt.time),
        "datetime": lambda v: isinstance(v, dt.datetime),
        "timestamp": lambda v: isinstance(v, ZonedTimestamp),
    }[col.kind](value)
    if not ok:
        raise SchemaMismatch(f"column {col.name!r} ({col.kind}) cannot hold {value!r}")


def row_values(row, schema: TableSchema) -> list:
    """Column values of ``row`` (a dataclass instance or a mapping keyed by attribute)."""
    if dataclasses.is_dataclass(row) and not isinstance(row, type):
        try:
            values = [getattr(row, c.attr) for c in schema.columns]
        except AttributeError as exc:
            raise SchemaMismatch(str(exc)) from None
    elif isinstance(row, typing.Mapping):
        extra = set(row) - {c.attr for c in schema.columns}
        if extra:
            raise SchemaMismatch(f"fields not in {schema.table_name!r}: {sorted(extra)}")
        try:
            values = [row[c.attr] for c in schema.columns]
        except KeyError as exc:
            raise SchemaMismatch(f"row lacks column {exc.args[0]!r}") from None
    else:
        raise SchemaMismatch(f"cannot export {type(row).__name__}")
    for col, value in zip(schema.columns, values):
        check_value(col, value)
    return values


def format_number(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def to_text(col: Column, value) -> str:
    """Text form shared by CSV, JSON strings and SQL literals (``value`` not Missing)."""
    if col.kind in NUMERIC_KINDS:
        return format_number(value)
    if col.kind == "time":
        return f"{value:%H:%M}"
    if col.kind == "datetime":
        return value.isoformat(timespec="seconds")
    return str(value)


def from_text(col: Column, text: str):
    """Inverse of :func:`to_text`."""
    kind = col.kind
    if kind == "integer":
        return int(text)
    if kind == "boolean":
        return {"1": True, "0": False}[text]
    if kind == "number":
        return int(text) if re.fullmatch(r"[+-]?\d+", text) else float(text)
    if kind == "date":
        return dt.date.fromisoformat(text)
    if kind == "time":
        return dt.time.fromisoformat(text)
    if kind == "datetime":
        return dt.datetime.fromisoformat(text)
    if kind == "timestamp":
        return ZonedTimestamp.parse(text)
    return text


def to_json_value(col: Column, value):
    if value is None:
        return None
    if col.kind in ("integer", "boolean", "number"):
        return value
    return to_text(col, value)


def from_json_value(col: Column, value):
    if value is None:
        return None
    if col.kind in ("integer", "boolean", "number"):
        if col.kind == "boolean" and not isinstance(value, bool):
            raise SchemaMismatch(f"{col.name!r} expects a boolean, got {value!r}")
        return value
    return from_text(col, value)
