"""Rendering sub-queries and sub-writes in each site's local language.

All renderers are pure and deterministic.  The relational output is real
SQL that the relational adapter actually executes; the document and CSV
outputs are the scan pipelines those adapters interpret, rendered for
explain panels.
"""
from __future__ import annotations

from typing import Union

from mdbs.gql.ast import And, AttrRef, Comparison, Or, Predicate
from mdbs.plan import OutputCol, SubQuery, SubWrite
from mdbs.types import CanonicalType, Value

SQL_TYPE_NAMES = {
    CanonicalType.INT: "INTEGER",
    CanonicalType.FLOAT: "REAL",
    CanonicalType.STRING: "TEXT",
    CanonicalType.BOOL: "BOOLEAN",
}


def sql_literal(value: Value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _sql_attr(name: str, casts: dict[str, CanonicalType]) -> str:
    if name in casts:
        return f"CAST({name} AS {SQL_TYPE_NAMES[casts[name]]})"
    return name


def _sql_predicate(p: Predicate, casts: dict[str, CanonicalType]) -> str:
    if isinstance(p, Comparison):
        left = _sql_attr(p.left, casts)
        if isinstance(p.right, AttrRef):
            right = _sql_attr(p.right.name, casts)
        else:
            right = sql_literal(p.right.value)
        op = "<>" if p.op == "!=" else p.op
        return f"{left} {op} {right}"
    if isinstance(p, And):
        return " AND ".join(_sql_group(item, casts) for item in p.items)
    return " OR ".join(_sql_group(item, casts) for item in p.items)


def _sql_group(p: Predicate, casts: dict[str, CanonicalType]) -> str:
    text = _sql_predicate(p, casts)
    if isinstance(p, (And, Or)):
        return f"({text})"
    return text


def _cast_map(item: Union[SubQuery, SubWrite]) -> dict[str, CanonicalType]:
    return {local: target for local, _, target in item.pred_casts}


def _sql_column(col: OutputCol) -> str:
    if col.local is None:
        return sql_literal(col.const)
    if col.cast_to is not None:
        return f"CAST({col.local} AS {SQL_TYPE_NAMES[col.cast_to]})"
    return col.local


def relational_translate(item: Union[SubQuery, SubWrite]) -> str:
    casts = _cast_map(item)
    if isinstance(item, SubQuery):
        cols = ", ".join(_sql_column(c) for c in item.columns)
        text = f"SELECT {cols} FROM {item.local_class}"
        if item.predicate is not None:
            text += f" WHERE {_sql_predicate(item.predicate, casts)}"
        return text
    if item.kind == "INSERT":
        names = ", ".join(name for name, _ in item.values)
        vals = ", ".join(sql_literal(v) for _, v in item.values)
        return f"INSERT INTO {item.local_class} ({names}) VALUES ({vals})"
    if item.kind == "UPDATE":
        sets = ", ".join(f"{name} = {sql_literal(v)}" for name, v in item.values)
        text = f"UPDATE {item.local_class} SET {sets}"
        if item.predicate is not None:
            text += f" WHERE {_sql_predicate(item.predicate, casts)}"
        return text
    text = f"DELETE FROM {item.local_class}"
    if item.predicate is not None:
        text += f" WHERE {_sql_predicate(item.predicate, casts)}"
    return text


def _pipe_attr(name: str, casts: dict[str, CanonicalType]) -> str:
    if name in casts:
        return f"{name}::{casts[name].value}"
    return name


def _pipe_predicate(p: Predicate, casts: dict[str, CanonicalType]) -> str:
    if isinstance(p, Comparison):
        left = _pipe_attr(p.left, casts)
        if isinstance(p.right, AttrRef):
            right = _pipe_attr(p.right.name, casts)
        else:
            right = sql_literal(p.right.value)
        return f"{left} {p.op} {right}"
    if isinstance(p, And):
        return " AND ".join(_pipe_group(item, casts) for item in p.items)
    return " OR ".join(_pipe_group(item, casts) for item in p.items)


def _pipe_group(p: Predicate, casts: dict[str, CanonicalType]) -> str:
    text = _pipe_predicate(p, casts)
    if isinstance(p, (And, Or)):
        return f"({text})"
    return text


def _pipe_column(col: OutputCol) -> str:
    if col.local is None:
        return sql_literal(col.const)
    if col.cast_to is not None:
        return f"{col.local}::{col.cast_to.value}"
    return col.local


def _pipeline_translate(source: str, item: Union[SubQuery, SubWrite]) -> str:
    casts = _cast_map(item)
    if isinstance(item, SubQuery):
        parts = [source]
        if item.predicate is not None:
            parts.append(f"WHERE {_pipe_predicate(item.predicate, casts)}")
        parts.append("EMIT " + ", ".join(_pipe_column(c) for c in item.columns))
        return " | ".join(parts)
    if item.kind == "INSERT":
        fields = ", ".join(f"{n}={sql_literal(v)}" for n, v in item.values)
        return f"APPEND {{{fields}}} TO {item.local_class}"
    if item.kind == "UPDATE":
        sets = ", ".join(f"{n}={sql_literal(v)}" for n, v in item.values)
        text = f"{source} | SET {sets}"
        if item.predicate is not None:
            text += f" WHERE {_pipe_predicate(item.predicate, casts)}"
        return text
    text = f"{source} | REMOVE"
    if item.predicate is not None:
        text += f" WHERE {_pipe_predicate(item.predicate, casts)}"
    return text


def document_translate(item: Union[SubQuery, SubWrite]) -> str:
    return _pipeline_translate(f"SCAN {item.local_class}", item)


def csv_translate(item: Union[SubQuery, SubWrite]) -> str:
    return _pipeline_translate(f"READ {item.local_class}.csv", item)


def translate(adapter_kind: str, item: Union[SubQuery, SubWrite]) -> str:
    if adapter_kind == "RELATIONAL":
        return relational_translate(item)
    if adapter_kind == "DOCUMENT":
        return document_translate(item)
    return csv_translate(item)
