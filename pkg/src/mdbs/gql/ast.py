"""AST for the global query language.

Predicates are boolean trees of AND/OR over comparisons; single-child
groups are collapsed, so the canonical shapes are Comparison, And(2+)
and Or(2+).  Rendering any node and reparsing yields an equal node.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from mdbs.types import Value

COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Literal:
    value: Value


@dataclass(frozen=True)
class AttrRef:
    name: str


Operand = Union[Literal, AttrRef]


@dataclass(frozen=True)
class Comparison:
    left: str
    op: str
    right: Operand


@dataclass(frozen=True)
class And:
    items: tuple["Predicate", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Predicate", ...]


Predicate = Union[Comparison, And, Or]


@dataclass(frozen=True)
class Select:
    target: str
    projection: Optional[tuple[str, ...]]  # None means STAR
    predicate: Optional[Predicate] = None
    order_by: Optional[tuple[str, str]] = None  # (attr, "ASC"|"DESC")
    limit: Optional[int] = None


@dataclass(frozen=True)
class Insert:
    target: str
    attrs: tuple[str, ...]
    values: tuple[Literal, ...]


@dataclass(frozen=True)
class Update:
    target: str
    sets: tuple[tuple[str, Literal], ...]
    predicate: Optional[Predicate] = None


@dataclass(frozen=True)
class Delete:
    target: str
    predicate: Optional[Predicate] = None


Statement = Union[Select, Insert, Update, Delete]


def conjuncts(p: Optional[Predicate]) -> tuple[Predicate, ...]:
    """Top-level AND units of a predicate (a whole OR is one unit)."""
    if p is None:
        return ()
    if isinstance(p, And):
        return p.items
    return (p,)


def conjoin(units: tuple[Predicate, ...]) -> Optional[Predicate]:
    if not units:
        return None
    if len(units) == 1:
        return units[0]
    return And(units)


def predicate_attrs(p: Optional[Predicate]) -> set[str]:
    """Every attribute name referenced anywhere in the tree."""
    if p is None:
        return set()
    if isinstance(p, Comparison):
        names = {p.left}
        if isinstance(p.right, AttrRef):
            names.add(p.right.name)
        return names
    out: set[str] = set()
    for item in p.items:
        out |= predicate_attrs(item)
    return out


def render_literal(lit: Literal) -> str:
    v = lit.value
    if v is None:
        return "NULL"
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _render_operand(operand: Operand) -> str:
    if isinstance(operand, AttrRef):
        return operand.name
    return render_literal(operand)


def render_predicate(p: Predicate) -> str:
    if isinstance(p, Comparison):
        return f"{p.left} {p.op} {_render_operand(p.right)}"
    if isinstance(p, And):
        return " AND ".join(render_predicate(item) for item in p.items)
    return " OR ".join(render_predicate(item) for item in p.items)


def render_statement(s: Statement) -> str:
    if isinstance(s, Select):
        cols = "*" if s.projection is None else ", ".join(s.projection)
        text = f"SELECT {cols} FROM {s.target}"
        if s.predicate is not None:
            text += f" WHERE {render_predicate(s.predicate)}"
        if s.order_by is not None:
            text += f" ORDER BY {s.order_by[0]} {s.order_by[1]}"
        if s.limit is not None:
            text += f" LIMIT {s.limit}"
        return text
    if isinstance(s, Insert):
        cols = ", ".join(s.attrs)
        vals = ", ".join(render_literal(v) for v in s.values)
        return f"INSERT INTO {s.target} ({cols}) VALUES ({vals})"
    if isinstance(s, Update):
        sets = ", ".join(f"{a} = {render_literal(v)}" for a, v in s.sets)
        text = f"UPDATE {s.target} SET {sets}"
        if s.predicate is not None:
            text += f" WHERE {render_predicate(s.predicate)}"
        return text
    text = f"DELETE FROM {s.target}"
    if s.predicate is not None:
        text += f" WHERE {render_predicate(s.predicate)}"
    return text
