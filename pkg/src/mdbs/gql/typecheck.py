"""Binding parsed statements to a catalog snapshot.

Resolves the target class (inlining views), binds attributes to their
declared spelling and type, widens INT literals where FLOAT is expected
and rejects statements whose mapping has been invalidated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from mdbs.catalog.model import Catalog, VirtualClass
from mdbs.errors import (
    StaleMapping,
    TypeMismatch,
    UnknownAttribute,
    UnknownClass,
    ViewNotSelectable,
)
from mdbs.gql.ast import (
    And,
    AttrRef,
    Comparison,
    Delete,
    Insert,
    Literal,
    Or,
    Predicate,
    Select,
    Statement,
    Update,
    conjoin,
    conjuncts,
)
from mdbs.gql.parser import parse_statement
from mdbs.types import CanonicalType, Value, widen_literal


@dataclass(frozen=True)
class TypedSelect:
    cls: VirtualClass
    projection: tuple[str, ...]
    predicate: Optional[Predicate]
    order_by: Optional[tuple[str, str]]
    limit: Optional[int]
    via_view: Optional[str] = None


@dataclass(frozen=True)
class TypedInsert:
    cls: VirtualClass
    attrs: tuple[str, ...]
    row: dict  # attr name (declared spelling) -> canonical value


@dataclass(frozen=True)
class TypedUpdate:
    cls: VirtualClass
    sets: tuple[tuple[str, Value], ...]
    predicate: Optional[Predicate]


@dataclass(frozen=True)
class TypedDelete:
    cls: VirtualClass
    predicate: Optional[Predicate]


TypedStatement = Union[TypedSelect, TypedInsert, TypedUpdate, TypedDelete]


def _numeric(t: CanonicalType) -> bool:
    return t in (CanonicalType.INT, CanonicalType.FLOAT)


def _resolve_attr(cls: VirtualClass, name: str):
    attr = cls.attribute(name)
    if attr is None:
        raise UnknownAttribute(f"{cls.name} has no attribute {name!r}")
    return attr


def bind_predicate(p: Predicate, cls: VirtualClass) -> Predicate:
    """Resolve attribute spellings and literal types against one class."""
    if isinstance(p, Comparison):
        left = _resolve_attr(cls, p.left)
        if isinstance(p.right, AttrRef):
            right = _resolve_attr(cls, p.right.name)
            if left.type != right.type and not (
                _numeric(left.type) and _numeric(right.type)
            ):
                raise TypeMismatch(
                    f"cannot compare {left.name} ({left.type}) with"
                    f" {right.name} ({right.type})"
                )
            return Comparison(left.name, p.op, AttrRef(right.name))
        value = p.right.value
        if value is not None:
            value = _fit_literal(value, left.type, left.name)
        return Comparison(left.name, p.op, Literal(value))
    if isinstance(p, And):
        return And(tuple(bind_predicate(item, cls) for item in p.items))
    return Or(tuple(bind_predicate(item, cls) for item in p.items))


def _fit_literal(value: Value, target: CanonicalType, attr_name: str) -> Value:
    # INT literals widen against FLOAT attributes; FLOAT literals may be
    # compared (not stored) against INT attributes.
    try:
        return widen_literal(value, target)
    except ValueError:
        if target is CanonicalType.INT and isinstance(value, float):
            return value
        raise TypeMismatch(
            f"literal {value!r} does not fit {attr_name} ({target})"
        ) from None


def _fit_stored_literal(value: Value, attr, cls_name: str) -> Value:
    if value is None:
        if not attr.nullable:
            raise TypeMismatch(f"{cls_name}.{attr.name} is not nullable")
        return None
    try:
        return widen_literal(value, attr.type)
    except ValueError:
        raise TypeMismatch(
            f"literal {value!r} does not fit {cls_name}.{attr.name} ({attr.type})"
        ) from None


def _resolve_target(catalog: Catalog, name: str, *, for_write: bool):
    cls = catalog.class_named(name)
    if cls is not None:
        return cls, None
    view = catalog.view_named(name)
    if view is not None:
        if for_write:
            raise ViewNotSelectable(f"cannot write through view {view.name!r}")
        return None, view
    raise UnknownClass(f"no class or view named {name!r}")


def _check_not_stale(catalog: Catalog, cls: VirtualClass, allow_stale: bool) -> None:
    if allow_stale:
        return
    rule = catalog.mapping_for(cls.name)
    if rule is not None and rule.stale:
        raise StaleMapping(
            f"mapping for {cls.name} is stale; re-run schema integration"
        )


def validate(
    statement: Statement, snapshot: Catalog, *, allow_stale: bool = False
) -> TypedStatement:
    if isinstance(statement, Select):
        return _validate_select(statement, snapshot, allow_stale)
    if isinstance(statement, Insert):
        return _validate_insert(statement, snapshot, allow_stale)
    if isinstance(statement, Update):
        return _validate_update(statement, snapshot, allow_stale)
    return _validate_delete(statement, snapshot, allow_stale)


def _validate_select(stmt: Select, catalog: Catalog, allow_stale: bool) -> TypedSelect:
    cls, view = _resolve_target(catalog, stmt.target, for_write=False)
    via_view = None
    if view is not None:
        stmt = _inline_view(stmt, view, catalog)
        via_view = view.name
        cls = catalog.class_named(stmt.target)
        if cls is None:
            raise UnknownClass(f"view {view.name!r} targets unknown {stmt.target!r}")
    _check_not_stale(catalog, cls, allow_stale)

    if stmt.projection is None:
        projection = cls.attr_names()
    else:
        projection = tuple(_resolve_attr(cls, name).name for name in stmt.projection)
    predicate = bind_predicate(stmt.predicate, cls) if stmt.predicate else None
    order_by = None
    if stmt.order_by is not None:
        order_by = (_resolve_attr(cls, stmt.order_by[0]).name, stmt.order_by[1])
    return TypedSelect(cls, projection, predicate, order_by, stmt.limit, via_view)


def _inline_view(outer: Select, view, catalog: Catalog) -> Select:
    body = parse_statement(view.query_text)
    if not isinstance(body, Select):
        raise ViewNotSelectable(f"view {view.name!r} body is not a SELECT")
    base = catalog.class_named(body.target)
    if base is None:
        raise UnknownClass(f"view {view.name!r} targets unknown {body.target!r}")
    view_cols = body.projection if body.projection is not None else base.attr_names()
    exposed = {name.lower(): name for name in view_cols}

    def through(name: str) -> str:
        hit = exposed.get(name.lower())
        if hit is None:
            raise UnknownAttribute(f"view {view.name!r} does not expose {name!r}")
        return hit

    projection = (
        tuple(view_cols)
        if outer.projection is None
        else tuple(through(n) for n in outer.projection)
    )
    outer_pred = _rewrite_pred(outer.predicate, through) if outer.predicate else None
    predicate = conjoin(conjuncts(body.predicate) + conjuncts(outer_pred))
    order_by = None
    if outer.order_by is not None:
        order_by = (through(outer.order_by[0]), outer.order_by[1])
    return Select(body.target, projection, predicate, order_by, outer.limit)


def _rewrite_pred(p: Predicate, through) -> Predicate:
    if isinstance(p, Comparison):
        right = p.right
        if isinstance(right, AttrRef):
            right = AttrRef(through(right.name))
        return Comparison(through(p.left), p.op, right)
    if isinstance(p, And):
        return And(tuple(_rewrite_pred(item, through) for item in p.items))
    return Or(tuple(_rewrite_pred(item, through) for item in p.items))


def _validate_insert(stmt: Insert, catalog: Catalog, allow_stale: bool) -> TypedInsert:
    cls, _ = _resolve_target(catalog, stmt.target, for_write=True)
    _check_not_stale(catalog, cls, allow_stale)
    if len(stmt.attrs) != len(stmt.values):
        raise TypeMismatch(
            f"{len(stmt.attrs)} attributes but {len(stmt.values)} values"
        )
    row: dict[str, Value] = {}
    names: list[str] = []
    for name, lit in zip(stmt.attrs, stmt.values):
        attr = _resolve_attr(cls, name)
        if attr.name in row:
            raise TypeMismatch(f"attribute {attr.name!r} listed twice")
        row[attr.name] = _fit_stored_literal(lit.value, attr, cls.name)
        names.append(attr.name)
    for attr in cls.attributes:
        if not attr.nullable and attr.name not in row:
            raise TypeMismatch(f"non-nullable {cls.name}.{attr.name} missing from row")
    return TypedInsert(cls, tuple(names), row)


def _validate_update(stmt: Update, catalog: Catalog, allow_stale: bool) -> TypedUpdate:
    cls, _ = _resolve_target(catalog, stmt.target, for_write=True)
    _check_not_stale(catalog, cls, allow_stale)
    sets: list[tuple[str, Value]] = []
    seen: set[str] = set()
    for name, lit in stmt.sets:
        attr = _resolve_attr(cls, name)
        if attr.name in seen:
            raise TypeMismatch(f"attribute {attr.name!r} assigned twice")
        seen.add(attr.name)
        sets.append((attr.name, _fit_stored_literal(lit.value, attr, cls.name)))
    predicate = bind_predicate(stmt.predicate, cls) if stmt.predicate else None
    return TypedUpdate(cls, tuple(sets), predicate)


def _validate_delete(stmt: Delete, catalog: Catalog, allow_stale: bool) -> TypedDelete:
    cls, _ = _resolve_target(catalog, stmt.target, for_write=True)
    _check_not_stale(catalog, cls, allow_stale)
    predicate = bind_predicate(stmt.predicate, cls) if stmt.predicate else None
    return TypedDelete(cls, predicate)
