"""Plan shapes produced by decomposition and consumed by execution.

A read plan is a set of per-site sub-queries plus a composition tree;
a write plan is a set of per-site sub-writes.  Sub-queries speak the
site's local vocabulary only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from mdbs.gql.ast import Predicate, render_predicate
from mdbs.types import CanonicalType, Value

DATA = "DATA"
KEY_SIDE = "KEY_SIDE"


@dataclass(frozen=True)
class OutputCol:
    """One output column of a sub-query.

    ``local`` is the site-side attribute; None makes this a constant
    column (unmapped global attribute or pure default).  ``cast_to``
    is the declared coercion applied after reading the local value;
    ``out_type`` is the type the column has after it.
    """

    out: str
    local: Optional[str]
    out_type: CanonicalType = CanonicalType.STRING
    source_type: Optional[CanonicalType] = None
    cast_to: Optional[CanonicalType] = None
    const: Value = None
    default: Value = None
    has_default: bool = False


# (local attribute, source type, target type) for every predicate
# reference that needs a cast before comparison.
PredCast = tuple[str, CanonicalType, CanonicalType]


@dataclass(frozen=True)
class SubQuery:
    site_id: str
    local_class: str
    columns: tuple[OutputCol, ...]
    predicate: Optional[Predicate] = None  # local attribute names
    pred_casts: tuple[PredCast, ...] = ()
    # materialization specs for predicate attributes not among the output
    # columns (casts and absent-field defaults must match the read path)
    pred_cols: tuple[OutputCol, ...] = ()
    purpose: str = DATA


@dataclass(frozen=True)
class SubWrite:
    site_id: str
    local_class: str
    kind: str  # INSERT | UPDATE | DELETE
    values: tuple[tuple[str, Value], ...] = ()  # local column -> local value
    predicate: Optional[Predicate] = None
    pred_casts: tuple[PredCast, ...] = ()


# -- composition tree -------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    index: int  # position in DecompositionPlan.subqueries
    site_id: str


@dataclass(frozen=True)
class UnionAll:
    inputs: tuple["Node", ...]


@dataclass(frozen=True)
class JoinOn:
    key: str
    inputs: tuple["Node", ...]


@dataclass(frozen=True)
class Filter:
    predicate: Predicate  # global attribute names
    input: "Node"


@dataclass(frozen=True)
class Sort:
    attr: str
    direction: str  # ASC | DESC
    input: "Node"


@dataclass(frozen=True)
class Limit:
    n: int
    input: "Node"


@dataclass(frozen=True)
class Project:
    attrs: tuple[str, ...]
    input: "Node"


Node = Union[Leaf, UnionAll, JoinOn, Filter, Sort, Limit, Project]


@dataclass(frozen=True)
class DecompositionPlan:
    statement_text: str
    catalog_version: int
    class_name: str
    kind: str  # HORIZONTAL | VERTICAL
    subqueries: tuple[SubQuery, ...]
    tree: Node
    columns: tuple[str, ...]  # final output columns


@dataclass(frozen=True)
class WritePlan:
    statement_text: str
    catalog_version: int
    class_name: str
    kind: str  # mapping kind
    subwrites: tuple[SubWrite, ...]


def tree_to_json(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"op": "SUBQUERY", "index": node.index, "site": node.site_id}
    if isinstance(node, UnionAll):
        return {"op": "UNION_ALL", "inputs": [tree_to_json(n) for n in node.inputs]}
    if isinstance(node, JoinOn):
        return {
            "op": "JOIN_ON",
            "key": node.key,
            "inputs": [tree_to_json(n) for n in node.inputs],
        }
    if isinstance(node, Filter):
        return {
            "op": "FILTER",
            "predicate": render_predicate(node.predicate),
            "input": tree_to_json(node.input),
        }
    if isinstance(node, Sort):
        return {
            "op": "SORT",
            "attr": node.attr,
            "direction": node.direction,
            "input": tree_to_json(node.input),
        }
    if isinstance(node, Limit):
        return {"op": "LIMIT", "n": node.n, "input": tree_to_json(node.input)}
    return {
        "op": "PROJECT",
        "attrs": list(node.attrs),
        "input": tree_to_json(node.input),
    }
