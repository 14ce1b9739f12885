"""Predicate evaluation under two-valued NULL semantics.

Any comparison touching NULL is false (no three-valued logic).  This
evaluator backs the engine paths (routing, pushed predicates, residual
filters); the reference evaluator keeps its own copy on purpose.
"""
from __future__ import annotations

from typing import Mapping

from mdbs.gql.ast import And, AttrRef, Comparison, Or, Predicate
from mdbs.types import Value


def compare(op: str, left: Value, right: Value) -> bool:
    if left is None or right is None:
        return False
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise ValueError(f"unknown comparison operator {op!r}")


def eval_predicate(p: Predicate, row: Mapping[str, Value]) -> bool:
    if isinstance(p, Comparison):
        left = row.get(p.left)
        right = row.get(p.right.name) if isinstance(p.right, AttrRef) else p.right.value
        return compare(p.op, left, right)
    if isinstance(p, And):
        return all(eval_predicate(item, row) for item in p.items)
    if isinstance(p, Or):
        return any(eval_predicate(item, row) for item in p.items)
    raise TypeError(f"not a predicate node: {p!r}")
