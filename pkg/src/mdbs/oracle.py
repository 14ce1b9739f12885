"""Testing oracle: eager materialization plus a brute-force evaluator.

materialize() pulls every fragment completely and assembles each class
extension the way the mapping defines it; reference_evaluate() is a
naive single-table scan over that extension.  Neither function touches
the decomposer or the composer, so an agreement between the federated
path and this one is meaningful evidence.
"""
from __future__ import annotations

from typing import Mapping

from mdbs.catalog.model import Catalog, VirtualClass, fold
from mdbs.decompose import _output_col
from mdbs.errors import SiteUnavailable
from mdbs.execute import ExecOptions, ResultSet, Row
from mdbs.gql.ast import And, AttrRef, Comparison, Or, Predicate
from mdbs.gql.typecheck import TypedSelect
from mdbs.plan import SubQuery
from mdbs.sites.connect import SiteConnection
from mdbs.types import CanonicalType, Value


class MaterializedDb:
    """Fully composed global extensions, one table per virtual class."""

    def __init__(self, tables: dict[str, ResultSet]):
        self.tables = tables

    def table(self, class_name: str) -> ResultSet:
        return self.tables[fold(class_name)]


def _full_pull(
    snapshot: Catalog, cls: VirtualClass, frag, connections, timeout_s: float
) -> tuple[list[str], list[Row]]:
    attrs = [a.name for a in cls.attributes]
    columns = tuple(_output_col(snapshot, cls, frag, a) for a in attrs)
    sq = SubQuery(site_id=frag.site_id, local_class=frag.local_class, columns=columns)
    conn = connections.get(frag.site_id)
    if conn is None:
        raise SiteUnavailable(f"no connection for site {frag.site_id!r}")
    try:
        rows, _ = conn.run_subquery(sq, timeout_s)
    except Exception as exc:
        raise SiteUnavailable(f"site {frag.site_id}: {exc}") from None
    fixed = []
    for row in rows:
        fixed.append(
            [
                _normalize(value, col.out_type)
                for value, col in zip(row, columns)
            ]
        )
    return attrs, fixed


def _normalize(value: Value, out_type: CanonicalType) -> Value:
    if (
        value is not None
        and out_type is CanonicalType.FLOAT
        and isinstance(value, int)
        and not isinstance(value, bool)
    ):
        return float(value)
    return value


def materialize(
    snapshot: Catalog,
    connections: Mapping[str, SiteConnection],
    opts: ExecOptions = ExecOptions(),
) -> MaterializedDb:
    timeout_s = opts.timeout_ms / 1000.0
    tables: dict[str, ResultSet] = {}
    for cls in snapshot.classes:
        rule = snapshot.mapping_for(cls.name)
        if rule is None:
            continue
        attrs = [a.name for a in cls.attributes]
        pulls = [
            _full_pull(snapshot, cls, frag, connections, timeout_s)
            for frag in rule.fragments
        ]
        if rule.kind == "HORIZONTAL":
            rows: list[Row] = []
            for _, part in pulls:
                rows.extend(part)
        else:
            key_pos = attrs.index(cls.attribute(rule.join_key).name)
            owned = [
                {fold(m.global_attr) for m in frag.attr_maps}
                for frag in rule.fragments
            ]
            rows = [list(r) for r in pulls[0][1]]
            have = set(owned[0])
            for frag_owned, (_, part) in zip(owned[1:], pulls[1:]):
                index: dict = {}
                for row in part:
                    k = row[key_pos]
                    if k is None:
                        continue
                    index.setdefault(k, []).append(row)
                joined: list[Row] = []
                fill = frag_owned - have
                for lrow in rows:
                    k = lrow[key_pos]
                    if k is None:
                        continue
                    for rrow in index.get(k, ()):
                        merged = list(lrow)
                        for i, name in enumerate(attrs):
                            if fold(name) in fill:
                                merged[i] = rrow[i]
                        joined.append(merged)
                rows = joined
                have |= frag_owned
        tables[fold(cls.name)] = ResultSet(columns=tuple(attrs), rows=rows)
    return MaterializedDb(tables)


# -- reference evaluation ---------------------------------------------------
# Deliberately re-implements comparison and ordering instead of importing
# the engine's versions.

def _ref_compare(op: str, left: Value, right: Value) -> bool:
    if left is None or right is None:
        return False
    return {
        "=": left == right,
        "!=": left != right,
        "<": left < right,
        "<=": left <= right,
        ">": left > right,
        ">=": left >= right,
    }[op]


def _ref_eval(p: Predicate, row: dict) -> bool:
    if isinstance(p, Comparison):
        right = row.get(p.right.name) if isinstance(p.right, AttrRef) else p.right.value
        return _ref_compare(p.op, row.get(p.left), right)
    if isinstance(p, And):
        for item in p.items:
            if not _ref_eval(item, row):
                return False
        return True
    if isinstance(p, Or):
        for item in p.items:
            if _ref_eval(item, row):
                return True
        return False
    raise TypeError(f"not a predicate: {p!r}")


def reference_evaluate(ts: TypedSelect, db: MaterializedDb) -> ResultSet:
    table = db.table(ts.cls.name)
    cols = list(table.columns)
    dicts = [dict(zip(cols, row)) for row in table.rows]

    if ts.predicate is not None:
        dicts = [d for d in dicts if _ref_eval(ts.predicate, d)]

    if ts.order_by is not None:
        attr, direction = ts.order_by
        nulls = [d for d in dicts if d[attr] is None]
        present = [d for d in dicts if d[attr] is not None]
        present.sort(key=lambda d: d[attr], reverse=(direction == "DESC"))
        dicts = (present + nulls) if direction == "DESC" else (nulls + present)

    if ts.limit is not None:
        dicts = dicts[: ts.limit]

    rows = [[d[name] for name in ts.projection] for d in dicts]
    return ResultSet(columns=tuple(ts.projection), rows=rows)
