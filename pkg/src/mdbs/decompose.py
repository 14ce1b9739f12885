"""Rewriting validated statements into per-site plans.

Decomposition is rule-driven and deterministic: no cost model, no
statistics.  Horizontal classes become a union of fragment scans with
any non-pushable filter re-applied after the union; vertical classes
become an inner join over the minimal fragment set that covers the
attributes the statement needs.
"""
from __future__ import annotations

from itertools import combinations
from typing import Optional

from mdbs.catalog.model import Catalog, Fragment, MappingRule, VirtualClass, fold
from mdbs.errors import (
    AmbiguousRoute,
    NoRoute,
    StaleMapping,
    TypeMismatch,
    UnsupportedResidualWrite,
)
from mdbs.gql.ast import (
    And,
    AttrRef,
    Comparison,
    Or,
    Predicate,
    Select,
    conjoin,
    conjuncts,
    predicate_attrs,
    render_statement,
)
from mdbs.gql.typecheck import TypedDelete, TypedInsert, TypedSelect, TypedUpdate
from mdbs.plan import (
    DATA,
    KEY_SIDE,
    DecompositionPlan,
    Filter,
    JoinOn,
    Leaf,
    Limit,
    Node,
    OutputCol,
    PredCast,
    Project,
    Sort,
    SubQuery,
    SubWrite,
    UnionAll,
    WritePlan,
)
from mdbs.predicate import eval_predicate
from mdbs.types import CanonicalType, Value, render_cell


def _pushable(unit: Predicate, frag: Fragment, local_cls) -> bool:
    """A unit can run at a site iff every attribute it touches is mapped
    there through a real local column; default-only maps materialize as
    constants and cannot be referenced locally."""
    for name in predicate_attrs(unit):
        m = frag.map_for(name)
        if m is None:
            return False
        if local_cls is not None and local_cls.attribute(m.local_attr) is None:
            return False
    return True


def _local_cls(catalog: Catalog, frag: Fragment):
    ls = catalog.local_schema_for(frag.site_id)
    return ls.local_class(frag.local_class) if ls is not None else None


def _localize(
    unit: Predicate, frag: Fragment, casts: dict[str, tuple[CanonicalType, CanonicalType]],
    cls: VirtualClass,
) -> Predicate:
    if isinstance(unit, Comparison):
        left_map = frag.map_for(unit.left)
        right = unit.right
        _note_cast(unit.left, frag, casts, cls)
        if isinstance(right, AttrRef):
            right_map = frag.map_for(right.name)
            _note_cast(right.name, frag, casts, cls)
            right = AttrRef(right_map.local_attr)
        return Comparison(left_map.local_attr, unit.op, right)
    if isinstance(unit, And):
        return And(tuple(_localize(u, frag, casts, cls) for u in unit.items))
    return Or(tuple(_localize(u, frag, casts, cls) for u in unit.items))


def _note_cast(global_attr, frag, casts, cls) -> None:
    m = frag.map_for(global_attr)
    if m.cast_from is not None:
        casts[m.local_attr] = (m.cast_from, cls.attribute(global_attr).type)


def split_predicate(
    p: Optional[Predicate], frag: Fragment, cls: VirtualClass, local_cls=None
) -> tuple[Optional[Predicate], Optional[Predicate], tuple[PredCast, ...]]:
    """Split into (pushed, residual) so that pushed AND residual == p.

    Pushed conjuncts are rewritten into the fragment's local attribute
    names; an OR group moves only as a whole.  Also returns the casts
    the site must apply before evaluating the pushed part.
    """
    if p is None:
        return None, None, ()
    pushed: list[Predicate] = []
    residual: list[Predicate] = []
    casts: dict[str, tuple[CanonicalType, CanonicalType]] = {}
    for unit in conjuncts(p):
        if _pushable(unit, frag, local_cls):
            pushed.append(_localize(unit, frag, casts, cls))
        else:
            residual.append(unit)
    cast_list = tuple(sorted((k, v[0], v[1]) for k, v in casts.items()))
    return conjoin(tuple(pushed)), conjoin(tuple(residual)), cast_list


def _source_type(catalog: Catalog, frag: Fragment, local_attr: str) -> Optional[CanonicalType]:
    ls = catalog.local_schema_for(frag.site_id)
    if ls is None:
        return None
    local_cls = ls.local_class(frag.local_class)
    if local_cls is None:
        return None
    attr = local_cls.attribute(local_attr)
    return attr.type if attr is not None else None


def _output_col(catalog: Catalog, cls: VirtualClass, frag: Fragment, global_attr: str) -> OutputCol:
    gattr = cls.attribute(global_attr)
    m = frag.map_for(global_attr)
    if m is None:
        return OutputCol(out=gattr.name, local=None, out_type=gattr.type, const=None)
    src = _source_type(catalog, frag, m.local_attr)
    if src is None:
        const = m.default_value if m.has_default else None
        return OutputCol(out=gattr.name, local=None, out_type=gattr.type, const=const)
    return OutputCol(
        out=gattr.name,
        local=m.local_attr,
        out_type=gattr.type,
        source_type=src,
        cast_to=gattr.type if m.cast_from is not None else None,
        default=m.default_value,
        has_default=m.has_default,
    )


def _mapping(catalog: Catalog, cls: VirtualClass) -> MappingRule:
    rule = catalog.mapping_for(cls.name)
    if rule is None:
        raise StaleMapping(f"no mapping rule for {cls.name}")
    if rule.stale:
        raise StaleMapping(f"mapping for {cls.name} is stale")
    return rule


def _needed_in_order(cls: VirtualClass, needed: set[str]) -> tuple[str, ...]:
    return tuple(a.name for a in cls.attributes if fold(a.name) in needed)


def decompose_select(ts: TypedSelect, snapshot: Catalog) -> DecompositionPlan:
    cls = ts.cls
    rule = _mapping(snapshot, cls)
    stmt_text = render_statement(
        Select(cls.name, ts.projection, ts.predicate, ts.order_by, ts.limit)
    )
    if rule.kind == "HORIZONTAL":
        return _decompose_horizontal(ts, snapshot, rule, stmt_text)
    return _decompose_vertical(ts, snapshot, rule, stmt_text)


def _decompose_horizontal(
    ts: TypedSelect, snapshot: Catalog, rule: MappingRule, stmt_text: str
) -> DecompositionPlan:
    cls = ts.cls
    splits = [
        split_predicate(ts.predicate, frag, cls, _local_cls(snapshot, frag))
        for frag in rule.fragments
    ]

    residual_units: list[Predicate] = []
    for _, residual, _ in splits:
        for unit in conjuncts(residual):
            if unit not in residual_units:
                residual_units.append(unit)
    residual = conjoin(tuple(residual_units))

    needed = {fold(a) for a in ts.projection}
    needed |= {fold(a) for a in predicate_attrs(residual)}
    if ts.order_by is not None:
        needed.add(fold(ts.order_by[0]))
    out_attrs = _needed_in_order(cls, needed)

    subqueries = []
    leaves = []
    for i, (frag, (pushed, _, casts)) in enumerate(zip(rule.fragments, splits)):
        columns = tuple(_output_col(snapshot, cls, frag, a) for a in out_attrs)
        frag_local_cls = _local_cls(snapshot, frag)
        pushed_globals = {
            fold(a)
            for unit in conjuncts(ts.predicate)
            if _pushable(unit, frag, frag_local_cls)
            for a in predicate_attrs(unit)
        }
        pred_cols = tuple(
            _output_col(snapshot, cls, frag, a)
            for a in _needed_in_order(cls, pushed_globals - needed)
        )
        subqueries.append(
            SubQuery(
                site_id=frag.site_id,
                local_class=frag.local_class,
                columns=columns,
                predicate=pushed,
                pred_casts=casts,
                pred_cols=pred_cols,
                purpose=DATA,
            )
        )
        leaves.append(Leaf(index=i, site_id=frag.site_id))

    tree: Node = UnionAll(tuple(leaves)) if len(leaves) > 1 else leaves[0]
    tree = _finish_tree(tree, residual, ts)
    return DecompositionPlan(
        statement_text=stmt_text,
        catalog_version=snapshot.version,
        class_name=cls.name,
        kind="HORIZONTAL",
        subqueries=tuple(subqueries),
        tree=tree,
        columns=ts.projection,
    )


def _choose_fragments(rule: MappingRule, needed: set[str]) -> tuple[int, ...]:
    """Smallest fragment subset covering the needed attributes; earliest
    declaration order breaks ties."""
    indices = range(len(rule.fragments))
    for size in range(1, len(rule.fragments) + 1):
        for combo in combinations(indices, size):
            covered = set()
            for i in combo:
                covered |= rule.fragments[i].mapped_globals()
            if needed <= covered:
                return combo
    return tuple(indices)  # unreachable for valid mappings


def _decompose_vertical(
    ts: TypedSelect, snapshot: Catalog, rule: MappingRule, stmt_text: str
) -> DecompositionPlan:
    cls = ts.cls
    key = rule.join_key
    # fragment choice must cover everything the statement touches
    needed = {fold(a) for a in ts.projection}
    needed |= {fold(a) for a in predicate_attrs(ts.predicate)}
    if ts.order_by is not None:
        needed.add(fold(ts.order_by[0]))

    chosen = _choose_fragments(rule, needed)
    multi = len(chosen) > 1

    # every predicate unit runs at its first owner, or after the join
    pushed_by_frag: dict[int, list[Predicate]] = {i: [] for i in chosen}
    residual_units: list[Predicate] = []
    for unit in conjuncts(ts.predicate):
        owner = next(
            (
                i
                for i in chosen
                if _pushable(
                    unit, rule.fragments[i], _local_cls(snapshot, rule.fragments[i])
                )
            ),
            None,
        )
        if owner is None:
            residual_units.append(unit)
        else:
            pushed_by_frag[owner].append(unit)
    residual = conjoin(tuple(residual_units))

    # the joined output only carries what survives pushdown
    want = {fold(a) for a in ts.projection}
    want |= {fold(a) for a in predicate_attrs(residual)}
    if ts.order_by is not None:
        want.add(fold(ts.order_by[0]))
    if multi:
        want.add(fold(key))
    assigned: dict[str, int] = {}
    for name in want:
        for i in chosen:
            if name in rule.fragments[i].mapped_globals():
                assigned[name] = i
                break

    subqueries = []
    leaves = []
    for pos, i in enumerate(chosen):
        frag = rule.fragments[i]
        mine = {a for a, owner in assigned.items() if owner == i}
        if multi:
            mine.add(fold(key))
        out_attrs = _needed_in_order(cls, mine)
        casts: dict[str, tuple[CanonicalType, CanonicalType]] = {}
        pushed_units = tuple(
            _localize(u, frag, casts, cls) for u in pushed_by_frag[i]
        )
        pushed_globals: set[str] = set()
        for unit in pushed_by_frag[i]:
            pushed_globals |= {fold(a) for a in predicate_attrs(unit)}
        pred_cols = tuple(
            _output_col(snapshot, cls, frag, a)
            for a in _needed_in_order(cls, pushed_globals - set(mine))
        )
        columns = tuple(_output_col(snapshot, cls, frag, a) for a in out_attrs)
        non_key = [c for c in columns if fold(c.out) != fold(key)]
        subqueries.append(
            SubQuery(
                site_id=frag.site_id,
                local_class=frag.local_class,
                columns=columns,
                predicate=conjoin(pushed_units),
                pred_casts=tuple(sorted((k, v[0], v[1]) for k, v in casts.items())),
                pred_cols=pred_cols,
                purpose=KEY_SIDE if multi and not non_key else DATA,
            )
        )
        leaves.append(Leaf(index=pos, site_id=frag.site_id))

    tree: Node = (
        JoinOn(cls.attribute(key).name, tuple(leaves)) if multi else leaves[0]
    )
    tree = _finish_tree(tree, residual, ts)
    return DecompositionPlan(
        statement_text=stmt_text,
        catalog_version=snapshot.version,
        class_name=cls.name,
        kind="VERTICAL",
        subqueries=tuple(subqueries),
        tree=tree,
        columns=ts.projection,
    )


def _finish_tree(tree: Node, residual: Optional[Predicate], ts: TypedSelect) -> Node:
    if residual is not None:
        tree = Filter(residual, tree)
    if ts.order_by is not None:
        tree = Sort(ts.order_by[0], ts.order_by[1], tree)
    if ts.limit is not None:
        tree = Limit(ts.limit, tree)
    return Project(ts.projection, tree)


# -- writes -----------------------------------------------------------------

def _to_local_value(value: Value, local_type: CanonicalType, attr_name: str) -> Value:
    """Render a global value in the site's representation (inverse of the
    declared read-side cast)."""
    if value is None:
        return None
    if local_type is CanonicalType.STRING and not isinstance(value, str):
        return render_cell(value)
    if local_type is CanonicalType.INT and isinstance(value, float):
        if value != int(value):
            raise TypeMismatch(
                f"cannot store non-integral {value!r} into INT column {attr_name!r}"
            )
        return int(value)
    if local_type is CanonicalType.FLOAT and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _insert_values(
    snapshot: Catalog, cls: VirtualClass, frag: Fragment, row: dict
) -> tuple[tuple[str, Value], ...]:
    values = []
    for m in frag.attr_maps:
        src = _source_type(snapshot, frag, m.local_attr)
        if src is None:
            continue  # default-only map, nothing stored at the site
        value = row.get(cls.attribute(m.global_attr).name)
        values.append((m.local_attr, _to_local_value(value, src, m.local_attr)))
    return tuple(values)


def decompose_write(tw, snapshot: Catalog) -> WritePlan:
    if isinstance(tw, TypedInsert):
        return _decompose_insert(tw, snapshot)
    if isinstance(tw, TypedUpdate):
        return _decompose_update(tw, snapshot)
    if isinstance(tw, TypedDelete):
        return _decompose_delete(tw, snapshot)
    raise TypeError(f"not a write statement: {tw!r}")


def _decompose_insert(tw: TypedInsert, snapshot: Catalog) -> WritePlan:
    cls = tw.cls
    rule = _mapping(snapshot, cls)
    from mdbs.gql.ast import Insert, Literal

    stmt_text = render_statement(
        Insert(cls.name, tw.attrs, tuple(Literal(tw.row[a]) for a in tw.attrs))
    )
    full_row = {a.name: tw.row.get(a.name) for a in cls.attributes}

    if rule.kind == "HORIZONTAL":
        if len(rule.fragments) == 1:
            targets = [rule.fragments[0]]
        else:
            targets = [
                f
                for f in rule.fragments
                if f.route_when is not None and eval_predicate(f.route_when, full_row)
            ]
            if not targets:
                raise NoRoute(f"no fragment routes this {cls.name} row")
            if len(targets) > 1:
                names = ", ".join(f"{f.site_id}.{f.local_class}" for f in targets)
                raise AmbiguousRoute(f"row routes to multiple fragments: {names}")
    else:
        targets = list(rule.fragments)

    subwrites = tuple(
        SubWrite(
            site_id=f.site_id,
            local_class=f.local_class,
            kind="INSERT",
            values=_insert_values(snapshot, cls, f, full_row),
        )
        for f in targets
    )
    return WritePlan(stmt_text, snapshot.version, cls.name, rule.kind, subwrites)


def _pushed_whole(
    snapshot: Catalog, predicate: Optional[Predicate], frag: Fragment, cls: VirtualClass, action: str
):
    pushed, residual, casts = split_predicate(
        predicate, frag, cls, _local_cls(snapshot, frag)
    )
    if residual is not None:
        raise UnsupportedResidualWrite(
            f"{action} predicate does not fully push to {frag.site_id}.{frag.local_class}"
        )
    return pushed, casts


def _decompose_update(tw: TypedUpdate, snapshot: Catalog) -> WritePlan:
    cls = tw.cls
    rule = _mapping(snapshot, cls)
    from mdbs.gql.ast import Literal, Update

    stmt_text = render_statement(
        Update(cls.name, tuple((a, Literal(v)) for a, v in tw.sets), tw.predicate)
    )
    set_names = {fold(a) for a, _ in tw.sets}
    if rule.kind == "HORIZONTAL":
        targets = list(rule.fragments)
    else:
        targets = [f for f in rule.fragments if f.mapped_globals() & set_names]

    subwrites = []
    for frag in targets:
        pushed, casts = _pushed_whole(snapshot, tw.predicate, frag, cls, "UPDATE")
        values = []
        for attr, value in tw.sets:
            m = frag.map_for(attr)
            if m is None or m.local_attr is None:
                continue
            src = _source_type(snapshot, frag, m.local_attr)
            if src is None:
                continue
            values.append((m.local_attr, _to_local_value(value, src, m.local_attr)))
        subwrites.append(
            SubWrite(
                site_id=frag.site_id,
                local_class=frag.local_class,
                kind="UPDATE",
                values=tuple(values),
                predicate=pushed,
                pred_casts=casts,
            )
        )
    return WritePlan(stmt_text, snapshot.version, cls.name, rule.kind, tuple(subwrites))


def _decompose_delete(tw: TypedDelete, snapshot: Catalog) -> WritePlan:
    cls = tw.cls
    rule = _mapping(snapshot, cls)
    from mdbs.gql.ast import Delete

    stmt_text = render_statement(Delete(cls.name, tw.predicate))
    subwrites = []
    for frag in rule.fragments:
        pushed, casts = _pushed_whole(snapshot, tw.predicate, frag, cls, "DELETE")
        subwrites.append(
            SubWrite(
                site_id=frag.site_id,
                local_class=frag.local_class,
                kind="DELETE",
                predicate=pushed,
                pred_casts=casts,
            )
        )
    return WritePlan(stmt_text, snapshot.version, cls.name, rule.kind, tuple(subwrites))


def explain(plan, snapshot: Catalog) -> dict:
    """Deterministic JSON rendering of a plan, sub-queries in their local
    language."""
    from mdbs.plan import tree_to_json
    from mdbs.sites.translate import translate

    doc = {
        "statement": plan.statement_text,
        "catalog_version": plan.catalog_version,
        "subqueries": [],
    }
    is_read = isinstance(plan, DecompositionPlan)
    items = plan.subqueries if is_read else plan.subwrites
    for item in items:
        site = snapshot.site_named(item.site_id)
        adapter_kind = site.adapter_kind if site is not None else "CSV"
        doc["subqueries"].append(
            {
                "site": item.site_id,
                "purpose": item.purpose if is_read else item.kind,
                "local_text": translate(adapter_kind, item),
            }
        )
    if isinstance(plan, DecompositionPlan):
        doc["composition"] = tree_to_json(plan.tree)
    return doc
