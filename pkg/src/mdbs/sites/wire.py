"""JSON codecs for the sub-query and sub-write wire payloads."""
from __future__ import annotations

from typing import Optional

from mdbs.catalog.model import AttributeDef, LocalClass, LocalSchemaDescriptor, StorageDescriptor
from mdbs.gql.ast import And, AttrRef, Comparison, Literal, Or, Predicate
from mdbs.plan import OutputCol, SubQuery, SubWrite
from mdbs.types import CanonicalType


def _col_to_json(col: OutputCol) -> dict:
    doc: dict = {"out": col.out, "local": col.local, "out_type": col.out_type.value}
    if col.source_type is not None:
        doc["source_type"] = col.source_type.value
    if col.cast_to is not None:
        doc["cast_to"] = col.cast_to.value
    if col.local is None:
        doc["const"] = col.const
    if col.has_default:
        doc["default"] = col.default
    return doc


def _col_from_json(doc: dict) -> OutputCol:
    return OutputCol(
        out=doc["out"],
        local=doc.get("local"),
        out_type=CanonicalType(doc["out_type"]),
        source_type=CanonicalType(doc["source_type"]) if "source_type" in doc else None,
        cast_to=CanonicalType(doc["cast_to"]) if "cast_to" in doc else None,
        const=doc.get("const"),
        default=doc.get("default"),
        has_default="default" in doc,
    )


# predicates travel structurally: local attribute names may collide with
# query-language keywords, so rendered text would not round-trip
def _pred_to_json(predicate: Optional[Predicate]) -> Optional[dict]:
    if predicate is None:
        return None
    if isinstance(predicate, Comparison):
        if isinstance(predicate.right, AttrRef):
            right: dict = {"attr": predicate.right.name}
        else:
            right = {"lit": predicate.right.value}
        return {"cmp": predicate.op, "left": predicate.left, "right": right}
    op = "and" if isinstance(predicate, And) else "or"
    return {op: [_pred_to_json(item) for item in predicate.items]}


def _pred_from_json(doc: Optional[dict]) -> Optional[Predicate]:
    if doc is None:
        return None
    if "cmp" in doc:
        right_doc = doc["right"]
        if "attr" in right_doc:
            right = AttrRef(right_doc["attr"])
        else:
            right = Literal(right_doc["lit"])
        return Comparison(doc["left"], doc["cmp"], right)
    if "and" in doc:
        return And(tuple(_pred_from_json(item) for item in doc["and"]))
    return Or(tuple(_pred_from_json(item) for item in doc["or"]))


def _casts_to_json(casts) -> list[list[str]]:
    return [[local, src.value, dst.value] for local, src, dst in casts]


def _casts_from_json(items) -> tuple:
    return tuple(
        (local, CanonicalType(src), CanonicalType(dst)) for local, src, dst in items
    )


def subquery_to_json(sq: SubQuery) -> dict:
    return {
        "site": sq.site_id,
        "local_class": sq.local_class,
        "columns": [_col_to_json(c) for c in sq.columns],
        "predicate": _pred_to_json(sq.predicate),
        "pred_casts": _casts_to_json(sq.pred_casts),
        "pred_cols": [_col_to_json(c) for c in sq.pred_cols],
        "purpose": sq.purpose,
    }


def subquery_from_json(doc: dict) -> SubQuery:
    return SubQuery(
        site_id=doc["site"],
        local_class=doc["local_class"],
        columns=tuple(_col_from_json(c) for c in doc["columns"]),
        predicate=_pred_from_json(doc.get("predicate")),
        pred_casts=_casts_from_json(doc.get("pred_casts", [])),
        pred_cols=tuple(_col_from_json(c) for c in doc.get("pred_cols", [])),
        purpose=doc.get("purpose", "DATA"),
    )


def subwrite_to_json(sw: SubWrite) -> dict:
    return {
        "site": sw.site_id,
        "local_class": sw.local_class,
        "kind": sw.kind,
        "values": [[name, value] for name, value in sw.values],
        "predicate": _pred_to_json(sw.predicate),
        "pred_casts": _casts_to_json(sw.pred_casts),
    }


def subwrite_from_json(doc: dict) -> SubWrite:
    return SubWrite(
        site_id=doc["site"],
        local_class=doc["local_class"],
        kind=doc["kind"],
        values=tuple((name, value) for name, value in doc.get("values", [])),
        predicate=_pred_from_json(doc.get("predicate")),
        pred_casts=_casts_from_json(doc.get("pred_casts", [])),
    )


def local_schema_to_json(ls: LocalSchemaDescriptor) -> dict:
    return {
        "site": ls.site_id,
        "classes": [
            {
                "name": c.name,
                "attributes": [
                    {"name": a.name, "type": a.type.value, "nullable": a.nullable}
                    for a in c.attributes
                ],
            }
            for c in ls.classes
        ],
        "storage": {"format": ls.storage.format, "location": ls.storage.location},
    }


def local_schema_from_json(doc: dict) -> LocalSchemaDescriptor:
    return LocalSchemaDescriptor(
        site_id=doc["site"],
        classes=tuple(
            LocalClass(
                name=c["name"],
                attributes=tuple(
                    AttributeDef(
                        name=a["name"],
                        type=CanonicalType(a["type"]),
                        nullable=a.get("nullable", True),
                    )
                    for a in c["attributes"]
                ),
            )
            for c in doc["classes"]
        ),
        storage=StorageDescriptor(
            format=doc["storage"]["format"], location=doc["storage"]["location"]
        ),
    )
