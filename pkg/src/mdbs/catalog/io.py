"""Catalog document reading and canonical serialization.

The on-disk form is one JSON document; ``load_catalog`` only enforces
shape and name uniqueness, deeper semantic checks live in validate.
"""
from __future__ import annotations

import json
from typing import Any

from mdbs.catalog.model import (
    AttributeDef,
    AttributeMap,
    Catalog,
    Fragment,
    LocalClass,
    LocalSchemaDescriptor,
    MappingRule,
    SiteDescriptor,
    StorageDescriptor,
    ViewDef,
    VirtualClass,
    fold,
)
from mdbs.errors import CatalogParseError, DuplicateName, GqlSyntaxError, LexError
from mdbs.gql.ast import render_predicate
from mdbs.gql.parser import parse_predicate
from mdbs.types import CanonicalType

SITE_MODES = ("EMBEDDED", "REMOTE")
ADAPTER_KINDS = ("RELATIONAL", "DOCUMENT", "CSV")
STORAGE_FORMATS = ("SQL_TABLE", "JSONL_FILE", "CSV_FILE")
MAPPING_KINDS = ("HORIZONTAL", "VERTICAL")


def _require(doc: dict, key: str, locus: str) -> Any:
    if key not in doc:
        raise CatalogParseError(f"missing field {key!r}", locus=locus)
    return doc[key]


def _as_list(value: Any, locus: str) -> list:
    if not isinstance(value, list):
        raise CatalogParseError("expected a list", locus=locus)
    return value


def _as_dict(value: Any, locus: str) -> dict:
    if not isinstance(value, dict):
        raise CatalogParseError("expected an object", locus=locus)
    return value


def _as_str(value: Any, locus: str) -> str:
    if not isinstance(value, str) or not value:
        raise CatalogParseError("expected a nonempty string", locus=locus)
    return value


def _canonical_type(value: Any, locus: str) -> CanonicalType:
    try:
        return CanonicalType(value)
    except ValueError:
        raise CatalogParseError(f"unknown type tag {value!r}", locus=locus) from None


def _check_unique(names: list[str], what: str, locus: str) -> None:
    seen: set[str] = set()
    for name in names:
        key = fold(name)
        if key in seen:
            raise DuplicateName(f"duplicate {what} {name!r}", locus=locus)
        seen.add(key)


def _parse_attributes(items: Any, locus: str) -> tuple[AttributeDef, ...]:
    attrs = []
    for i, raw in enumerate(_as_list(items, locus)):
        at = f"{locus}[{i}]"
        obj = _as_dict(raw, at)
        attrs.append(
            AttributeDef(
                name=_as_str(_require(obj, "name", at), f"{at}.name"),
                type=_canonical_type(_require(obj, "type", at), f"{at}.type"),
                nullable=bool(obj.get("nullable", True)),
            )
        )
    _check_unique([a.name for a in attrs], "attribute", locus)
    return tuple(attrs)


def _parse_predicate_text(text: str, locus: str):
    try:
        return parse_predicate(text)
    except (LexError, GqlSyntaxError) as exc:
        raise CatalogParseError(f"bad predicate: {exc.message}", locus=locus) from None


def load_catalog(document: str) -> Catalog:
    """Parse a catalog document into a provisional (unpublished) Catalog."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise CatalogParseError(
            f"not valid JSON: {exc.msg}", locus=f"line {exc.lineno}"
        ) from None
    if not isinstance(doc, dict):
        raise CatalogParseError("top level must be an object", locus="document")

    classes = []
    for i, raw in enumerate(_as_list(doc.get("classes", []), "classes")):
        at = f"classes[{i}]"
        obj = _as_dict(raw, at)
        name = _as_str(_require(obj, "name", at), f"{at}.name")
        attrs = _parse_attributes(_require(obj, "attributes", at), f"{at}.attributes")
        classes.append(VirtualClass(name=name, attributes=attrs))
    _check_unique([c.name for c in classes], "class", "classes")

    mappings = []
    for i, raw in enumerate(_as_list(doc.get("mappings", []), "mappings")):
        at = f"mappings[{i}]"
        obj = _as_dict(raw, at)
        kind = _as_str(_require(obj, "kind", at), f"{at}.kind")
        if kind not in MAPPING_KINDS:
            raise CatalogParseError(f"unknown mapping kind {kind!r}", locus=f"{at}.kind")
        fragments = []
        for j, fraw in enumerate(_as_list(_require(obj, "fragments", at), f"{at}.fragments")):
            fat = f"{at}.fragments[{j}]"
            fobj = _as_dict(fraw, fat)
            attr_maps = []
            for k, mraw in enumerate(
                _as_list(_require(fobj, "attr_maps", fat), f"{fat}.attr_maps")
            ):
                mat = f"{fat}.attr_maps[{k}]"
                mobj = _as_dict(mraw, mat)
                cast_from = None
                if mobj.get("cast") is not None:
                    cast_from = _canonical_type(mobj["cast"], f"{mat}.cast")
                attr_maps.append(
                    AttributeMap(
                        local_attr=_as_str(_require(mobj, "local", mat), f"{mat}.local"),
                        global_attr=_as_str(_require(mobj, "global", mat), f"{mat}.global"),
                        cast_from=cast_from,
                        default_value=mobj.get("default"),
                        has_default="default" in mobj,
                    )
                )
            _check_unique([m.global_attr for m in attr_maps], "attribute map", fat)
            route_when = None
            if fobj.get("route_when") is not None:
                route_when = _parse_predicate_text(
                    _as_str(fobj["route_when"], f"{fat}.route_when"), f"{fat}.route_when"
                )
            fragments.append(
                Fragment(
                    site_id=_as_str(_require(fobj, "site", fat), f"{fat}.site"),
                    local_class=_as_str(_require(fobj, "local_class", fat), f"{fat}.local_class"),
                    attr_maps=tuple(attr_maps),
                    route_when=route_when,
                )
            )
        if not fragments:
            raise CatalogParseError("mapping needs at least one fragment", locus=at)
        join_key = obj.get("join_key")
        if join_key is not None:
            join_key = _as_str(join_key, f"{at}.join_key")
        mappings.append(
            MappingRule(
                class_name=_as_str(_require(obj, "class", at), f"{at}.class"),
                kind=kind,
                fragments=tuple(fragments),
                join_key=join_key,
                stale=bool(obj.get("stale", False)),
            )
        )
    _check_unique([m.class_name for m in mappings], "mapping", "mappings")

    sites = []
    for i, raw in enumerate(_as_list(doc.get("sites", []), "sites")):
        at = f"sites[{i}]"
        obj = _as_dict(raw, at)
        mode = _as_str(_require(obj, "mode", at), f"{at}.mode")
        if mode not in SITE_MODES:
            raise CatalogParseError(f"unknown site mode {mode!r}", locus=f"{at}.mode")
        adapter = _as_str(_require(obj, "adapter", at), f"{at}.adapter")
        if adapter not in ADAPTER_KINDS:
            raise CatalogParseError(f"unknown adapter {adapter!r}", locus=f"{at}.adapter")
        endpoint = obj.get("endpoint")
        if endpoint is not None:
            endpoint = _as_str(endpoint, f"{at}.endpoint")
        sites.append(
            SiteDescriptor(
                site_id=_as_str(_require(obj, "id", at), f"{at}.id"),
                mode=mode,
                adapter_kind=adapter,
                principal_token=_as_str(_require(obj, "token", at), f"{at}.token"),
                endpoint=endpoint,
            )
        )
    _check_unique([s.site_id for s in sites], "site", "sites")

    local_schemas = []
    for i, raw in enumerate(_as_list(doc.get("local_schemas", []), "local_schemas")):
        at = f"local_schemas[{i}]"
        obj = _as_dict(raw, at)
        lclasses = []
        for j, craw in enumerate(_as_list(_require(obj, "classes", at), f"{at}.classes")):
            cat = f"{at}.classes[{j}]"
            cobj = _as_dict(craw, cat)
            lclasses.append(
                LocalClass(
                    name=_as_str(_require(cobj, "name", cat), f"{cat}.name"),
                    attributes=_parse_attributes(
                        _require(cobj, "attributes", cat), f"{cat}.attributes"
                    ),
                )
            )
        _check_unique([c.name for c in lclasses], "local class", f"{at}.classes")
        sobj = _as_dict(_require(obj, "storage", at), f"{at}.storage")
        sformat = _as_str(_require(sobj, "format", at), f"{at}.storage.format")
        if sformat not in STORAGE_FORMATS:
            raise CatalogParseError(
                f"unknown storage format {sformat!r}", locus=f"{at}.storage.format"
            )
        local_schemas.append(
            LocalSchemaDescriptor(
                site_id=_as_str(_require(obj, "site", at), f"{at}.site"),
                classes=tuple(lclasses),
                storage=StorageDescriptor(
                    format=sformat,
                    location=_as_str(_require(sobj, "location", at), f"{at}.storage.location"),
                ),
            )
        )
    _check_unique([ls.site_id for ls in local_schemas], "local schema", "local_schemas")

    views = []
    for i, raw in enumerate(_as_list(doc.get("views", []), "views")):
        at = f"views[{i}]"
        obj = _as_dict(raw, at)
        views.append(
            ViewDef(
                name=_as_str(_require(obj, "name", at), f"{at}.name"),
                query_text=_as_str(_require(obj, "query", at), f"{at}.query"),
            )
        )
    _check_unique([v.name for v in views], "view", "views")

    version = doc.get("version_hint", 0)
    if not isinstance(version, int) or version < 0:
        raise CatalogParseError("version_hint must be a non-negative integer", locus="version_hint")

    return Catalog(
        version=version,
        classes=tuple(classes),
        mappings=tuple(mappings),
        sites=tuple(sites),
        local_schemas=tuple(local_schemas),
        views=tuple(views),
    )


def load_catalog_file(path: str) -> Catalog:
    with open(path, "r", encoding="utf-8") as fh:
        return load_catalog(fh.read())


def _attr_doc(attr: AttributeDef) -> dict:
    return {"name": attr.name, "type": attr.type.value, "nullable": attr.nullable}


def serialize_catalog(catalog: Catalog) -> str:
    """Canonical document form; load_catalog of the output reproduces the value."""
    doc: dict[str, Any] = {
        "version_hint": catalog.version,
        "classes": [
            {"name": c.name, "attributes": [_attr_doc(a) for a in c.attributes]}
            for c in catalog.classes
        ],
        "mappings": [],
        "sites": [],
        "local_schemas": [],
        "views": [{"name": v.name, "query": v.query_text} for v in catalog.views],
    }
    for rule in catalog.mappings:
        rdoc: dict[str, Any] = {
            "class": rule.class_name,
            "kind": rule.kind,
            "fragments": [],
        }
        if rule.join_key is not None:
            rdoc["join_key"] = rule.join_key
        if rule.stale:
            rdoc["stale"] = True
        for frag in rule.fragments:
            fdoc: dict[str, Any] = {
                "site": frag.site_id,
                "local_class": frag.local_class,
                "attr_maps": [],
            }
            for m in frag.attr_maps:
                mdoc: dict[str, Any] = {"local": m.local_attr, "global": m.global_attr}
                if m.cast_from is not None:
                    mdoc["cast"] = m.cast_from.value
                if m.has_default:
                    mdoc["default"] = m.default_value
                fdoc["attr_maps"].append(mdoc)
            if frag.route_when is not None:
                fdoc["route_when"] = render_predicate(frag.route_when)
            rdoc["fragments"].append(fdoc)
        doc["mappings"].append(rdoc)
    for site in catalog.sites:
        sdoc: dict[str, Any] = {
            "id": site.site_id,
            "mode": site.mode,
            "adapter": site.adapter_kind,
            "token": site.principal_token,
        }
        if site.endpoint is not None:
            sdoc["endpoint"] = site.endpoint
        doc["sites"].append(sdoc)
    for ls in catalog.local_schemas:
        doc["local_schemas"].append(
            {
                "site": ls.site_id,
                "classes": [
                    {"name": c.name, "attributes": [_attr_doc(a) for a in c.attributes]}
                    for c in ls.classes
                ],
                "storage": {"format": ls.storage.format, "location": ls.storage.location},
            }
        )
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"
