"""Global catalog: virtual classes, sites, mapping rules, views.

Catalog values are immutable; an update always produces a new version.
Identifiers keep their authored spelling and compare case-insensitively.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from mdbs.errors import NotFound
from mdbs.gql.ast import Predicate
from mdbs.types import CanonicalType, Value


def fold(name: str) -> str:
    """Identifier comparison key (ASCII case fold)."""
    return name.lower()


@dataclass(frozen=True)
class AttributeDef:
    name: str
    type: CanonicalType
    nullable: bool = True


@dataclass(frozen=True)
class VirtualClass:
    name: str
    attributes: tuple[AttributeDef, ...]

    def attribute(self, name: str) -> Optional[AttributeDef]:
        key = fold(name)
        for attr in self.attributes:
            if fold(attr.name) == key:
                return attr
        return None

    def attr_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)


@dataclass(frozen=True)
class SiteDescriptor:
    site_id: str
    mode: str  # EMBEDDED | REMOTE
    adapter_kind: str  # RELATIONAL | DOCUMENT | CSV
    principal_token: str
    endpoint: Optional[str] = None


@dataclass(frozen=True)
class StorageDescriptor:
    format: str  # SQL_TABLE | JSONL_FILE | CSV_FILE
    location: str


@dataclass(frozen=True)
class LocalClass:
    name: str
    attributes: tuple[AttributeDef, ...]

    def attribute(self, name: str) -> Optional[AttributeDef]:
        key = fold(name)
        for attr in self.attributes:
            if fold(attr.name) == key:
                return attr
        return None


@dataclass(frozen=True)
class LocalSchemaDescriptor:
    site_id: str
    classes: tuple[LocalClass, ...]
    storage: StorageDescriptor

    def local_class(self, name: str) -> Optional[LocalClass]:
        key = fold(name)
        for cls in self.classes:
            if fold(cls.name) == key:
                return cls
        return None


@dataclass(frozen=True)
class AttributeMap:
    local_attr: str
    global_attr: str
    cast_from: Optional[CanonicalType] = None  # source type of a declared cast
    default_value: Value = None
    has_default: bool = False


@dataclass(frozen=True)
class Fragment:
    site_id: str
    local_class: str
    attr_maps: tuple[AttributeMap, ...]
    route_when: Optional[Predicate] = None

    def map_for(self, global_attr: str) -> Optional[AttributeMap]:
        key = fold(global_attr)
        for m in self.attr_maps:
            if fold(m.global_attr) == key:
                return m
        return None

    def mapped_globals(self) -> set[str]:
        return {fold(m.global_attr) for m in self.attr_maps}


@dataclass(frozen=True)
class MappingRule:
    class_name: str
    kind: str  # HORIZONTAL | VERTICAL
    fragments: tuple[Fragment, ...]
    join_key: Optional[str] = None  # VERTICAL only
    stale: bool = False


@dataclass(frozen=True)
class ViewDef:
    name: str
    query_text: str


@dataclass(frozen=True)
class Catalog:
    version: int
    classes: tuple[VirtualClass, ...] = ()
    mappings: tuple[MappingRule, ...] = ()
    sites: tuple[SiteDescriptor, ...] = ()
    local_schemas: tuple[LocalSchemaDescriptor, ...] = ()
    views: tuple[ViewDef, ...] = ()

    def class_named(self, name: str) -> Optional[VirtualClass]:
        key = fold(name)
        for cls in self.classes:
            if fold(cls.name) == key:
                return cls
        return None

    def mapping_for(self, class_name: str) -> Optional[MappingRule]:
        key = fold(class_name)
        for rule in self.mappings:
            if fold(rule.class_name) == key:
                return rule
        return None

    def site_named(self, site_id: str) -> Optional[SiteDescriptor]:
        key = fold(site_id)
        for site in self.sites:
            if fold(site.site_id) == key:
                return site
        return None

    def view_named(self, name: str) -> Optional[ViewDef]:
        key = fold(name)
        for view in self.views:
            if fold(view.name) == key:
                return view
        return None

    def local_schema_for(self, site_id: str) -> Optional[LocalSchemaDescriptor]:
        key = fold(site_id)
        for ls in self.local_schemas:
            if fold(ls.site_id) == key:
                return ls
        return None

    def with_version(self, version: int) -> "Catalog":
        return replace(self, version=version)


def lookup(catalog: Catalog, kind: str, name: str):
    """Fetch one catalog entry by kind (CLASS|SITE|VIEW|MAPPING) and name."""
    kind = kind.upper()
    finder = {
        "CLASS": catalog.class_named,
        "SITE": catalog.site_named,
        "VIEW": catalog.view_named,
        "MAPPING": catalog.mapping_for,
    }.get(kind)
    if finder is None:
        raise NotFound(f"unknown lookup kind {kind!r}")
    entry = finder(name)
    if entry is None:
        raise NotFound(f"no {kind.lower()} named {name!r}")
    return entry
