"""Declarative schema integration pipeline.

Local schemas arrive in native types and are transformed into the
common data model; humans declare attribute correspondences and an
integration intent; the system verifies the declarations and emits
virtual classes plus mapping rules.  Evolution is handled by diffing
local schemas and invalidating affected mappings, never by rewriting
them automatically.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from mdbs.catalog.model import (
    AttributeDef,
    AttributeMap,
    Catalog,
    Fragment,
    LocalClass,
    LocalSchemaDescriptor,
    MappingRule,
    StorageDescriptor,
    VirtualClass,
    fold,
)
from mdbs.errors import (
    ConflictingInput,
    CoverageGap,
    SiteMismatch,
    UnboundNativeType,
    UnknownSite,
    UnresolvedEndpoint,
)
from mdbs.gql.parser import parse_predicate
from mdbs.types import CanonicalType, legal_cast

SAME_ENTITY_HORIZONTAL = "SAME_ENTITY_HORIZONTAL"
SAME_ENTITY_VERTICAL_KEY = "SAME_ENTITY_VERTICAL_KEY"

TYPE_CONFLICT = "TYPE_CONFLICT"
NAME_COLLISION = "NAME_COLLISION"
MISSING_COUNTERPART = "MISSING_COUNTERPART"


# -- schema transformation ---------------------------------------------------

@dataclass(frozen=True)
class NativeAttribute:
    name: str
    native_type: str
    nullable: bool = True


@dataclass(frozen=True)
class NativeClass:
    name: str
    attributes: tuple[NativeAttribute, ...]


@dataclass(frozen=True)
class NativeLocalSchema:
    site_id: str
    classes: tuple[NativeClass, ...]
    storage: StorageDescriptor


@dataclass(frozen=True)
class TransformationRuleSet:
    """Native-to-canonical type bindings, with per-attribute overrides
    keyed as "class.attr"."""

    bindings: Mapping[str, CanonicalType]
    overrides: Mapping[str, CanonicalType] = field(default_factory=dict)

    def resolve(self, cls: str, attr: str, native_type: str) -> Optional[CanonicalType]:
        override = self.overrides.get(f"{cls}.{attr}")
        if override is not None:
            return override
        return self.bindings.get(native_type.upper())


def transform_local_schema(
    schema: NativeLocalSchema, rules: TransformationRuleSet
) -> LocalSchemaDescriptor:
    """Rewrite every native type into the common data model, preserving
    class and attribute order."""
    classes = []
    for cls in schema.classes:
        attrs = []
        for attr in cls.attributes:
            canonical = rules.resolve(cls.name, attr.name, attr.native_type)
            if canonical is None:
                raise UnboundNativeType(
                    f"no binding for native type {attr.native_type!r}"
                    f" of {schema.site_id}.{cls.name}.{attr.name}"
                )
            attrs.append(AttributeDef(attr.name, canonical, attr.nullable))
        classes.append(LocalClass(cls.name, tuple(attrs)))
    return LocalSchemaDescriptor(
        site_id=schema.site_id, classes=tuple(classes), storage=schema.storage
    )


# -- correspondence investigation --------------------------------------------

@dataclass(frozen=True)
class EndpointRef:
    site_id: str
    local_class: str
    attr: str

    def __str__(self) -> str:
        return f"{self.site_id}.{self.local_class}.{self.attr}"

    @staticmethod
    def parse(text: str) -> "EndpointRef":
        parts = text.split(".")
        if len(parts) != 3:
            raise UnresolvedEndpoint(f"endpoint {text!r} is not site.class.attr")
        return EndpointRef(*parts)


@dataclass(frozen=True)
class CorrEntry:
    left: EndpointRef
    right: EndpointRef
    role: str = SAME_ENTITY_HORIZONTAL


@dataclass(frozen=True)
class CorrespondenceDecl:
    entries: tuple[CorrEntry, ...]


@dataclass(frozen=True)
class Conflict:
    kind: str
    locus: str
    message: str


@dataclass(frozen=True)
class CorrespondenceReport:
    accepted: tuple[CorrEntry, ...]
    conflicts: tuple[Conflict, ...]

    def accepted_pairs(self) -> set[frozenset]:
        return {
            frozenset(
                (
                    (fold(e.left.site_id), fold(e.left.local_class), fold(e.left.attr)),
                    (fold(e.right.site_id), fold(e.right.local_class), fold(e.right.attr)),
                )
            )
            for e in self.accepted
        }


def _find_attr(schemas: Mapping[str, LocalSchemaDescriptor], ref: EndpointRef):
    """(local class exists, attribute def or None); raises when the site
    or class is unknown."""
    schema = schemas.get(fold(ref.site_id))
    if schema is None:
        raise UnresolvedEndpoint(f"unknown site in endpoint {ref}")
    local_cls = schema.local_class(ref.local_class)
    if local_cls is None:
        raise UnresolvedEndpoint(f"unknown class in endpoint {ref}")
    return local_cls.attribute(ref.attr)


def investigate(
    schemas: list[LocalSchemaDescriptor], decl: CorrespondenceDecl
) -> CorrespondenceReport:
    """Verify each declared correspondence against the canonical local
    schemas: attributes must exist and be same-typed or legally castable."""
    by_site = {fold(s.site_id): s for s in schemas}
    accepted: list[CorrEntry] = []
    conflicts: list[Conflict] = []
    for entry in decl.entries:
        locus = f"{entry.left} = {entry.right}"
        left = _find_attr(by_site, entry.left)
        right = _find_attr(by_site, entry.right)
        missing = [
            str(ref)
            for ref, attr in ((entry.left, left), (entry.right, right))
            if attr is None
        ]
        if missing:
            conflicts.append(
                Conflict(MISSING_COUNTERPART, locus, f"missing attribute(s): {missing}")
            )
            continue
        if (
            left.type == right.type
            or legal_cast(right.type, left.type)
            or legal_cast(left.type, right.type)
        ):
            accepted.append(entry)
        else:
            conflicts.append(
                Conflict(
                    TYPE_CONFLICT,
                    locus,
                    f"{left.type} and {right.type} are incompatible and no cast applies",
                )
            )
    return CorrespondenceReport(tuple(accepted), tuple(conflicts))


# -- schema integration -------------------------------------------------------

@dataclass(frozen=True)
class AttrIntent:
    global_name: str
    sources: tuple[EndpointRef, ...]  # first source fixes the global type
    nullable: bool = True


@dataclass(frozen=True)
class FragmentRoute:
    site_id: str
    local_class: str
    route_when: str  # predicate text over global attributes


@dataclass(frozen=True)
class ClassIntent:
    name: str
    kind: str  # HORIZONTAL | VERTICAL
    attributes: tuple[AttrIntent, ...]
    join_key: Optional[str] = None
    routes: tuple[FragmentRoute, ...] = ()


@dataclass(frozen=True)
class IntegrationResult:
    classes: tuple[VirtualClass, ...]
    mappings: tuple[MappingRule, ...]
    warnings: tuple[Conflict, ...]


def integrate(
    report: CorrespondenceReport,
    schemas: list[LocalSchemaDescriptor],
    intents: list[ClassIntent],
) -> IntegrationResult:
    """Emit virtual classes and mapping rules from accepted
    correspondences and the declared intent."""
    by_site = {fold(s.site_id): s for s in schemas}
    pairs = report.accepted_pairs()
    classes: list[VirtualClass] = []
    mappings: list[MappingRule] = []
    warnings: list[Conflict] = []

    for intent in intents:
        attrs: list[tuple[AttrIntent, AttributeDef]] = []
        seen: set[str] = set()
        for ai in intent.attributes:
            if fold(ai.global_name) in seen:
                warnings.append(
                    Conflict(
                        NAME_COLLISION,
                        f"{intent.name}.{ai.global_name}",
                        "global name already taken, first declaration wins",
                    )
                )
                continue
            seen.add(fold(ai.global_name))
            first = _resolve_source(by_site, ai.sources[0])
            for other in ai.sources[1:]:
                _check_declared(pairs, ai.sources[0], other, intent.name, ai.global_name)
                other_attr = _resolve_source(by_site, other)
                if other_attr.type != first.type and not legal_cast(
                    other_attr.type, first.type
                ):
                    raise ConflictingInput(
                        f"{other} ({other_attr.type}) cannot feed"
                        f" {intent.name}.{ai.global_name} ({first.type})"
                    )
            attrs.append((ai, AttributeDef(ai.global_name, first.type, ai.nullable)))

        cls = VirtualClass(intent.name, tuple(a for _, a in attrs))
        fragments = _build_fragments(by_site, intent, attrs)
        mappings.append(
            MappingRule(
                class_name=intent.name,
                kind=intent.kind,
                fragments=fragments,
                join_key=intent.join_key if intent.kind == "VERTICAL" else None,
            )
        )
        classes.append(cls)
    return IntegrationResult(tuple(classes), tuple(mappings), tuple(warnings))


def _resolve_source(by_site, ref: EndpointRef) -> AttributeDef:
    attr = _find_attr(by_site, ref)
    if attr is None:
        raise UnresolvedEndpoint(f"unknown attribute in endpoint {ref}")
    return attr


def _check_declared(pairs, first: EndpointRef, other: EndpointRef, cls: str, gname: str):
    key = frozenset(
        (
            (fold(first.site_id), fold(first.local_class), fold(first.attr)),
            (fold(other.site_id), fold(other.local_class), fold(other.attr)),
        )
    )
    if key not in pairs:
        raise ConflictingInput(
            f"{cls}.{gname}: correspondence {first} = {other} was not accepted"
        )


def _build_fragments(by_site, intent: ClassIntent, attrs) -> tuple[Fragment, ...]:
    frag_order: list[tuple[str, str]] = []
    frag_maps: dict[tuple[str, str], list[AttributeMap]] = {}
    for ai, attr_def in attrs:
        for ref in ai.sources:
            src = _resolve_source(by_site, ref)
            key = (fold(ref.site_id), fold(ref.local_class))
            if key not in frag_maps:
                frag_maps[key] = []
                frag_order.append((ref.site_id, ref.local_class))
            frag_maps[key].append(
                AttributeMap(
                    local_attr=ref.attr,
                    global_attr=ai.global_name,
                    cast_from=src.type if src.type != attr_def.type else None,
                )
            )

    routes = {
        (fold(r.site_id), fold(r.local_class)): parse_predicate(r.route_when)
        for r in intent.routes
    }
    fragments = []
    for site_id, local_class in frag_order:
        key = (fold(site_id), fold(local_class))
        maps = tuple(frag_maps[key])
        mapped = {fold(m.global_attr) for m in maps}
        if intent.kind == "VERTICAL":
            if intent.join_key is None or fold(intent.join_key) not in mapped:
                raise CoverageGap(
                    f"fragment {site_id}.{local_class} does not map join key"
                    f" {intent.join_key!r} of {intent.name}"
                )
        else:
            for ai, attr_def in attrs:
                if not attr_def.nullable and fold(ai.global_name) not in mapped:
                    raise CoverageGap(
                        f"fragment {site_id}.{local_class} does not map"
                        f" non-nullable {intent.name}.{ai.global_name}"
                    )
        fragments.append(
            Fragment(
                site_id=site_id,
                local_class=local_class,
                attr_maps=maps,
                route_when=routes.get(key),
            )
        )
    return tuple(fragments)


# -- schema evolution ----------------------------------------------------------

@dataclass(frozen=True)
class SchemaDiff:
    site_id: str
    added: frozenset[tuple[str, str]]
    removed: frozenset[tuple[str, str]]
    retyped: frozenset[tuple[str, str]]

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed or self.retyped)


def diff_local_schema(
    old: LocalSchemaDescriptor, new: LocalSchemaDescriptor
) -> SchemaDiff:
    if fold(old.site_id) != fold(new.site_id):
        raise SiteMismatch(f"cannot diff {old.site_id!r} against {new.site_id!r}")
    old_attrs = {
        (fold(c.name), fold(a.name)): (c.name, a.name, a.type, a.nullable)
        for c in old.classes
        for a in c.attributes
    }
    new_attrs = {
        (fold(c.name), fold(a.name)): (c.name, a.name, a.type, a.nullable)
        for c in new.classes
        for a in c.attributes
    }
    added = frozenset(
        (c, a) for key, (c, a, _, _) in new_attrs.items() if key not in old_attrs
    )
    removed = frozenset(
        (c, a) for key, (c, a, _, _) in old_attrs.items() if key not in new_attrs
    )
    retyped = frozenset(
        (c, a)
        for key, (c, a, t, n) in old_attrs.items()
        if key in new_attrs and (new_attrs[key][2] != t or new_attrs[key][3] != n)
    )
    return SchemaDiff(old.site_id, added, removed, retyped)


def mark_stale(catalog: Catalog, diff: SchemaDiff) -> Catalog:
    """Invalidate every mapping that references an attribute the diff
    removed or retyped; repair is an operator decision, not ours."""
    if catalog.site_named(diff.site_id) is None:
        raise UnknownSite(f"site {diff.site_id!r} is not registered")
    if diff.empty:
        return catalog.with_version(catalog.version + 1)

    broken = {
        (fold(c), fold(a)) for c, a in (diff.removed | diff.retyped)
    }
    site_key = fold(diff.site_id)

    def is_hit(rule: MappingRule) -> bool:
        for frag in rule.fragments:
            if fold(frag.site_id) != site_key:
                continue
            for m in frag.attr_maps:
                if (fold(frag.local_class), fold(m.local_attr)) in broken:
                    return True
        return False

    mappings = tuple(
        replace(rule, stale=True) if is_hit(rule) else rule for rule in catalog.mappings
    )
    return replace(catalog, version=catalog.version + 1, mappings=mappings)
