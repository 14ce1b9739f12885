"""Structural checks applied to a loaded catalog before it may be published."""
from __future__ import annotations

from dataclasses import dataclass, field

from mdbs.catalog.model import Catalog, Fragment, MappingRule, fold
from mdbs.errors import GqlSyntaxError, LexError, MdbsError
from mdbs.gql.ast import Select, predicate_attrs
from mdbs.gql.parser import parse_statement
from mdbs.types import legal_cast


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    locus: str
    message: str


@dataclass
class ValidationReport:
    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, code: str, locus: str, message: str) -> None:
        self.errors.append(ValidationIssue(code, locus, message))

    def warn(self, code: str, locus: str, message: str) -> None:
        self.warnings.append(ValidationIssue(code, locus, message))

    def summary(self) -> str:
        lines = [
            f"error {i.code} at {i.locus}: {i.message}" for i in self.errors
        ] + [f"warning {i.code} at {i.locus}: {i.message}" for i in self.warnings]
        return "\n".join(lines) if lines else "ok"


_ADAPTER_STORAGE = {
    "RELATIONAL": "SQL_TABLE",
    "DOCUMENT": "JSONL_FILE",
    "CSV": "CSV_FILE",
}


def validate_catalog(catalog: Catalog) -> ValidationReport:
    """Check every cross-reference and mapping invariant; pure, never raises."""
    report = ValidationReport()

    for cls in catalog.classes:
        if not cls.attributes:
            report.error("EMPTY_CLASS", f"class {cls.name}", "class has no attributes")

    for site in catalog.sites:
        if site.mode == "REMOTE" and not site.endpoint:
            report.error(
                "REMOTE_NO_ENDPOINT", f"site {site.site_id}", "REMOTE site needs an endpoint"
            )
        ls = catalog.local_schema_for(site.site_id)
        if ls is None:
            report.warn(
                "NO_LOCAL_SCHEMA", f"site {site.site_id}", "site has no local schema entry"
            )
        else:
            expected = _ADAPTER_STORAGE[site.adapter_kind]
            if ls.storage.format != expected:
                report.error(
                    "ADAPTER_STORAGE_MISMATCH",
                    f"site {site.site_id}",
                    f"{site.adapter_kind} adapter expects {expected}, got {ls.storage.format}",
                )

    for ls in catalog.local_schemas:
        if catalog.site_named(ls.site_id) is None:
            report.error(
                "UNKNOWN_SITE", f"local_schemas {ls.site_id}", "site not in registry"
            )

    mapped_classes: set[str] = set()
    for rule in catalog.mappings:
        _check_mapping(catalog, rule, report)
        mapped_classes.add(fold(rule.class_name))
    for cls in catalog.classes:
        if fold(cls.name) not in mapped_classes:
            report.error("UNMAPPED_CLASS", f"class {cls.name}", "class has no mapping rule")

    for view in catalog.views:
        _check_view(catalog, view.name, view.query_text, report)

    return report


def _check_mapping(catalog: Catalog, rule: MappingRule, report: ValidationReport) -> None:
    locus = f"mapping {rule.class_name}"
    cls = catalog.class_named(rule.class_name)
    if cls is None:
        report.error("UNKNOWN_CLASS", locus, "mapped class is not declared")
        return

    if rule.kind == "VERTICAL":
        if rule.join_key is None:
            report.error("VERTICAL_NO_KEY", locus, "vertical mapping needs a join_key")
        elif cls.attribute(rule.join_key) is None:
            report.error(
                "UNKNOWN_GLOBAL_ATTR", locus, f"join_key {rule.join_key!r} not in class"
            )
    elif rule.join_key is not None:
        report.error("JOIN_KEY_ON_HORIZONTAL", locus, "join_key only applies to VERTICAL")

    covered: set[str] = set()
    for frag in rule.fragments:
        floc = f"{locus} fragment {frag.site_id}.{frag.local_class}"
        _check_fragment(catalog, cls, rule, frag, floc, report)
        covered |= frag.mapped_globals()

    if rule.kind == "VERTICAL":
        for attr in cls.attributes:
            if fold(attr.name) not in covered:
                report.error(
                    "COVERAGE_GAP", locus, f"no fragment maps attribute {attr.name!r}"
                )
        if rule.join_key is not None:
            key = fold(rule.join_key)
            for frag in rule.fragments:
                if key not in frag.mapped_globals():
                    report.error(
                        "VERTICAL_KEY_UNMAPPED",
                        f"{locus} fragment {frag.site_id}.{frag.local_class}",
                        f"fragment does not map join_key {rule.join_key!r}",
                    )
    else:
        for frag in rule.fragments:
            floc = f"{locus} fragment {frag.site_id}.{frag.local_class}"
            for attr in cls.attributes:
                m = frag.map_for(attr.name)
                if m is not None:
                    continue
                if attr.nullable:
                    report.warn(
                        "NULLABLE_GAP",
                        floc,
                        f"nullable attribute {attr.name!r} unmapped, rows get NULL",
                    )
                else:
                    report.error(
                        "COVERAGE_GAP",
                        floc,
                        f"non-nullable attribute {attr.name!r} unmapped and no default",
                    )


def _check_fragment(
    catalog: Catalog,
    cls,
    rule: MappingRule,
    frag: Fragment,
    locus: str,
    report: ValidationReport,
) -> None:
    site = catalog.site_named(frag.site_id)
    if site is None:
        report.error("UNKNOWN_SITE", locus, f"site {frag.site_id!r} not in registry")
    ls = catalog.local_schema_for(frag.site_id)
    local_cls = ls.local_class(frag.local_class) if ls is not None else None
    if ls is not None and local_cls is None:
        report.error(
            "LOCAL_UNRESOLVED", locus, f"local class {frag.local_class!r} not declared"
        )

    for m in frag.attr_maps:
        gattr = cls.attribute(m.global_attr)
        if gattr is None:
            report.error(
                "UNKNOWN_GLOBAL_ATTR", locus, f"{m.global_attr!r} not an attribute of {cls.name}"
            )
            continue
        local_attr = local_cls.attribute(m.local_attr) if local_cls is not None else None
        if local_cls is not None and local_attr is None and not m.has_default:
            report.error(
                "LOCAL_UNRESOLVED",
                locus,
                f"local attribute {m.local_attr!r} not declared and no default",
            )
        if m.cast_from is not None:
            if not legal_cast(m.cast_from, gattr.type):
                report.error(
                    "ILLEGAL_CAST",
                    locus,
                    f"cast {m.cast_from} -> {gattr.type} is not allowed",
                )
            if local_attr is not None and local_attr.type != m.cast_from:
                report.error(
                    "CAST_SOURCE_MISMATCH",
                    locus,
                    f"cast source {m.cast_from} but local attribute is {local_attr.type}",
                )
        elif local_attr is not None and local_attr.type != gattr.type:
            report.error(
                "TYPE_INCOMPATIBLE",
                locus,
                f"{m.local_attr} is {local_attr.type} but {m.global_attr} is {gattr.type}"
                " and no cast is declared",
            )

    if frag.route_when is not None:
        if rule.kind != "HORIZONTAL":
            report.error("ROUTE_ON_VERTICAL", locus, "route_when applies to horizontal only")
        for name in predicate_attrs(frag.route_when):
            if cls.attribute(name) is None:
                report.error(
                    "UNKNOWN_GLOBAL_ATTR", locus, f"route_when references unknown {name!r}"
                )


def _check_view(catalog: Catalog, name: str, query_text: str, report: ValidationReport) -> None:
    from mdbs.gql.typecheck import validate as validate_statement

    locus = f"view {name}"
    try:
        stmt = parse_statement(query_text)
    except (LexError, GqlSyntaxError) as exc:
        report.error("VIEW_INVALID", locus, f"does not parse: {exc.message}")
        return
    if not isinstance(stmt, Select):
        report.error("VIEW_NOT_SELECT", locus, "view body must be a SELECT")
        return
    if stmt.order_by is not None or stmt.limit is not None:
        report.error(
            "VIEW_INVALID", locus, "ORDER BY / LIMIT are not allowed in view bodies"
        )
        return
    if catalog.class_named(stmt.target) is None:
        report.error("VIEW_INVALID", locus, f"view target {stmt.target!r} is not a class")
        return
    try:
        validate_statement(stmt, catalog, allow_stale=True)
    except MdbsError as exc:
        report.error("VIEW_INVALID", locus, exc.message)
