"""Exception hierarchy shared across the engine.

Every error that can surface through the query API carries a stable
``kind`` string; those strings are part of the wire contract and must
not change spelling.
"""
from __future__ import annotations


class MdbsError(Exception):
    """Base class; ``kind`` is the stable API error identifier."""

    kind = "INTERNAL"

    def __init__(self, message: str, locus: str | None = None):
        super().__init__(message)
        self.message = message
        self.locus = locus

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "message": self.message}
        if self.locus is not None:
            doc["locus"] = self.locus
        return doc


# -- catalog --------------------------------------------------------------

class CatalogParseError(MdbsError):
    kind = "PARSE_ERROR"


class DuplicateName(MdbsError):
    kind = "DUPLICATE_NAME"


class NotFound(MdbsError):
    kind = "NOT_FOUND"


class InvalidCatalog(MdbsError):
    kind = "INVALID_CATALOG"

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


# -- schema pipeline ------------------------------------------------------

class UnboundNativeType(MdbsError):
    kind = "UNBOUND_NATIVE_TYPE"


class UnresolvedEndpoint(MdbsError):
    kind = "UNRESOLVED_ENDPOINT"


class ConflictingInput(MdbsError):
    kind = "CONFLICTING_INPUT"


class CoverageGap(MdbsError):
    kind = "COVERAGE_GAP"


class SiteMismatch(MdbsError):
    kind = "SITE_MISMATCH"


class UnknownSite(MdbsError):
    kind = "UNKNOWN_SITE"


# -- query frontend -------------------------------------------------------

class LexError(MdbsError):
    kind = "LEX_ERROR"

    def __init__(self, message: str, position: int):
        super().__init__(message, locus=f"offset {position}")
        self.position = position


class GqlSyntaxError(MdbsError):
    kind = "SYNTAX_ERROR"

    def __init__(self, message: str, position: int):
        super().__init__(message, locus=f"offset {position}")
        self.position = position


class UnknownClass(MdbsError):
    kind = "UNKNOWN_CLASS"


class UnknownAttribute(MdbsError):
    kind = "UNKNOWN_ATTRIBUTE"


class TypeMismatch(MdbsError):
    kind = "TYPE_MISMATCH"


class StaleMapping(MdbsError):
    kind = "STALE_MAPPING"


class ViewNotSelectable(MdbsError):
    kind = "VIEW_NOT_SELECTABLE"


# -- decomposer -----------------------------------------------------------

class NoRoute(MdbsError):
    kind = "NO_ROUTE"


class AmbiguousRoute(MdbsError):
    kind = "AMBIGUOUS_ROUTE"


class UnsupportedResidualWrite(MdbsError):
    kind = "UNSUPPORTED_RESIDUAL_WRITE"


# -- execution ------------------------------------------------------------

class SiteUnavailable(MdbsError):
    kind = "SITE_UNAVAILABLE"

    def __init__(self, message: str, statuses=None):
        super().__init__(message)
        self.statuses = statuses or []


class PartialUnsupported(MdbsError):
    kind = "PARTIAL_UNSUPPORTED"

    def __init__(self, message: str, statuses=None):
        super().__init__(message)
        self.statuses = statuses or []


class SchemaDrift(MdbsError):
    kind = "SCHEMA_DRIFT"


# -- site layer -----------------------------------------------------------

class StoreUnreadable(MdbsError):
    kind = "STORE_UNREADABLE"


class HeaderMismatch(MdbsError):
    kind = "HEADER_MISMATCH"


class ConfigError(MdbsError):
    kind = "CONFIG_ERROR"


class BindError(MdbsError):
    kind = "BIND_ERROR"
