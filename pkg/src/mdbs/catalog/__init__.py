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
    lookup,
)
from mdbs.catalog.io import load_catalog, load_catalog_file, serialize_catalog
from mdbs.catalog.registry import CatalogRegistry, publish
from mdbs.catalog.validate import ValidationIssue, ValidationReport, validate_catalog

__all__ = [
    "AttributeDef",
    "AttributeMap",
    "Catalog",
    "Fragment",
    "LocalClass",
    "LocalSchemaDescriptor",
    "MappingRule",
    "SiteDescriptor",
    "StorageDescriptor",
    "ViewDef",
    "VirtualClass",
    "fold",
    "lookup",
    "load_catalog",
    "load_catalog_file",
    "serialize_catalog",
    "CatalogRegistry",
    "publish",
    "ValidationIssue",
    "ValidationReport",
    "validate_catalog",
]
