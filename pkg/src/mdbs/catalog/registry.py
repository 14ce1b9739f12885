"""Atomic catalog publication for concurrent readers.

A single writer loads, validates and publishes; readers grab the current
snapshot and keep it for the life of their query, so a mid-query publish
never changes what they see.
"""
from __future__ import annotations

import threading
from typing import Optional

from mdbs.catalog.model import Catalog
from mdbs.catalog.validate import validate_catalog
from mdbs.errors import InvalidCatalog


class CatalogRegistry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._current: Optional[Catalog] = None
        self._version = 0

    def publish(self, catalog: Catalog) -> Catalog:
        """Validate, stamp the next version and swap the snapshot in."""
        report = validate_catalog(catalog)
        if not report.ok:
            raise InvalidCatalog(
                f"catalog has {len(report.errors)} validation error(s)", report=report
            )
        with self._lock:
            self._version += 1
            snapshot = catalog.with_version(self._version)
            self._current = snapshot
        return snapshot

    def current(self) -> Catalog:
        with self._lock:
            if self._current is None:
                raise InvalidCatalog("nothing published yet")
            return self._current

    @property
    def version(self) -> int:
        with self._lock:
            return self._version


def publish(catalog: Catalog, registry: CatalogRegistry) -> Catalog:
    return registry.publish(catalog)
