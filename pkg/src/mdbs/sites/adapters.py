"""Uniform adapter contract over the three store kinds.

Above this contract heterogeneity is invisible: run_subquery returns
exactly the projected columns in projection order, with declared casts
applied.  A row whose declared cast fails is skipped and counted, never
silently mangled; relational casts run inside the SQL engine instead.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional, Union

from mdbs.catalog.model import LocalClass, LocalSchemaDescriptor
from mdbs.errors import StoreUnreadable
from mdbs.plan import OutputCol, SubQuery, SubWrite
from mdbs.predicate import eval_predicate
from mdbs.sites import stores
from mdbs.sites.translate import (
    csv_translate,
    document_translate,
    relational_translate,
)
from mdbs.types import (
    CanonicalType,
    CastError,
    Value,
    cast_value,
    parse_cell,
    render_cell,
    value_conforms,
)

Row = list[Value]

_ABSENT = object()


class Adapter(ABC):
    kind: str

    def __init__(self, schema: LocalSchemaDescriptor):
        self.schema = schema

    def local_schema(self) -> LocalSchemaDescriptor:
        return self.schema

    def _class(self, name: str) -> LocalClass:
        local_cls = self.schema.local_class(name)
        if local_cls is None:
            raise StoreUnreadable(f"site {self.schema.site_id} has no class {name!r}")
        return local_cls

    @abstractmethod
    def run_subquery(self, sq: SubQuery) -> tuple[list[Row], int]:
        """Projected rows plus the number of rows skipped by cast failures."""

    @abstractmethod
    def apply_write(self, sw: SubWrite) -> int:
        """Apply one write; returns the affected row count."""

    @abstractmethod
    def translate(self, item: Union[SubQuery, SubWrite]) -> str:
        """Local-language rendering; side-effect free."""


def _materialize_value(raw: Value, col: OutputCol) -> Value:
    """Turn one raw store value into the column's output value.

    ``raw`` may be the _ABSENT marker (document field not present).
    Raises CastError when a declared cast fails on a real value.
    """
    if col.local is None:
        return col.const
    if raw is _ABSENT:
        return col.default if col.has_default else None
    if raw is None:
        return None
    if col.cast_to is not None:
        return cast_value(raw, col.source_type, col.cast_to)
    return raw


class _FileAdapter(Adapter):
    """Shared scan pipeline for the row-file store kinds."""

    def _typed_rows(self, local_cls: LocalClass) -> list[dict[str, Value]]:
        raise NotImplementedError

    def run_subquery(self, sq: SubQuery) -> tuple[list[Row], int]:
        local_cls = self._class(sq.local_class)
        specs = list(sq.columns) + list(sq.pred_cols)
        out: list[Row] = []
        skipped = 0
        for raw_row in self._typed_rows(local_cls):
            values: dict[str, Value] = {}
            try:
                for col in specs:
                    if col.local is None:
                        continue
                    values[col.local] = _materialize_value(
                        raw_row.get(col.local, _ABSENT), col
                    )
            except CastError:
                skipped += 1
                continue
            if sq.predicate is not None and not eval_predicate(sq.predicate, values):
                continue
            out.append(
                [
                    col.const if col.local is None else values[col.local]
                    for col in sq.columns
                ]
            )
        return out, skipped

    def _match_rows(self, sw: SubWrite, typed: list[Optional[dict]]) -> list[bool]:
        matches = []
        for row in typed:
            if row is None:
                matches.append(False)
                continue
            if sw.predicate is None:
                matches.append(True)
                continue
            values = dict(row)
            try:
                for local, src, dst in sw.pred_casts:
                    if values.get(local) is not None:
                        values[local] = cast_value(values[local], src, dst)
            except CastError:
                matches.append(False)
                continue
            matches.append(eval_predicate(sw.predicate, values))
        return matches


class CsvAdapter(_FileAdapter):
    kind = "CSV"

    def _raw_rows(self, local_cls: LocalClass) -> list[dict[str, str]]:
        return stores.read_csv_raw(self.schema.storage.location, local_cls)

    def _typed_rows(self, local_cls: LocalClass) -> list[dict[str, Value]]:
        typed = []
        for raw in self._raw_rows(local_cls):
            row = self._type_row(raw, local_cls)
            if row is not None:
                typed.append(row)
        return typed

    @staticmethod
    def _type_row(raw: dict[str, str], local_cls: LocalClass) -> Optional[dict[str, Value]]:
        row: dict[str, Value] = {}
        for attr in local_cls.attributes:
            try:
                row[attr.name] = parse_cell(raw.get(attr.name, ""), attr.type)
            except CastError:
                return None
        return row

    def apply_write(self, sw: SubWrite) -> int:
        local_cls = self._class(sw.local_class)
        location = self.schema.storage.location
        raw_rows = self._raw_rows(local_cls)
        if sw.kind == "INSERT":
            new_raw = {
                name: render_cell(value) for name, value in sw.values
            }
            for attr in local_cls.attributes:
                new_raw.setdefault(attr.name, "")
            stores.write_csv_raw(location, local_cls, raw_rows + [new_raw])
            return 1
        typed = [self._type_row(raw, local_cls) for raw in raw_rows]
        matches = self._match_rows(sw, typed)
        if sw.kind == "UPDATE":
            affected = 0
            for raw, hit in zip(raw_rows, matches):
                if hit:
                    for name, value in sw.values:
                        raw[name] = render_cell(value)
                    affected += 1
            stores.write_csv_raw(location, local_cls, raw_rows)
            return affected
        kept = [raw for raw, hit in zip(raw_rows, matches) if not hit]
        stores.write_csv_raw(location, local_cls, kept)
        return len(raw_rows) - len(kept)

    def translate(self, item: Union[SubQuery, SubWrite]) -> str:
        return csv_translate(item)


class DocumentAdapter(_FileAdapter):
    kind = "DOCUMENT"

    def _docs(self, class_name: str) -> list[dict]:
        return stores.read_jsonl_docs(self.schema.storage.location, class_name)

    def _typed_rows(self, local_cls: LocalClass) -> list[dict[str, Value]]:
        return [self._type_doc(doc, local_cls) for doc in self._docs(local_cls.name)]

    @staticmethod
    def _type_doc(doc: dict, local_cls: LocalClass) -> dict[str, Value]:
        # absent fields stay absent (defaults apply later); present values
        # that do not conform to the declared type degrade to NULL, except
        # an exact INT where FLOAT is declared, which widens
        row: dict[str, Value] = {}
        for attr in local_cls.attributes:
            if attr.name not in doc:
                continue
            value = doc[attr.name]
            if value is None or value_conforms(value, attr.type):
                row[attr.name] = value
            elif (
                attr.type is CanonicalType.FLOAT
                and isinstance(value, int)
                and not isinstance(value, bool)
            ):
                row[attr.name] = float(value)
            else:
                row[attr.name] = None
        return row

    def run_subquery(self, sq: SubQuery) -> tuple[list[Row], int]:
        local_cls = self._class(sq.local_class)
        specs = list(sq.columns) + list(sq.pred_cols)
        out: list[Row] = []
        skipped = 0
        for typed in self._typed_rows(local_cls):
            values: dict[str, Value] = {}
            try:
                for col in specs:
                    if col.local is None:
                        continue
                    raw = typed[col.local] if col.local in typed else _ABSENT
                    values[col.local] = _materialize_value(raw, col)
            except CastError:
                skipped += 1
                continue
            if sq.predicate is not None and not eval_predicate(sq.predicate, values):
                continue
            out.append(
                [
                    col.const if col.local is None else values[col.local]
                    for col in sq.columns
                ]
            )
        return out, skipped

    def apply_write(self, sw: SubWrite) -> int:
        local_cls = self._class(sw.local_class)
        location = self.schema.storage.location
        if sw.kind == "INSERT":
            stores.append_jsonl_doc(location, local_cls.name, dict(sw.values))
            return 1
        docs = self._docs(local_cls.name)
        typed = [self._type_doc(doc, local_cls) for doc in docs]
        matches = self._match_rows(sw, typed)
        if sw.kind == "UPDATE":
            affected = 0
            for doc, hit in zip(docs, matches):
                if hit:
                    doc.update(dict(sw.values))
                    affected += 1
            stores.write_jsonl_docs(location, local_cls.name, docs)
            return affected
        kept = [doc for doc, hit in zip(docs, matches) if not hit]
        stores.write_jsonl_docs(location, local_cls.name, kept)
        return len(docs) - len(kept)

    def translate(self, item: Union[SubQuery, SubWrite]) -> str:
        return document_translate(item)


class RelationalAdapter(Adapter):
    """SQLite-backed site: sub-queries and writes run as the exact SQL
    text that translate() renders, so engine and explain never diverge."""

    kind = "RELATIONAL"

    def __init__(self, schema: LocalSchemaDescriptor):
        super().__init__(schema)
        self.store = stores.SqliteStore(schema)

    def run_subquery(self, sq: SubQuery) -> tuple[list[Row], int]:
        self._class(sq.local_class)
        sql = relational_translate(sq)
        raw = self.store.query(sql)
        rows = [
            [_from_sqlite(value, col.out_type) for value, col in zip(tup, sq.columns)]
            for tup in raw
        ]
        return rows, 0

    def apply_write(self, sw: SubWrite) -> int:
        self._class(sw.local_class)
        return self.store.execute(relational_translate(sw))

    def translate(self, item: Union[SubQuery, SubWrite]) -> str:
        return relational_translate(item)


def _from_sqlite(value, out_type: CanonicalType) -> Value:
    if value is None:
        return None
    if out_type is CanonicalType.BOOL:
        return bool(value)
    if out_type is CanonicalType.FLOAT and isinstance(value, int):
        return float(value)
    return value


_ADAPTERS = {
    "RELATIONAL": RelationalAdapter,
    "DOCUMENT": DocumentAdapter,
    "CSV": CsvAdapter,
}


def build_adapter(adapter_kind: str, schema: LocalSchemaDescriptor) -> Adapter:
    try:
        ctor = _ADAPTERS[adapter_kind]
    except KeyError:
        raise StoreUnreadable(f"unknown adapter kind {adapter_kind!r}") from None
    return ctor(schema)
