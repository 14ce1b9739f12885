"""Physical store access for the three adapter kinds.

CSV stores are RFC-4180-style files with a header row; document stores
are JSON-lines files; relational stores are in-memory SQLite databases
seeded from per-table CSV files plus a dictionary file naming each
column's native type.
"""
from __future__ import annotations

import csv
import json
import os
import sqlite3
import threading
from mdbs.catalog.model import LocalClass, LocalSchemaDescriptor
from mdbs.errors import HeaderMismatch, StoreUnreadable
from mdbs.types import CanonicalType, Value, parse_cell, render_cell

NATIVE_TO_CANONICAL = {
    "INTEGER": CanonicalType.INT,
    "INT": CanonicalType.INT,
    "BIGINT": CanonicalType.INT,
    "SMALLINT": CanonicalType.INT,
    "VARCHAR": CanonicalType.STRING,
    "CHAR": CanonicalType.STRING,
    "TEXT": CanonicalType.STRING,
    "STRING": CanonicalType.STRING,
    "DECIMAL": CanonicalType.FLOAT,
    "NUMERIC": CanonicalType.FLOAT,
    "REAL": CanonicalType.FLOAT,
    "FLOAT": CanonicalType.FLOAT,
    "DOUBLE": CanonicalType.FLOAT,
    "BOOLEAN": CanonicalType.BOOL,
    "BOOL": CanonicalType.BOOL,
}

CANONICAL_TO_NATIVE = {
    CanonicalType.INT: "INTEGER",
    CanonicalType.STRING: "VARCHAR",
    CanonicalType.FLOAT: "DECIMAL",
    CanonicalType.BOOL: "BOOLEAN",
}


def csv_path(location: str, class_name: str) -> str:
    return os.path.join(location, f"{class_name}.csv")


def jsonl_path(location: str, class_name: str) -> str:
    return os.path.join(location, f"{class_name}.jsonl")


def read_csv_raw(location: str, local_cls: LocalClass) -> list[dict[str, str]]:
    """Rows as raw header-keyed cells; declared columns must all be present."""
    path = csv_path(location, local_cls.name)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise HeaderMismatch(f"{path}: empty file, header required") from None
            missing = [a.name for a in local_cls.attributes if a.name not in header]
            if missing:
                raise HeaderMismatch(f"{path}: header missing columns {missing}")
            rows = []
            for cells in reader:
                rows.append(
                    {
                        name: cells[i] if i < len(cells) else ""
                        for i, name in enumerate(header)
                    }
                )
            return rows
    except OSError as exc:
        raise StoreUnreadable(f"{path}: {exc}") from None


def write_csv_raw(location: str, local_cls: LocalClass, rows: list[dict[str, str]]) -> None:
    path = csv_path(location, local_cls.name)
    names = [a.name for a in local_cls.attributes]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in rows:
            writer.writerow([row.get(name, "") for name in names])


def read_csv_rows(location: str, local_cls: LocalClass) -> list[dict[str, Value]]:
    """Typed rows; raises CastError through parse_cell on malformed cells."""
    rows = []
    for raw in read_csv_raw(location, local_cls):
        row: dict[str, Value] = {}
        for attr in local_cls.attributes:
            row[attr.name] = parse_cell(raw.get(attr.name, ""), attr.type)
        rows.append(row)
    return rows


def write_csv_rows(location: str, local_cls: LocalClass, rows: list[dict[str, Value]]) -> None:
    path = csv_path(location, local_cls.name)
    names = [a.name for a in local_cls.attributes]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in rows:
            writer.writerow([render_cell(row.get(name)) for name in names])


def read_jsonl_docs(location: str, class_name: str) -> list[dict]:
    path = jsonl_path(location, class_name)
    try:
        docs = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise StoreUnreadable(f"{path}:{lineno}: {exc.msg}") from None
                if not isinstance(doc, dict):
                    raise StoreUnreadable(f"{path}:{lineno}: not an object")
                docs.append(doc)
        return docs
    except OSError as exc:
        raise StoreUnreadable(f"{path}: {exc}") from None


def write_jsonl_docs(location: str, class_name: str, docs: list[dict]) -> None:
    path = jsonl_path(location, class_name)
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc) + "\n")


def append_jsonl_doc(location: str, class_name: str, doc: dict) -> None:
    path = jsonl_path(location, class_name)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(doc) + "\n")


class SqliteStore:
    """One in-memory database per site, seeded from the CSV files in the
    store directory.  Writes land in SQLite; the CSVs stay a seed."""

    def __init__(self, schema: LocalSchemaDescriptor):
        self.schema = schema
        self.location = schema.storage.location
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(":memory:", check_same_thread=False)
        self._natives = self._load_dictionary()
        for local_cls in schema.classes:
            self._create_and_seed(local_cls)

    def _load_dictionary(self) -> dict[str, dict[str, str]]:
        path = os.path.join(self.location, "dictionary.json")
        if not os.path.exists(path):
            return {}
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreUnreadable(f"{path}: {exc}") from None
        return doc

    def native_type(self, class_name: str, attr_name: str, canonical: CanonicalType) -> str:
        return self._natives.get(class_name, {}).get(
            attr_name, CANONICAL_TO_NATIVE[canonical]
        )

    def _create_and_seed(self, local_cls: LocalClass) -> None:
        cols = ", ".join(
            f"{a.name} {self.native_type(local_cls.name, a.name, a.type)}"
            for a in local_cls.attributes
        )
        with self._lock:
            self._conn.execute(f"CREATE TABLE {local_cls.name} ({cols})")
            seed = csv_path(self.location, local_cls.name)
            if os.path.exists(seed):
                rows = read_csv_rows(self.location, local_cls)
                names = [a.name for a in local_cls.attributes]
                marks = ", ".join("?" for _ in names)
                stmt = f"INSERT INTO {local_cls.name} ({', '.join(names)}) VALUES ({marks})"
                for row in rows:
                    self._conn.execute(stmt, [row.get(n) for n in names])
            self._conn.commit()

    def query(self, sql: str) -> list[tuple]:
        with self._lock:
            return self._conn.execute(sql).fetchall()

    def execute(self, sql: str) -> int:
        with self._lock:
            cursor = self._conn.execute(sql)
            self._conn.commit()
            return cursor.rowcount
