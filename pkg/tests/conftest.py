"""Shared fixtures: the acme federation (two classes, three sites, all
three adapter kinds) plus helpers to build embedded connection sets."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from mdbs.catalog.io import load_catalog
from mdbs.catalog.model import Catalog
from mdbs.catalog.registry import CatalogRegistry
from mdbs.sites.adapters import build_adapter
from mdbs.sites.connect import EmbeddedConnection
from mdbs.sites.firewall import server_only_policy

DEFAULT_EMP_ROWS = [
    ("1", "Ann", "62000.0", "R&D"),
    ("2", "Bob", "48000.0", "Sales"),
]
DEFAULT_BRANCH_DOCS = [
    {"id": 9, "full_name": "Bo", "salary": "51000.5", "dept": "R&D"},
]
DEFAULT_CUST_ROWS = [("7", "Ada"), ("8", "Cy")]
DEFAULT_CREDIT_ROWS = [("7", "1000.0"), ("8", "250.0")]


def write_acme_stores(
    root: Path,
    emp_rows=None,
    branch_docs=None,
    cust_rows=None,
    credit_rows=None,
) -> dict[str, str]:
    """Create the three site store directories; returns their locations."""
    emp_rows = DEFAULT_EMP_ROWS if emp_rows is None else emp_rows
    branch_docs = DEFAULT_BRANCH_DOCS if branch_docs is None else branch_docs
    cust_rows = DEFAULT_CUST_ROWS if cust_rows is None else cust_rows
    credit_rows = DEFAULT_CREDIT_ROWS if credit_rows is None else credit_rows

    hq = root / "hq"
    branch = root / "branch"
    fin = root / "fin"
    for d in (hq, branch, fin):
        d.mkdir(parents=True, exist_ok=True)

    (hq / "EMP.csv").write_text(
        "ENO,ENAME,SAL,DEPT\n" + "".join(",".join(r) + "\n" for r in emp_rows)
    )
    (hq / "CUST.csv").write_text(
        "ID,CNAME\n" + "".join(",".join(r) + "\n" for r in cust_rows)
    )
    (hq / "dictionary.json").write_text(
        json.dumps(
            {
                "EMP": {"ENO": "INTEGER", "ENAME": "VARCHAR", "SAL": "DECIMAL", "DEPT": "VARCHAR"},
                "CUST": {"ID": "INTEGER", "CNAME": "VARCHAR"},
            }
        )
    )
    (branch / "docs.jsonl").write_text(
        "".join(json.dumps(doc) + "\n" for doc in branch_docs)
    )
    (fin / "CREDIT.csv").write_text(
        "cust_id,limit\n" + "".join(",".join(r) + "\n" for r in credit_rows)
    )
    return {"hq": str(hq), "branch": str(branch), "fin": str(fin)}


def acme_doc(
    locations: dict[str, str],
    *,
    employee_routes: bool = False,
    site_modes: dict[str, str] | None = None,
    endpoints: dict[str, str] | None = None,
    views: list[dict] | None = None,
) -> str:
    """The canonical two-class catalog document over the given stores."""
    site_modes = site_modes or {}
    endpoints = endpoints or {}

    def site(site_id: str, adapter: str) -> dict:
        doc = {
            "id": site_id,
            "mode": site_modes.get(site_id, "EMBEDDED"),
            "adapter": adapter,
            "token": f"{site_id}-secret",
        }
        if site_id in endpoints:
            doc["endpoint"] = endpoints[site_id]
        return doc

    hq_fragment = {
        "site": "hq",
        "local_class": "EMP",
        "attr_maps": [
            {"local": "ENO", "global": "emp_id"},
            {"local": "ENAME", "global": "name"},
            {"local": "SAL", "global": "salary"},
            {"local": "DEPT", "global": "dept"},
        ],
    }
    branch_fragment = {
        "site": "branch",
        "local_class": "docs",
        "attr_maps": [
            {"local": "id", "global": "emp_id"},
            {"local": "full_name", "global": "name"},
            {"local": "salary", "global": "salary", "cast": "STRING"},
            {"local": "dept", "global": "dept"},
        ],
    }
    if employee_routes:
        hq_fragment["route_when"] = "dept = 'R&D'"
        branch_fragment["route_when"] = "dept != 'R&D'"

    doc = {
        "version_hint": 1,
        "classes": [
            {
                "name": "Employee",
                "attributes": [
                    {"name": "emp_id", "type": "INT", "nullable": False},
                    {"name": "name", "type": "STRING"},
                    {"name": "salary", "type": "FLOAT"},
                    {"name": "dept", "type": "STRING"},
                ],
            },
            {
                "name": "Customer",
                "attributes": [
                    {"name": "cust_id", "type": "INT", "nullable": False},
                    {"name": "name", "type": "STRING"},
                    {"name": "credit_limit", "type": "FLOAT"},
                ],
            },
        ],
        "mappings": [
            {
                "class": "Employee",
                "kind": "HORIZONTAL",
                "fragments": [hq_fragment, branch_fragment],
            },
            {
                "class": "Customer",
                "kind": "VERTICAL",
                "join_key": "cust_id",
                "fragments": [
                    {
                        "site": "hq",
                        "local_class": "CUST",
                        "attr_maps": [
                            {"local": "ID", "global": "cust_id"},
                            {"local": "CNAME", "global": "name"},
                        ],
                    },
                    {
                        "site": "fin",
                        "local_class": "CREDIT",
                        "attr_maps": [
                            {"local": "cust_id", "global": "cust_id"},
                            {"local": "limit", "global": "credit_limit"},
                        ],
                    },
                ],
            },
        ],
        "sites": [
            site("hq", "RELATIONAL"),
            site("branch", "DOCUMENT"),
            site("fin", "CSV"),
        ],
        "local_schemas": [
            {
                "site": "hq",
                "classes": [
                    {
                        "name": "EMP",
                        "attributes": [
                            {"name": "ENO", "type": "INT", "nullable": False},
                            {"name": "ENAME", "type": "STRING"},
                            {"name": "SAL", "type": "FLOAT"},
                            {"name": "DEPT", "type": "STRING"},
                        ],
                    },
                    {
                        "name": "CUST",
                        "attributes": [
                            {"name": "ID", "type": "INT", "nullable": False},
                            {"name": "CNAME", "type": "STRING"},
                        ],
                    },
                ],
                "storage": {"format": "SQL_TABLE", "location": locations["hq"]},
            },
            {
                "site": "branch",
                "classes": [
                    {
                        "name": "docs",
                        "attributes": [
                            {"name": "id", "type": "INT", "nullable": False},
                            {"name": "full_name", "type": "STRING"},
                            {"name": "salary", "type": "STRING"},
                            {"name": "dept", "type": "STRING"},
                        ],
                    }
                ],
                "storage": {"format": "JSONL_FILE", "location": locations["branch"]},
            },
            {
                "site": "fin",
                "classes": [
                    {
                        "name": "CREDIT",
                        "attributes": [
                            {"name": "cust_id", "type": "INT", "nullable": False},
                            {"name": "limit", "type": "FLOAT"},
                        ],
                    }
                ],
                "storage": {"format": "CSV_FILE", "location": locations["fin"]},
            },
        ],
        "views": views or [],
    }
    return json.dumps(doc, indent=2)


def embedded_connections(catalog: Catalog) -> dict:
    connections = {}
    for site in catalog.sites:
        schema = catalog.local_schema_for(site.site_id)
        adapter = build_adapter(site.adapter_kind, schema)
        connections[site.site_id] = EmbeddedConnection(
            site, adapter, server_only_policy()
        )
    return connections


@pytest.fixture
def acme_locations(tmp_path):
    return write_acme_stores(tmp_path)


@pytest.fixture
def acme_catalog(acme_locations):
    registry = CatalogRegistry()
    return registry.publish(load_catalog(acme_doc(acme_locations)))


@pytest.fixture
def acme_connections(acme_catalog):
    return embedded_connections(acme_catalog)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and getattr(report, "when", "call") == "call":
                lines.append(f"{nodeid.split('::')[-1]}: {outcome.upper()}")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
