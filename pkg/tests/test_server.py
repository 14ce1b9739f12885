import pytest
import requests

from mdbs.errors import InvalidCatalog
from mdbs.server.app import MdbsServer
from mdbs.server.config import ServerConfig, server_config_from_json

from conftest import acme_doc, write_acme_stores


@pytest.fixture
def running_server(tmp_path):
    locations = write_acme_stores(tmp_path)
    catalog_path = tmp_path / "catalog.json"
    catalog_path.write_text(
        acme_doc(
            locations,
            views=[{"name": "wealthy", "query": "SELECT name, credit_limit FROM Customer WHERE credit_limit > 500.0"}],
        )
    )
    server = MdbsServer(ServerConfig(catalog_path=str(catalog_path), port=0)).start()
    yield server, catalog_path, locations
    server.stop()


def _post(server, payload):
    return requests.post(f"{server.url}/v1/query", json=payload, timeout=10)


def test_schema_endpoint(running_server):
    server, _, _ = running_server
    doc = requests.get(f"{server.url}/v1/schema", timeout=5).json()
    assert [c["name"] for c in doc["classes"]] == ["Employee", "Customer"]
    employee = doc["classes"][0]
    assert employee["mapping"]["kind"] == "HORIZONTAL"
    assert [f["site"] for f in employee["mapping"]["fragments"]] == ["hq", "branch"]


def test_health_and_sites(running_server):
    server, _, _ = running_server
    health = requests.get(f"{server.url}/v1/health", timeout=5).json()
    assert health["status"] == "ok" and health["catalog_version"] == 1
    sites = requests.get(f"{server.url}/v1/sites", timeout=5).json()["sites"]
    assert {s["id"]: s["health"] for s in sites} == {
        "hq": "ok",
        "branch": "ok",
        "fin": "ok",
    }


def test_site_schema_proxied(running_server):
    server, _, _ = running_server
    doc = requests.get(f"{server.url}/v1/sites/hq/schema", timeout=5).json()
    names = [c["name"] for c in doc["schema"]["classes"]]
    assert names == ["EMP", "CUST"]


def test_query_execute(running_server):
    server, _, _ = running_server
    resp = _post(server, {"text": "SELECT name FROM Employee WHERE salary > 50000"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["columns"] == ["name"]
    assert sorted(r[0] for r in body["rows"]) == ["Ann", "Bo"]
    assert body["partial"] is False
    assert {s["site"] for s in body["per_site"]} == {"hq", "branch"}
    assert body["catalog_version"] == 1


def test_query_explain(running_server):
    server, _, _ = running_server
    body = _post(server, {"text": "SELECT name FROM Employee", "mode": "EXPLAIN"}).json()
    assert "explain" in body and "rows" not in body
    assert [s["site"] for s in body["explain"]["subqueries"]] == ["hq", "branch"]


@pytest.mark.parametrize(
    "text,kind",
    [
        ("SELECT @", "LEX_ERROR"),
        ("SELECT FROM", "SYNTAX_ERROR"),
        ("SELECT a FROM Ghost", "UNKNOWN_CLASS"),
        ("SELECT nam FROM Employee", "UNKNOWN_ATTRIBUTE"),
        ("UPDATE Employee SET salary = 'high'", "TYPE_MISMATCH"),
        (
            "INSERT INTO Employee (emp_id, name, salary, dept) VALUES (1, 'x', 1.0, 'y')",
            "NO_ROUTE",
        ),
    ],
)
def test_query_error_kinds(running_server, text, kind):
    server, _, _ = running_server
    resp = _post(server, {"text": text})
    assert resp.status_code == 400
    assert resp.json()["error"]["kind"] == kind


def test_views_listing_and_run(running_server):
    server, _, _ = running_server
    views = requests.get(f"{server.url}/v1/views", timeout=5).json()["views"]
    assert views[0]["name"] == "wealthy"
    body = requests.post(f"{server.url}/v1/views/wealthy/run", timeout=5).json()
    assert body["columns"] == ["name", "credit_limit"]
    assert body["rows"] == [["Ada", 1000.0]]


def test_view_query_through_frontend(running_server):
    server, _, _ = running_server
    body = _post(server, {"text": "SELECT name FROM wealthy"}).json()
    assert body["rows"] == [["Ada"]]


def test_reload_bumps_version_and_is_atomic(running_server):
    server, catalog_path, locations = running_server
    before = requests.get(f"{server.url}/v1/health", timeout=5).json()["catalog_version"]
    resp = requests.post(f"{server.url}/v1/catalog/reload", timeout=5)
    assert resp.json()["catalog_version"] == before + 1
    body = _post(server, {"text": "SELECT * FROM Employee"}).json()
    assert body["catalog_version"] == before + 1


def test_reload_invalid_catalog_keeps_serving(running_server):
    server, catalog_path, _ = running_server
    old = requests.get(f"{server.url}/v1/health", timeout=5).json()["catalog_version"]
    catalog_path.write_text('{"classes": [{"name": "X"}]}')
    resp = requests.post(f"{server.url}/v1/catalog/reload", timeout=5)
    assert resp.status_code == 400
    assert requests.get(f"{server.url}/v1/health", timeout=5).json()["catalog_version"] == old
    assert _post(server, {"text": "SELECT * FROM Employee"}).status_code == 200


def test_write_response_carries_statuses(running_server):
    server, _, _ = running_server
    body = _post(
        server,
        {"text": "INSERT INTO Customer (cust_id, name, credit_limit) VALUES (11, 'Io', 4.0)"},
    ).json()
    assert body["rows"] == [] and body["columns"] == []
    assert [s["outcome"] for s in body["per_site"]] == ["OK", "OK"]
    assert [s["rows_or_affected"] for s in body["per_site"]] == [1, 1]


def test_boot_refuses_invalid_catalog(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"classes": [{"name": "X", "attributes": []}]}')
    with pytest.raises(InvalidCatalog):
        MdbsServer(ServerConfig(catalog_path=str(path), port=0))


def test_unknown_endpoint_404(running_server):
    server, _, _ = running_server
    assert requests.get(f"{server.url}/v1/nope", timeout=5).status_code == 404
    assert requests.get(f"{server.url}/v1/sites/ghost/schema", timeout=5).status_code == 404


def test_server_config_parsing(tmp_path):
    doc = {
        "catalog": "cat.json",
        "listen": "127.0.0.1:0",
        "exec": {"timeout_ms": 1500, "failure_mode": "PARTIAL", "max_parallel": 3},
        "site_overrides": {"branch": {"endpoint": "http://example:1"}},
    }
    config = server_config_from_json(doc, base_dir=str(tmp_path))
    assert config.catalog_path == str(tmp_path / "cat.json")
    assert config.exec_defaults.timeout_ms == 1500
    assert config.exec_defaults.failure_mode == "PARTIAL"
    assert config.site_overrides["branch"]["endpoint"] == "http://example:1"


def test_remaining_error_kind_strings(tmp_path):
    """Every stable error kind surfaces through the query API somewhere in
    the suite; the rarer ones are pinned here."""
    import json as _json

    from mdbs.server.app import MdbsServer
    from mdbs.server.config import ServerConfig

    locations = write_acme_stores(tmp_path)
    doc = _json.loads(acme_doc(locations, employee_routes=True))
    for frag in doc["mappings"][0]["fragments"]:
        frag["route_when"] = "dept = 'R&D'"  # overlapping routes
    path = tmp_path / "catalog.json"
    path.write_text(_json.dumps(doc))
    server = MdbsServer(ServerConfig(catalog_path=str(path), port=0))

    body = server.handle_query(
        "INSERT INTO Employee (emp_id, name, salary, dept) VALUES (1, 'A', 1.0, 'R&D')"
    )
    assert body["error"]["kind"] == "AMBIGUOUS_ROUTE"

    body = server.handle_query(
        "INSERT INTO Employee (emp_id, name, salary, dept) VALUES (1, 'A', 1.0, 'Ops')"
    )
    assert body["error"]["kind"] == "NO_ROUTE"

    body = server.handle_query("UPDATE Customer SET credit_limit = 0.0 WHERE name = 'Ada'")
    assert body["error"]["kind"] == "UNSUPPORTED_RESIDUAL_WRITE"

    # dead remote side: FAIL_FAST -> SITE_UNAVAILABLE, PARTIAL on a vertical
    # plan -> PARTIAL_UNSUPPORTED
    doc2 = _json.loads(
        acme_doc(
            locations,
            site_modes={"fin": "REMOTE"},
            endpoints={"fin": "http://127.0.0.1:9"},
        )
    )
    path2 = tmp_path / "catalog2.json"
    path2.write_text(_json.dumps(doc2))
    server2 = MdbsServer(ServerConfig(catalog_path=str(path2), port=0))
    body = server2.handle_query(
        "SELECT name, credit_limit FROM Customer", timeout_ms=300
    )
    assert body["error"]["kind"] == "SITE_UNAVAILABLE"
    assert {s["site"] for s in body["per_site"]} == {"hq", "fin"}

    body = server2.handle_query(
        "SELECT name, credit_limit FROM Customer",
        failure_mode="PARTIAL",
        timeout_ms=300,
    )
    assert body["error"]["kind"] == "PARTIAL_UNSUPPORTED"

    # stale mapping surfaces through the API as well
    stale_doc = _json.loads(acme_doc(locations))
    stale_doc["mappings"][0]["stale"] = True
    path3 = tmp_path / "catalog3.json"
    path3.write_text(_json.dumps(stale_doc))
    server3 = MdbsServer(ServerConfig(catalog_path=str(path3), port=0))
    body = server3.handle_query("SELECT * FROM Employee")
    assert body["error"]["kind"] == "STALE_MAPPING"
