"""Acceptance suite: one test per exit criterion, at desk scale.

Every tolerance is pinned here; the terminal summary prints one line
per criterion (see conftest).
"""
import json
import random
import threading
import time
from dataclasses import replace

import pytest
import requests

from mdbs.catalog.io import load_catalog
from mdbs.catalog.registry import CatalogRegistry
from mdbs.decompose import decompose_select, decompose_write, split_predicate
from mdbs.errors import PartialUnsupported, SiteUnavailable
from mdbs.execute import ExecOptions, execute_plan, execute_write
from mdbs.gql.parser import parse_statement
from mdbs.gql.typecheck import bind_predicate, validate
from mdbs.oracle import materialize, reference_evaluate
from mdbs.predicate import eval_predicate
from mdbs.server.app import MdbsServer
from mdbs.server.config import ServerConfig
from mdbs.sites.agent import AgentConfig, SiteAgent
from mdbs.sites.connect import MDBS_PRINCIPAL, RemoteConnection
from mdbs.sites.firewall import DENY, DROP, FORWARD, FirewallPolicy, FirewallRule

from conftest import acme_doc, embedded_connections, write_acme_stores
from randgen import (
    _random_predicate,
    assert_equivalent,
    build_federation,
    norm_rows,
    random_select,
)


def _typed(text, catalog):
    return validate(parse_statement(text), catalog)


# -- criterion: oracle equivalence ---------------------------------------------

def test_oracle_equivalence(tmp_path):
    """>=500 randomized SELECTs over >=20 randomized catalogs equal the
    brute-force oracle as multisets (ordered where ORDER BY), in <3min."""
    started = time.monotonic()
    catalog_count = 22
    queries_per_catalog = 24
    kinds_seen = set()
    mapping_kinds = set()
    total = 0
    for i in range(catalog_count):
        rng = random.Random(53_000 + i)
        root = tmp_path / f"fed{i}"
        root.mkdir()
        catalog, connections = build_federation(
            rng, root, max_sites=4, max_classes=6, max_rows=200
        )
        kinds_seen |= {s.adapter_kind for s in catalog.sites}
        mapping_kinds |= {m.kind for m in catalog.mappings}
        db = materialize(catalog, connections)
        for _ in range(queries_per_catalog):
            select = random_select(rng, catalog)
            typed = validate(select, catalog)
            plan = decompose_select(typed, catalog)
            engine, statuses = execute_plan(plan, connections)
            assert all(s.outcome == "OK" for s in statuses)
            assert_equivalent(engine, reference_evaluate(typed, db), select)
            total += 1
    elapsed = time.monotonic() - started
    assert total >= 500
    assert kinds_seen == {"RELATIONAL", "DOCUMENT", "CSV"}
    assert mapping_kinds == {"HORIZONTAL", "VERTICAL"}
    assert elapsed < 180, f"oracle equivalence took {elapsed:.1f}s"


# -- criterion: pushdown conservation ---------------------------------------------

def test_pushdown_conservation(tmp_path):
    """>=200 random predicate/fragment pairs: pushed AND residual agrees
    with the original on every oracle row."""
    pairs = 0
    i = 0
    while pairs < 200 and i < 24:
        rng = random.Random(91_000 + i)
        root = tmp_path / f"fed{i}"
        root.mkdir()
        i += 1
        catalog, connections = build_federation(rng, root, max_rows=60)
        db = materialize(catalog, connections)
        for cls in catalog.classes:
            table = db.table(cls.name)
            rule = catalog.mapping_for(cls.name)
            for _ in range(8):
                predicate = bind_predicate(
                    _random_predicate(rng, list(cls.attributes)), cls
                )
                for frag in rule.fragments:
                    local_cls = catalog.local_schema_for(frag.site_id).local_class(
                        frag.local_class
                    )
                    pushed, residual, _ = split_predicate(
                        predicate, frag, cls, local_cls
                    )
                    for row in table.rows:
                        gdict = dict(zip(table.columns, row))
                        local_view = {
                            m.local_attr: gdict[cls.attribute(m.global_attr).name]
                            for m in frag.attr_maps
                            if local_cls.attribute(m.local_attr) is not None
                        }
                        whole = eval_predicate(predicate, gdict)
                        parts = (
                            pushed is None or eval_predicate(pushed, local_view)
                        ) and (residual is None or eval_predicate(residual, gdict))
                        assert whole == parts
                    pairs += 1
    assert pairs >= 200, f"only {pairs} predicate/fragment pairs exercised"


# -- criterion: heterogeneity invisibility ------------------------------------------

HETERO_QUERIES = [
    "SELECT * FROM Item",
    "SELECT k, nm FROM Item",
    "SELECT nm FROM Item WHERE k > 3",
    "SELECT * FROM Item WHERE amt >= 10.5",
    "SELECT * FROM Item WHERE flag = TRUE",
    "SELECT * FROM Item WHERE flag != TRUE",
    "SELECT k FROM Item WHERE nm = 'red'",
    "SELECT k FROM Item WHERE nm != 'red'",
    "SELECT * FROM Item WHERE nm < 'n'",
    "SELECT * FROM Item WHERE amt = NULL",
    "SELECT * FROM Item WHERE k >= 2 AND amt < 90.0",
    "SELECT * FROM Item WHERE k < 2 OR amt > 90.0",
    "SELECT * FROM Item WHERE k = amt",
    "SELECT * FROM Item ORDER BY k ASC",
    "SELECT * FROM Item ORDER BY amt DESC",
    "SELECT nm, k FROM Item ORDER BY k DESC LIMIT 3",
    "SELECT * FROM Item ORDER BY k LIMIT 0",
    "SELECT * FROM Item WHERE amt > 100000.0",
    "SELECT k, k FROM Item",
    "SELECT * FROM Item WHERE k <= 4 ORDER BY nm",
]

ITEM_ROWS = [
    (1, "red", 10.5, True),
    (2, "blue", None, False),
    (3, "green", 7.25, True),
    (4, "red", 90.0, None),
    (5, None, 4.0, False),
    (6, "amber", 90.0, True),
    (7, "teal", -3.5, False),
    (8, "red", 2.0, True),
]


def _item_catalog(root, adapter_kind: str):
    location = root / adapter_kind.lower()
    location.mkdir()
    cells = lambda v: "" if v is None else (
        "true" if v is True else "false" if v is False else repr(v) if isinstance(v, float) else str(v)
    )
    if adapter_kind in ("CSV", "RELATIONAL"):
        with open(location / "items.csv", "w") as fh:
            fh.write("k,nm,amt,flag\n")
            for row in ITEM_ROWS:
                fh.write(",".join(cells(v) for v in row) + "\n")
        if adapter_kind == "RELATIONAL":
            (location / "dictionary.json").write_text(
                json.dumps({"items": {"k": "INTEGER", "nm": "VARCHAR", "amt": "DECIMAL", "flag": "BOOLEAN"}})
            )
    else:
        with open(location / "items.jsonl", "w") as fh:
            for k, nm, amt, flag in ITEM_ROWS:
                fh.write(json.dumps({"k": k, "nm": nm, "amt": amt, "flag": flag}) + "\n")
    storage_format = {"RELATIONAL": "SQL_TABLE", "DOCUMENT": "JSONL_FILE", "CSV": "CSV_FILE"}[adapter_kind]
    doc = {
        "version_hint": 1,
        "classes": [
            {
                "name": "Item",
                "attributes": [
                    {"name": "k", "type": "INT", "nullable": False},
                    {"name": "nm", "type": "STRING"},
                    {"name": "amt", "type": "FLOAT"},
                    {"name": "flag", "type": "BOOL"},
                ],
            }
        ],
        "mappings": [
            {
                "class": "Item",
                "kind": "HORIZONTAL",
                "fragments": [
                    {
                        "site": "s1",
                        "local_class": "items",
                        "attr_maps": [
                            {"local": "k", "global": "k"},
                            {"local": "nm", "global": "nm"},
                            {"local": "amt", "global": "amt"},
                            {"local": "flag", "global": "flag"},
                        ],
                    }
                ],
            }
        ],
        "sites": [{"id": "s1", "mode": "EMBEDDED", "adapter": adapter_kind, "token": "t"}],
        "local_schemas": [
            {
                "site": "s1",
                "classes": [
                    {
                        "name": "items",
                        "attributes": [
                            {"name": "k", "type": "INT", "nullable": False},
                            {"name": "nm", "type": "STRING"},
                            {"name": "amt", "type": "FLOAT"},
                            {"name": "flag", "type": "BOOL"},
                        ],
                    }
                ],
                "storage": {"format": storage_format, "location": str(location)},
            }
        ],
        "views": [],
    }
    path = root / f"catalog_{adapter_kind.lower()}.json"
    path.write_text(json.dumps(doc))
    return path


def _strip_elapsed(response: dict) -> dict:
    out = dict(response)
    out.pop("elapsed_ms", None)
    out["per_site"] = [
        {k: v for k, v in s.items() if k != "elapsed_ms"} for s in out.get("per_site", [])
    ]
    return out


def test_heterogeneity_invisibility(tmp_path):
    """The same logical data behind the three adapter kinds yields
    byte-identical query responses, elapsed fields aside."""
    servers = {}
    try:
        for kind in ("RELATIONAL", "DOCUMENT", "CSV"):
            path = _item_catalog(tmp_path, kind)
            servers[kind] = MdbsServer(ServerConfig(catalog_path=str(path), port=0))
        for text in HETERO_QUERIES:
            bodies = {}
            for kind, server in servers.items():
                response = server.handle_query(text)
                assert "error" not in response, (kind, text, response.get("error"))
                bodies[kind] = json.dumps(_strip_elapsed(response), sort_keys=True)
            assert bodies["RELATIONAL"] == bodies["DOCUMENT"] == bodies["CSV"], text
    finally:
        for server in servers.values():
            server._http.server_close()


# -- criterion: write semantics -------------------------------------------------------

def test_write_semantics(tmp_path):
    """Vertical INSERT read-back is exact; a mixed-outcome write reports
    [OK, DENIED], does not roll back, and later reads see the half-applied
    state."""
    locations = write_acme_stores(tmp_path)
    catalog = CatalogRegistry().publish(load_catalog(acme_doc(locations)))
    connections = embedded_connections(catalog)

    tw = _typed(
        "INSERT INTO Customer (cust_id, name, credit_limit) VALUES (9, 'Eve', 750.0)",
        catalog,
    )
    statuses = execute_write(decompose_write(tw, catalog), connections)
    assert [s.outcome for s in statuses] == ["OK", "OK"]
    db = materialize(catalog, connections)
    rows = reference_evaluate(_typed("SELECT * FROM Customer", catalog), db).rows
    assert [9, "Eve", 750.0] in rows and len(rows) == 3

    # deny writes at fin only
    deny_writes = FirewallPolicy(
        rules=(
            FirewallRule(MDBS_PRINCIPAL, "READ", FORWARD),
            FirewallRule(MDBS_PRINCIPAL, "SCHEMA", FORWARD),
            FirewallRule("*", "WRITE", DENY),
        ),
        default=DENY,
    )
    from mdbs.sites.adapters import build_adapter
    from mdbs.sites.connect import EmbeddedConnection

    site = catalog.site_named("fin")
    connections["fin"] = EmbeddedConnection(
        site, build_adapter("CSV", catalog.local_schema_for("fin")), deny_writes
    )
    tw2 = _typed(
        "INSERT INTO Customer (cust_id, name, credit_limit) VALUES (10, 'Hal', 5.0)",
        catalog,
    )
    statuses = execute_write(decompose_write(tw2, catalog), connections)
    assert [s.outcome for s in statuses] == ["OK", "DENIED"]

    # half-applied: the hq-only plan sees key 10, the join does not
    plan_keys = decompose_select(_typed("SELECT cust_id FROM Customer", catalog), catalog)
    keys, _ = execute_plan(plan_keys, connections)
    assert [10] in keys.rows
    db = materialize(catalog, connections)
    joined = reference_evaluate(_typed("SELECT * FROM Customer", catalog), db).rows
    assert all(row[0] != 10 for row in joined)


# -- criterion: firewall behavior ------------------------------------------------------

def test_firewall_deny_drop_and_default(tmp_path):
    """DENY answers explicitly well under the timeout; DROP manifests as a
    client timeout at 2000ms (allowing scheduling slack, <4000ms); unknown
    principals are denied by default."""
    locations = write_acme_stores(tmp_path)
    catalog = load_catalog(acme_doc(locations))
    schema = catalog.local_schema_for("fin")
    policy = FirewallPolicy(
        rules=(
            FirewallRule(MDBS_PRINCIPAL, "READ", FORWARD),
            FirewallRule(MDBS_PRINCIPAL, "WRITE", DROP),
        ),
        default=DENY,
    )
    agent = SiteAgent(
        AgentConfig(
            site_id="fin",
            adapter_kind="CSV",
            local_schema=schema,
            principals={MDBS_PRINCIPAL: "fin-secret"},
            policy=policy,
            drop_hold_s=6.0,
        )
    ).start()
    try:
        site = replace(catalog.site_named("fin"), endpoint=agent.endpoint, mode="REMOTE")
        conn = RemoteConnection(site)
        from mdbs.plan import OutputCol, SubQuery, SubWrite
        from mdbs.sites.connect import AgentDenied, AgentTimeout
        from mdbs.types import CanonicalType as CT

        sq = SubQuery(
            "fin",
            "CREDIT",
            columns=(OutputCol("cust_id", "cust_id", CT.INT, CT.INT),),
        )

        # unknown principal (bad token) -> explicit denial, fast
        bad = RemoteConnection(replace(site, principal_token="nope"))
        started = time.monotonic()
        with pytest.raises(AgentDenied):
            bad.run_subquery(sq, 2.0)
        deny_elapsed = time.monotonic() - started
        assert deny_elapsed < 2.0

        # DROP -> silence until the client's own 2000ms deadline
        sw = SubWrite("fin", "CREDIT", "INSERT", values=(("cust_id", 99), ("limit", 1.0)))
        started = time.monotonic()
        with pytest.raises(AgentTimeout):
            conn.apply_write(sw, 2.0)
        drop_elapsed = time.monotonic() - started
        assert 2.0 <= drop_elapsed < 4.0, f"drop produced {drop_elapsed:.3f}s"

        # reads forwarded fine for the registered principal
        rows, _ = conn.run_subquery(sq, 2.0)
        assert len(rows) == 2
    finally:
        agent.stop()


# -- criterion: partial-failure matrix ---------------------------------------------------

def test_partial_failure_matrix(tmp_path):
    """Horizontal with one dead site: FAIL_FAST errors naming it, PARTIAL
    returns survivors flagged partial. Vertical with one dead side errors
    in both modes."""
    locations = write_acme_stores(tmp_path)
    # branch and fin become REMOTE endpoints that refuse connections
    doc = acme_doc(
        locations,
        site_modes={"branch": "REMOTE", "fin": "REMOTE"},
        endpoints={"branch": "http://127.0.0.1:9", "fin": "http://127.0.0.1:9"},
    )
    catalog = CatalogRegistry().publish(load_catalog(doc))
    connections = embedded_connections(catalog)
    connections["branch"] = RemoteConnection(catalog.site_named("branch"))
    connections["fin"] = RemoteConnection(catalog.site_named("fin"))
    opts_ff = ExecOptions(timeout_ms=500, failure_mode="FAIL_FAST")
    opts_partial = ExecOptions(timeout_ms=500, failure_mode="PARTIAL")

    plan = decompose_select(_typed("SELECT name FROM Employee", catalog), catalog)
    with pytest.raises(SiteUnavailable) as err:
        execute_plan(plan, connections, opts_ff)
    assert "branch" in err.value.message

    result, statuses = execute_plan(plan, connections, opts_partial)
    assert result.partial is True
    assert norm_rows(result.rows) == norm_rows([["Ann"], ["Bob"]])
    assert {s.site_id: s.outcome for s in statuses} == {"hq": "OK", "branch": "TIMEOUT"}

    vplan = decompose_select(
        _typed("SELECT name, credit_limit FROM Customer", catalog), catalog
    )
    with pytest.raises(SiteUnavailable):
        execute_plan(vplan, connections, opts_ff)
    with pytest.raises(PartialUnsupported):
        execute_plan(vplan, connections, opts_partial)


# -- criterion: single point of failure ----------------------------------------------------

def test_single_point_of_failure(tmp_path):
    """With the multidatabase server stopped and every site agent healthy,
    every client query fails."""
    locations = write_acme_stores(tmp_path)
    catalog = load_catalog(acme_doc(locations))
    agents = []
    try:
        for site_id, adapter in (("fin", "CSV"), ("branch", "DOCUMENT")):
            agents.append(
                SiteAgent(
                    AgentConfig(
                        site_id=site_id,
                        adapter_kind=adapter,
                        local_schema=catalog.local_schema_for(site_id),
                        principals={MDBS_PRINCIPAL: f"{site_id}-secret"},
                        policy=FirewallPolicy(
                            rules=(FirewallRule(MDBS_PRINCIPAL, "*", FORWARD),),
                            default=DENY,
                        ),
                    )
                ).start()
            )
        catalog_path = tmp_path / "catalog.json"
        catalog_path.write_text(acme_doc(locations))
        server = MdbsServer(ServerConfig(catalog_path=str(catalog_path), port=0)).start()
        url = server.url
        assert requests.get(f"{url}/v1/health", timeout=5).status_code == 200
        server.stop()

        failures = 0
        attempts = 10
        for _ in range(attempts):
            try:
                requests.post(
                    f"{url}/v1/query", json={"text": "SELECT * FROM Employee"}, timeout=2
                )
            except requests.RequestException:
                failures += 1
        assert failures == attempts  # 100%

        # the agents themselves are still alive and answering
        for agent in agents:
            resp = requests.get(
                f"{agent.endpoint}/agent/v1/schema",
                headers={
                    "X-MDBS-Principal": MDBS_PRINCIPAL,
                    "X-MDBS-Token": f"{agent.config.site_id}-secret",
                },
                timeout=5,
            )
            assert resp.status_code == 200
    finally:
        for agent in agents:
            agent.stop()


# -- criterion: concurrency under reload ------------------------------------------------------

def test_concurrent_queries_during_reloads(tmp_path):
    """32 concurrent identical queries while the catalog reloads 100 times:
    every response is internally consistent with the one catalog version it
    reports (odd versions expose 4 Employee attributes, even ones 5)."""
    locations = write_acme_stores(tmp_path)
    base = json.loads(acme_doc(locations))
    wide = json.loads(acme_doc(locations))
    wide["classes"][0]["attributes"].append({"name": "grade", "type": "STRING"})
    catalog_path = tmp_path / "catalog.json"
    catalog_path.write_text(json.dumps(base))

    server = MdbsServer(ServerConfig(catalog_path=str(catalog_path), port=0)).start()
    try:
        stop = threading.Event()
        bad: list = []
        counts = {"queries": 0}
        lock = threading.Lock()

        def worker():
            while not stop.is_set():
                try:
                    body = requests.post(
                        f"{server.url}/v1/query",
                        json={"text": "SELECT * FROM Employee"},
                        timeout=10,
                    ).json()
                except requests.RequestException as exc:
                    bad.append(f"transport: {exc}")
                    continue
                if "error" in body:
                    bad.append(body["error"])
                    continue
                version = body["catalog_version"]
                expected = 4 if version % 2 == 1 else 5
                if len(body["columns"]) != expected:
                    bad.append((version, body["columns"]))
                if any(len(r) != len(body["columns"]) for r in body["rows"]):
                    bad.append((version, "ragged rows"))
                with lock:
                    counts["queries"] += 1

        threads = [threading.Thread(target=worker) for _ in range(32)]
        for t in threads:
            t.start()
        for i in range(100):
            catalog_path.write_text(json.dumps(wide if i % 2 == 0 else base))
            resp = requests.post(f"{server.url}/v1/catalog/reload", timeout=10)
            assert resp.status_code == 200
        stop.set()
        for t in threads:
            t.join()
        assert not bad, bad[:5]
        assert counts["queries"] > 100
        assert requests.get(f"{server.url}/v1/health", timeout=5).json()["catalog_version"] == 101
    finally:
        server.stop()


# -- criterion: evolution ------------------------------------------------------------------------

def test_evolution_stale_mapping(tmp_path):
    """Removing a mapped local attribute flags the mapping stale; queries
    against it then fail with STALE_MAPPING while other classes stay live."""
    import dataclasses

    from mdbs import pipeline as pl
    from mdbs.catalog.io import serialize_catalog

    locations = write_acme_stores(tmp_path)
    catalog_path = tmp_path / "catalog.json"
    catalog_path.write_text(acme_doc(locations))
    server = MdbsServer(ServerConfig(catalog_path=str(catalog_path), port=0)).start()
    try:
        snapshot = server.state().snapshot
        old_ls = snapshot.local_schema_for("hq")
        emp = old_ls.local_class("EMP")
        slim = dataclasses.replace(
            emp, attributes=tuple(a for a in emp.attributes if a.name != "SAL")
        )
        new_ls = dataclasses.replace(
            old_ls, classes=tuple(slim if c.name == "EMP" else c for c in old_ls.classes)
        )
        diff = pl.diff_local_schema(old_ls, new_ls)
        assert diff.removed == frozenset({("EMP", "SAL")})
        marked = pl.mark_stale(snapshot, diff)
        assert marked.mapping_for("Employee").stale is True
        assert marked.mapping_for("Customer").stale is False

        catalog_path.write_text(serialize_catalog(marked))
        assert requests.post(f"{server.url}/v1/catalog/reload", timeout=5).status_code == 200

        body = requests.post(
            f"{server.url}/v1/query", json={"text": "SELECT * FROM Employee"}, timeout=5
        ).json()
        assert body["error"]["kind"] == "STALE_MAPPING"
        ok = requests.post(
            f"{server.url}/v1/query", json={"text": "SELECT * FROM Customer"}, timeout=5
        ).json()
        assert "error" not in ok
    finally:
        server.stop()
