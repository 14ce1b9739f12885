"""The multidatabase server: HTTP/JSON API over the whole query pipeline.

One process owns the published catalog snapshot and is the only
principal that talks to site agents.  Each request pins the snapshot
(and its site connections) it started with; reload swaps both
atomically, so responses never mix catalog versions.
"""
from __future__ import annotations

import json
import mimetypes
import os
import threading
import time
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping, Optional

from mdbs.catalog.io import load_catalog_file
from mdbs.catalog.model import Catalog, SiteDescriptor
from mdbs.catalog.registry import CatalogRegistry
from mdbs.decompose import decompose_select, decompose_write, explain
from mdbs.errors import (
    InvalidCatalog,
    MdbsError,
    NotFound,
    PartialUnsupported,
    SiteUnavailable,
)
from mdbs.execute import ExecOptions, execute_plan, execute_write
from mdbs.gql.parser import parse_statement
from mdbs.gql.typecheck import TypedSelect, validate
from mdbs.server.config import ServerConfig
from mdbs.sites.adapters import Adapter, build_adapter
from mdbs.sites.connect import (
    EmbeddedConnection,
    RemoteConnection,
    SiteConnection,
)
from mdbs.sites.firewall import policy_from_json, server_only_policy


@dataclass(frozen=True)
class _State:
    snapshot: Catalog
    connections: Mapping[str, SiteConnection]


class MdbsServer:
    def __init__(self, config: ServerConfig):
        self.config = config
        self.registry = CatalogRegistry()
        self._adapter_cache: dict = {}
        self._reload_lock = threading.Lock()
        self._state = self._load_state(config.catalog_path)
        handler = type("Handler", (_ApiHandler,), {"server_app": self})
        self._http = ThreadingHTTPServer((config.host, config.port), handler)
        self._http.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    # -- catalog lifecycle --------------------------------------------------

    def _load_state(self, path: str) -> _State:
        catalog = load_catalog_file(path)
        catalog = self._apply_overrides(catalog)
        snapshot = self.registry.publish(catalog)  # raises InvalidCatalog
        return _State(snapshot, self._build_connections(snapshot))

    def _apply_overrides(self, catalog: Catalog) -> Catalog:
        if not self.config.site_overrides:
            return catalog
        sites = []
        for site in catalog.sites:
            override = self.config.site_overrides.get(site.site_id, {})
            site = replace(
                site,
                endpoint=override.get("endpoint", site.endpoint),
                principal_token=override.get("token", site.principal_token),
                mode=override.get("mode", site.mode),
            )
            sites.append(site)
        return replace(catalog, sites=tuple(sites))

    def _adapter_for(self, site: SiteDescriptor, snapshot: Catalog) -> Adapter:
        schema = snapshot.local_schema_for(site.site_id)
        key = (
            site.site_id,
            site.adapter_kind,
            schema.storage.format,
            schema.storage.location,
            schema.classes,
        )
        adapter = self._adapter_cache.get(key)
        if adapter is None:
            adapter = build_adapter(site.adapter_kind, schema)
            self._adapter_cache[key] = adapter
        return adapter

    def _build_connections(self, snapshot: Catalog) -> dict[str, SiteConnection]:
        connections: dict[str, SiteConnection] = {}
        for site in snapshot.sites:
            if site.mode == "REMOTE":
                connections[site.site_id] = RemoteConnection(site)
            else:
                override = self.config.site_overrides.get(site.site_id, {})
                policy = (
                    policy_from_json(override["policy"])
                    if "policy" in override
                    else server_only_policy()
                )
                connections[site.site_id] = EmbeddedConnection(
                    site, self._adapter_for(site, snapshot), policy
                )
        return connections

    def reload(self) -> int:
        with self._reload_lock:
            state = self._load_state(self.config.catalog_path)
            self._state = state
            return state.snapshot.version

    def state(self) -> _State:
        return self._state

    # -- query pipeline -------------------------------------------------------

    def handle_query(
        self,
        text: str,
        mode: str = "EXECUTE",
        failure_mode: Optional[str] = None,
        timeout_ms: Optional[int] = None,
    ) -> dict:
        state = self.state()
        snapshot = state.snapshot
        opts = self.config.exec_defaults
        if failure_mode or timeout_ms:
            opts = ExecOptions(
                timeout_ms=timeout_ms or opts.timeout_ms,
                failure_mode=failure_mode or opts.failure_mode,
                max_parallel=opts.max_parallel,
            )
        started = time.monotonic()
        try:
            statement = parse_statement(text)
            typed = validate(statement, snapshot)
            if isinstance(typed, TypedSelect):
                plan = decompose_select(typed, snapshot)
            else:
                plan = decompose_write(typed, snapshot)
            if mode.upper() == "EXPLAIN":
                return {
                    "explain": explain(plan, snapshot),
                    "catalog_version": snapshot.version,
                }
            if isinstance(typed, TypedSelect):
                result, statuses = execute_plan(plan, state.connections, opts)
                return {
                    "columns": list(result.columns),
                    "rows": result.rows,
                    "partial": result.partial,
                    "per_site": [s.to_json() for s in statuses],
                    "elapsed_ms": round((time.monotonic() - started) * 1000, 3),
                    "catalog_version": snapshot.version,
                }
            statuses = execute_write(plan, state.connections, opts)
            return {
                "columns": [],
                "rows": [],
                "partial": any(s.outcome != "OK" for s in statuses),
                "per_site": [s.to_json() for s in statuses],
                "elapsed_ms": round((time.monotonic() - started) * 1000, 3),
                "catalog_version": snapshot.version,
            }
        except (SiteUnavailable, PartialUnsupported) as exc:
            return {
                "error": exc.to_json(),
                "per_site": [s.to_json() for s in exc.statuses],
                "catalog_version": snapshot.version,
            }
        except MdbsError as exc:
            return {"error": exc.to_json(), "catalog_version": snapshot.version}

    # -- metadata endpoints ---------------------------------------------------

    def schema_doc(self) -> dict:
        snapshot = self.state().snapshot
        classes = []
        for cls in snapshot.classes:
            rule = snapshot.mapping_for(cls.name)
            entry = {
                "name": cls.name,
                "attributes": [
                    {"name": a.name, "type": a.type.value, "nullable": a.nullable}
                    for a in cls.attributes
                ],
            }
            if rule is not None:
                entry["mapping"] = {
                    "kind": rule.kind,
                    "stale": rule.stale,
                    "join_key": rule.join_key,
                    "fragments": [
                        {"site": f.site_id, "local_class": f.local_class}
                        for f in rule.fragments
                    ],
                }
            classes.append(entry)
        return {"catalog_version": snapshot.version, "classes": classes}

    def sites_doc(self) -> dict:
        state = self.state()
        sites = []
        for site in state.snapshot.sites:
            conn = state.connections.get(site.site_id)
            health = "unknown"
            if conn is not None:
                try:
                    conn.fetch_schema(0.5)
                    health = "ok"
                except Exception as exc:  # noqa: BLE001 - health is advisory
                    health = f"unreachable: {type(exc).__name__}"
            entry = {
                "id": site.site_id,
                "mode": site.mode,
                "adapter": site.adapter_kind,
                "health": health,
            }
            if site.endpoint:
                entry["endpoint"] = site.endpoint
            sites.append(entry)
        return {"catalog_version": state.snapshot.version, "sites": sites}

    def site_schema_doc(self, site_id: str) -> dict:
        state = self.state()
        site = state.snapshot.site_named(site_id)
        if site is None:
            raise NotFound(f"no site named {site_id!r}")
        conn = state.connections[site.site_id]
        return {"site": site.site_id, "schema": conn.fetch_schema(2.0)}

    def views_doc(self) -> dict:
        snapshot = self.state().snapshot
        return {
            "catalog_version": snapshot.version,
            "views": [{"name": v.name, "query": v.query_text} for v in snapshot.views],
        }

    def run_view(self, name: str) -> dict:
        snapshot = self.state().snapshot
        view = snapshot.view_named(name)
        if view is None:
            raise NotFound(f"no view named {name!r}")
        return self.handle_query(view.query_text, mode="EXECUTE")

    # -- process lifecycle -----------------------------------------------------

    @property
    def port(self) -> int:
        return self._http.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    def start(self) -> "MdbsServer":
        self._thread = threading.Thread(
            target=self._http.serve_forever, name="mdbs-server", daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self._http.shutdown()
        self._http.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        self._http.serve_forever()


class _ApiHandler(BaseHTTPRequestHandler):
    server_app: MdbsServer
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    def _send_json(self, code: int, body: dict) -> None:
        payload = json.dumps(body).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(payload)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        if not length:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError:
            return {}

    def _send_asset(self, rel: str) -> None:
        root = self.server_app.config.console_assets
        if not root:
            self._send_json(404, {"error": {"kind": "NOT_FOUND", "message": "no console assets"}})
            return
        rel = rel.lstrip("/") or "index.html"
        root_abs = os.path.abspath(root)
        path = os.path.abspath(os.path.join(root_abs, rel))
        if not path.startswith(root_abs + os.sep):
            self._send_json(404, {"error": {"kind": "NOT_FOUND", "message": rel}})
            return
        if not os.path.isfile(path):
            self._send_json(404, {"error": {"kind": "NOT_FOUND", "message": rel}})
            return
        ctype = mimetypes.guess_type(path)[0] or "application/octet-stream"
        with open(path, "rb") as fh:
            data = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        app = self.server_app
        path = self.path.split("?", 1)[0]
        try:
            if path == "/v1/health":
                self._send_json(
                    200, {"status": "ok", "catalog_version": app.state().snapshot.version}
                )
            elif path == "/v1/schema":
                self._send_json(200, app.schema_doc())
            elif path == "/v1/sites":
                self._send_json(200, app.sites_doc())
            elif path.startswith("/v1/sites/") and path.endswith("/schema"):
                site_id = path[len("/v1/sites/") : -len("/schema")]
                self._send_json(200, app.site_schema_doc(site_id))
            elif path == "/v1/views":
                self._send_json(200, app.views_doc())
            elif path == "/console" or path.startswith("/console/"):
                self._send_asset(path[len("/console") :])
            else:
                self._send_json(404, {"error": {"kind": "NOT_FOUND", "message": path}})
        except NotFound as exc:
            self._send_json(404, {"error": exc.to_json()})
        except MdbsError as exc:
            self._send_json(500, {"error": exc.to_json()})

    def do_POST(self):
        app = self.server_app
        path = self.path.split("?", 1)[0]
        try:
            if path == "/v1/query":
                body = self._read_json()
                text = body.get("text", "")
                response = app.handle_query(
                    text,
                    mode=body.get("mode", "EXECUTE"),
                    failure_mode=body.get("failure_mode"),
                    timeout_ms=body.get("timeout_ms"),
                )
                self._send_json(400 if "error" in response else 200, response)
            elif path == "/v1/catalog/reload":
                try:
                    version = app.reload()
                    self._send_json(200, {"status": "ok", "catalog_version": version})
                except InvalidCatalog as exc:
                    doc = {"error": exc.to_json()}
                    if exc.report is not None:
                        doc["report"] = exc.report.summary()
                    self._send_json(400, doc)
                except MdbsError as exc:
                    self._send_json(400, {"error": exc.to_json()})
            elif path.startswith("/v1/views/") and path.endswith("/run"):
                name = path[len("/v1/views/") : -len("/run")]
                response = app.run_view(name)
                self._send_json(400 if "error" in response else 200, response)
            else:
                self._send_json(404, {"error": {"kind": "NOT_FOUND", "message": path}})
        except NotFound as exc:
            self._send_json(404, {"error": exc.to_json()})
        except MdbsError as exc:
            self._send_json(500, {"error": exc.to_json()})
