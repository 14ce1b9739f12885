"""The site agent: one HTTP process wrapping one local store.

Every request is authenticated against the agent's principal table and
then filtered by the firewall policy before it may reach the adapter.
A DROP decision holds the connection open without writing a byte, so
the caller can only observe its own timeout.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from mdbs.catalog.model import LocalSchemaDescriptor
from mdbs.errors import ConfigError, MdbsError
from mdbs.sites.adapters import Adapter, build_adapter
from mdbs.sites.firewall import (
    DENY,
    DROP,
    UNKNOWN_PRINCIPAL,
    FirewallPolicy,
    firewall_decide,
    policy_from_json,
    server_only_policy,
)
from mdbs.sites.wire import (
    local_schema_from_json,
    local_schema_to_json,
    subquery_from_json,
    subwrite_from_json,
)


@dataclass
class AgentConfig:
    site_id: str
    adapter_kind: str
    local_schema: LocalSchemaDescriptor
    principals: dict[str, str]
    policy: FirewallPolicy
    host: str = "127.0.0.1"
    port: int = 0
    drop_hold_s: float = 30.0


def agent_config_from_json(doc: dict) -> AgentConfig:
    try:
        schema_doc = dict(doc["local_schema"])
        schema_doc.setdefault("site", doc["site"])
        schema_doc.setdefault("storage", doc.get("storage"))
        if schema_doc["storage"] is None:
            raise KeyError("storage")
        listen = doc.get("listen", "127.0.0.1:0")
        host, _, port = listen.partition(":")
        policy = (
            policy_from_json(doc["policy"]) if "policy" in doc else server_only_policy()
        )
        return AgentConfig(
            site_id=doc["site"],
            adapter_kind=doc["adapter"],
            local_schema=local_schema_from_json(schema_doc),
            principals=dict(doc.get("principals", {})),
            policy=policy,
            host=host or "127.0.0.1",
            port=int(port or 0),
            drop_hold_s=float(doc.get("drop_hold_ms", 30000)) / 1000.0,
        )
    except KeyError as exc:
        raise ConfigError(f"agent config missing {exc.args[0]!r}") from None


def load_agent_config(path: str) -> AgentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return agent_config_from_json(json.load(fh))


_OP_BY_PATH = {
    "/agent/v1/subquery": "READ",
    "/agent/v1/write": "WRITE",
    "/agent/v1/schema": "SCHEMA",
}


class _AgentHandler(BaseHTTPRequestHandler):
    agent: "SiteAgent"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send(self, code: int, body: dict) -> None:
        payload = json.dumps(body).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _gate(self, op: str) -> bool:
        """Authenticate + firewall. Returns True when the request may
        proceed; on DROP the connection is held and never answered."""
        principal = self.headers.get("X-MDBS-Principal", "")
        token = self.headers.get("X-MDBS-Token", "")
        if self.agent.config.principals.get(principal) != token:
            principal = UNKNOWN_PRINCIPAL
        action = firewall_decide(self.agent.config.policy, principal, op)
        if action == DENY:
            self._send(
                403,
                {
                    "status": "denied",
                    "error": {"kind": "DENIED", "message": f"{op} denied by site policy"},
                },
            )
            return False
        if action == DROP:
            time.sleep(self.agent.config.drop_hold_s)
            self.close_connection = True
            return False
        return True

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b"{}"
        return json.loads(raw.decode("utf-8"))

    def do_GET(self):
        if self.path != "/agent/v1/schema":
            self._send(404, {"status": "error", "error": {"kind": "NOT_FOUND", "message": self.path}})
            return
        if not self._gate("SCHEMA"):
            return
        self._send(
            200,
            {"status": "ok", "schema": local_schema_to_json(self.agent.adapter.local_schema())},
        )

    def do_POST(self):
        op = _OP_BY_PATH.get(self.path)
        if op is None:
            self._send(404, {"status": "error", "error": {"kind": "NOT_FOUND", "message": self.path}})
            return
        if not self._gate(op):
            return
        try:
            body = self._read_body()
            if op == "READ":
                sq = subquery_from_json(body["subquery"])
                rows, skipped = self.agent.adapter.run_subquery(sq)
                self._send(200, {"status": "ok", "rows": rows, "skipped_casts": skipped})
            else:
                sw = subwrite_from_json(body["subwrite"])
                with self.agent.write_lock:
                    affected = self.agent.adapter.apply_write(sw)
                self._send(200, {"status": "ok", "affected": affected})
        except MdbsError as exc:
            self._send(500, {"status": "error", "error": exc.to_json()})
        except Exception as exc:  # noqa: BLE001 - agent must keep serving
            self._send(
                500,
                {"status": "error", "error": {"kind": "ADAPTER_ERROR", "message": str(exc)}},
            )


class SiteAgent:
    def __init__(self, config: AgentConfig, adapter: Optional[Adapter] = None):
        self.config = config
        self.adapter = adapter or build_adapter(config.adapter_kind, config.local_schema)
        self.write_lock = threading.Lock()
        handler = type("Handler", (_AgentHandler,), {"agent": self})
        self._server = ThreadingHTTPServer((config.host, config.port), handler)
        self._server.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def endpoint(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    def start(self) -> "SiteAgent":
        self._thread = threading.Thread(
            target=self._server.serve_forever, name=f"agent-{self.config.site_id}", daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        self._server.serve_forever()
