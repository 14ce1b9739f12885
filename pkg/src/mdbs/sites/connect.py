"""Uniform connection interface the executor dispatches through.

EMBEDDED sites run the adapter in-process but still pass the firewall;
REMOTE sites speak the agent wire protocol.  Either way the failure
surface is identical: denied, timeout, or adapter error.
"""
from __future__ import annotations

import time
from abc import ABC, abstractmethod
from typing import Optional

import requests

from mdbs.catalog.model import SiteDescriptor
from mdbs.plan import SubQuery, SubWrite
from mdbs.sites.adapters import Adapter
from mdbs.sites.firewall import (
    DENY,
    FORWARD,
    UNKNOWN_PRINCIPAL,
    FirewallPolicy,
    firewall_decide,
)
from mdbs.sites.wire import subquery_to_json, subwrite_to_json

MDBS_PRINCIPAL = "mdbs-server"


class AgentDenied(Exception):
    pass


class AgentTimeout(Exception):
    pass


class AgentUnavailable(Exception):
    pass


class AgentError(Exception):
    pass


class SiteConnection(ABC):
    site_id: str

    @abstractmethod
    def run_subquery(self, sq: SubQuery, timeout_s: float) -> tuple[list, int]:
        """Rows plus skipped-cast count."""

    @abstractmethod
    def apply_write(self, sw: SubWrite, timeout_s: float) -> int:
        """Affected row count."""

    @abstractmethod
    def fetch_schema(self, timeout_s: float) -> dict:
        """The site's local dictionary, as wire JSON."""


class EmbeddedConnection(SiteConnection):
    def __init__(
        self,
        site: SiteDescriptor,
        adapter: Adapter,
        policy: FirewallPolicy,
        principal: str = MDBS_PRINCIPAL,
        token: Optional[str] = None,
    ):
        self.site_id = site.site_id
        self.adapter = adapter
        self.policy = policy
        self.principal = principal
        self.token = site.principal_token if token is None else token
        self._expected_token = site.principal_token

    def _decide(self, op: str, timeout_s: float) -> None:
        principal = self.principal
        if self.token != self._expected_token:
            principal = UNKNOWN_PRINCIPAL
        action = firewall_decide(self.policy, principal, op)
        if action == FORWARD:
            return
        if action == DENY:
            raise AgentDenied(f"site {self.site_id} denied {op}")
        # DROP swallows the request: nothing comes back until the caller
        # gives up waiting
        time.sleep(timeout_s)
        raise AgentTimeout(f"site {self.site_id} did not answer within {timeout_s}s")

    def run_subquery(self, sq: SubQuery, timeout_s: float) -> tuple[list, int]:
        self._decide("READ", timeout_s)
        return self.adapter.run_subquery(sq)

    def apply_write(self, sw: SubWrite, timeout_s: float) -> int:
        self._decide("WRITE", timeout_s)
        return self.adapter.apply_write(sw)

    def fetch_schema(self, timeout_s: float) -> dict:
        self._decide("SCHEMA", timeout_s)
        from mdbs.sites.wire import local_schema_to_json

        return local_schema_to_json(self.adapter.local_schema())


class RemoteConnection(SiteConnection):
    def __init__(
        self,
        site: SiteDescriptor,
        principal: str = MDBS_PRINCIPAL,
        token: Optional[str] = None,
    ):
        if not site.endpoint:
            raise AgentUnavailable(f"site {site.site_id} has no endpoint")
        self.site_id = site.site_id
        self.endpoint = site.endpoint.rstrip("/")
        self.principal = principal
        self.token = site.principal_token if token is None else token

    def _headers(self) -> dict:
        return {"X-MDBS-Principal": self.principal, "X-MDBS-Token": self.token}

    def _request(self, method: str, path: str, payload, timeout_s: float) -> dict:
        url = self.endpoint + path
        try:
            if method == "GET":
                resp = requests.get(url, headers=self._headers(), timeout=timeout_s)
            else:
                resp = requests.post(
                    url, json=payload, headers=self._headers(), timeout=timeout_s
                )
        except requests.Timeout:
            raise AgentTimeout(
                f"site {self.site_id} did not answer within {timeout_s}s"
            ) from None
        except requests.ConnectionError as exc:
            raise AgentUnavailable(f"site {self.site_id}: {exc}") from None
        try:
            body = resp.json()
        except ValueError:
            raise AgentError(f"site {self.site_id}: non-JSON response") from None
        if resp.status_code == 403 or body.get("status") == "denied":
            raise AgentDenied(f"site {self.site_id} denied the request")
        if resp.status_code != 200 or body.get("status") != "ok":
            message = (body.get("error") or {}).get("message", f"HTTP {resp.status_code}")
            raise AgentError(f"site {self.site_id}: {message}")
        return body

    def run_subquery(self, sq: SubQuery, timeout_s: float) -> tuple[list, int]:
        body = self._request(
            "POST", "/agent/v1/subquery", {"subquery": subquery_to_json(sq)}, timeout_s
        )
        return body.get("rows", []), body.get("skipped_casts", 0)

    def apply_write(self, sw: SubWrite, timeout_s: float) -> int:
        body = self._request(
            "POST", "/agent/v1/write", {"subwrite": subwrite_to_json(sw)}, timeout_s
        )
        return body.get("affected", 0)

    def fetch_schema(self, timeout_s: float) -> dict:
        body = self._request("GET", "/agent/v1/schema", None, timeout_s)
        return body.get("schema", {})
