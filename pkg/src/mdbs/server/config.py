"""Server configuration."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from mdbs.errors import ConfigError
from mdbs.execute import ExecOptions


@dataclass
class ServerConfig:
    catalog_path: str
    host: str = "127.0.0.1"
    port: int = 8080
    exec_defaults: ExecOptions = field(default_factory=ExecOptions)
    console_assets: Optional[str] = None
    # per-site descriptor overrides: {site_id: {endpoint?, token?, mode?, policy?}}
    site_overrides: dict = field(default_factory=dict)


def server_config_from_json(doc: dict, base_dir: str = ".") -> ServerConfig:
    try:
        catalog_path = doc["catalog"]
    except KeyError:
        raise ConfigError("server config missing 'catalog'") from None
    if not os.path.isabs(catalog_path):
        catalog_path = os.path.join(base_dir, catalog_path)
    listen = doc.get("listen", "127.0.0.1:8080")
    host, _, port = listen.partition(":")
    exec_doc = doc.get("exec", {})
    exec_defaults = ExecOptions(
        timeout_ms=int(exec_doc.get("timeout_ms", 2000)),
        failure_mode=exec_doc.get("failure_mode", "FAIL_FAST"),
        max_parallel=int(exec_doc.get("max_parallel", 8)),
    )
    console = doc.get("console_assets")
    if console and not os.path.isabs(console):
        console = os.path.join(base_dir, console)
    return ServerConfig(
        catalog_path=catalog_path,
        host=host or "127.0.0.1",
        port=int(port or 8080),
        exec_defaults=exec_defaults,
        console_assets=console,
        site_overrides=dict(doc.get("site_overrides", {})),
    )


def load_server_config(path: str) -> ServerConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read server config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"server config is not valid JSON: {exc.msg}") from None
    return server_config_from_json(doc, base_dir=os.path.dirname(os.path.abspath(path)))
