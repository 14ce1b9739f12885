"""Operator command line: server, site agents, catalog tools and a REPL.

Exit codes: 0 ok, 1 query error, 2 config or validation error,
3 server unreachable.
"""
from __future__ import annotations

import json
import sys

import click
import requests

from mdbs.catalog.io import load_catalog, serialize_catalog
from mdbs.catalog.model import Catalog
from mdbs.catalog.validate import validate_catalog
from mdbs.errors import MdbsError

EXIT_QUERY = 1
EXIT_CONFIG = 2
EXIT_CONNECT = 3


@click.group()
def main():
    """Federated multidatabase engine."""


# -- rendering ---------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_grid(columns: list[str], rows: list[list]) -> str:
    if not columns:
        return "(no columns)"
    cells = [[_cell(v) for v in row] for row in rows]
    widths = [
        max(len(columns[i]), *(len(r[i]) for r in cells)) if cells else len(columns[i])
        for i in range(len(columns))
    ]
    header = " | ".join(name.ljust(widths[i]) for i, name in enumerate(columns))
    rule = "-+-".join("-" * w for w in widths)
    body = [
        " | ".join(r[i].ljust(widths[i]) for i in range(len(columns))) for r in cells
    ]
    return "\n".join([header, rule] + body)


def print_response(response: dict) -> None:
    if "explain" in response:
        click.echo(json.dumps(response["explain"], indent=2))
        return
    if "error" in response:
        err = response["error"]
        locus = f" at {err['locus']}" if "locus" in err else ""
        click.echo(f"error {err['kind']}{locus}: {err['message']}", err=True)
    elif "columns" in response:
        if response["columns"]:
            click.echo(render_grid(response["columns"], response["rows"]))
        note = f"({len(response.get('rows', []))} rows)"
        if response.get("partial"):
            note += " PARTIAL"
        note += f" catalog_version={response.get('catalog_version')}"
        click.echo(note)
    for status in response.get("per_site", []):
        line = (
            f"site {status['site']}: {status['outcome']}"
            f" rows_or_affected={status['rows_or_affected']}"
            f" elapsed={status['elapsed_ms']}ms"
        )
        if status.get("message"):
            line += f" ({status['message']})"
        click.echo(line)


def _post_query(server: str, payload: dict) -> dict:
    try:
        resp = requests.post(f"{server.rstrip('/')}/v1/query", json=payload, timeout=30)
    except requests.RequestException as exc:
        click.echo(f"cannot reach server: {exc}", err=True)
        sys.exit(EXIT_CONNECT)
    try:
        return resp.json()
    except ValueError:
        click.echo(f"server returned non-JSON (HTTP {resp.status_code})", err=True)
        sys.exit(EXIT_CONNECT)


# -- server / agent ------------------------------------------------------------

@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def serve(config_path: str):
    """Run the multidatabase server."""
    from mdbs.errors import InvalidCatalog
    from mdbs.server import MdbsServer, load_server_config

    try:
        config = load_server_config(config_path)
        server = MdbsServer(config)
    except InvalidCatalog as exc:
        click.echo(f"catalog rejected: {exc.message}", err=True)
        if exc.report is not None:
            click.echo(exc.report.summary(), err=True)
        sys.exit(EXIT_CONFIG)
    except MdbsError as exc:
        click.echo(f"cannot start: {exc.message}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"cannot bind: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"mdbs server on {server.url} (catalog v{server.state().snapshot.version})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()


@main.command("site-agent")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def site_agent(config_path: str):
    """Run one site agent."""
    from mdbs.sites.agent import SiteAgent, load_agent_config

    try:
        agent = SiteAgent(load_agent_config(config_path))
    except MdbsError as exc:
        click.echo(f"cannot start agent: {exc.message}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"cannot bind: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"site agent {agent.config.site_id} on {agent.endpoint}")
    try:
        agent.serve_forever()
    except KeyboardInterrupt:
        agent.stop()


# -- client commands -------------------------------------------------------------

@main.command()
@click.option("--server", required=True)
@click.option("--failure-mode", type=click.Choice(["FAIL_FAST", "PARTIAL"]), default=None)
@click.option("--timeout-ms", type=int, default=None)
@click.argument("text")
def query(server: str, failure_mode, timeout_ms, text: str):
    """Execute one statement against the server."""
    payload = {"text": text, "mode": "EXECUTE"}
    if failure_mode:
        payload["failure_mode"] = failure_mode
    if timeout_ms:
        payload["timeout_ms"] = timeout_ms
    response = _post_query(server, payload)
    print_response(response)
    sys.exit(EXIT_QUERY if "error" in response else 0)


@main.command()
@click.option("--server", required=True)
@click.argument("text")
def explain(server: str, text: str):
    """Show the decomposition plan for one statement."""
    response = _post_query(server, {"text": text, "mode": "EXPLAIN"})
    print_response(response)
    sys.exit(EXIT_QUERY if "error" in response else 0)


@main.command()
@click.option("--server", required=True)
def repl(server: str):
    """Interactive session; statements end with ';'."""
    explain_mode = False
    click.echo(r"mdbs repl: \schema \sites \explain on|off \quit")
    buffer: list[str] = []
    while True:
        try:
            prompt = "mdbs> " if not buffer else "  ... "
            line = input(prompt)
        except (EOFError, KeyboardInterrupt):
            click.echo("")
            return
        stripped = line.strip()
        if not buffer and stripped.startswith("\\"):
            if stripped == "\\quit":
                return
            if stripped == "\\schema":
                _repl_schema(server)
            elif stripped == "\\sites":
                _repl_sites(server)
            elif stripped.startswith("\\explain"):
                explain_mode = stripped.endswith("on")
                click.echo(f"explain {'on' if explain_mode else 'off'}")
            else:
                click.echo(f"unknown command {stripped}", err=True)
            continue
        buffer.append(line)
        if not stripped.endswith(";"):
            continue
        text = " ".join(buffer).strip().rstrip(";").strip()
        buffer = []
        if not text:
            continue
        try:
            if explain_mode:
                print_response(_post_query(server, {"text": text, "mode": "EXPLAIN"}))
            print_response(_post_query(server, {"text": text, "mode": "EXECUTE"}))
        except SystemExit as exc:
            if exc.code == EXIT_CONNECT:
                click.echo("(server unreachable, session continues)", err=True)
            else:
                raise


def _repl_schema(server: str) -> None:
    try:
        doc = requests.get(f"{server.rstrip('/')}/v1/schema", timeout=10).json()
    except requests.RequestException as exc:
        click.echo(f"cannot reach server: {exc}", err=True)
        return
    for cls in doc.get("classes", []):
        attrs = ", ".join(f"{a['name']} {a['type']}" for a in cls["attributes"])
        mapping = cls.get("mapping", {})
        stale = " STALE" if mapping.get("stale") else ""
        click.echo(f"{cls['name']}({attrs}) {mapping.get('kind', '?')}{stale}")


def _repl_sites(server: str) -> None:
    try:
        doc = requests.get(f"{server.rstrip('/')}/v1/sites", timeout=10).json()
    except requests.RequestException as exc:
        click.echo(f"cannot reach server: {exc}", err=True)
        return
    for site in doc.get("sites", []):
        click.echo(
            f"{site['id']}: {site['adapter']} {site['mode']} health={site['health']}"
        )


# -- catalog tools ------------------------------------------------------------------

@main.group()
def catalog():
    """Catalog tools."""


@catalog.command("validate")
@click.argument("path", type=click.Path(exists=True))
def catalog_validate(path: str):
    """Parse and validate a catalog document."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cat = load_catalog(fh.read())
    except MdbsError as exc:
        click.echo(f"parse failed: {exc.message}" + (f" ({exc.locus})" if exc.locus else ""), err=True)
        sys.exit(EXIT_CONFIG)
    report = validate_catalog(cat)
    click.echo(report.summary())
    sys.exit(0 if report.ok else EXIT_CONFIG)


@catalog.command("integrate")
@click.argument("decls", type=click.Path(exists=True))
@click.option("--out", "-o", type=click.Path(), default=None)
def catalog_integrate(decls: str, out):
    """Run the schema pipeline over a declarations file and emit a catalog."""
    try:
        with open(decls, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"cannot read declarations: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        text = run_integration(doc)
    except MdbsError as exc:
        click.echo(f"integration failed [{exc.kind}]: {exc.message}", err=True)
        sys.exit(EXIT_CONFIG)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


def run_integration(doc: dict) -> str:
    """Transform + investigate + integrate + validate; returns the catalog
    document text."""
    from mdbs import pipeline as pl
    from mdbs.catalog.model import StorageDescriptor
    from mdbs.errors import ConflictingInput
    from mdbs.types import CanonicalType

    decl = doc.get("pipeline", doc)
    sites_doc = doc.get("sites", decl.get("sites", []))

    canonical_schemas = []
    for raw in decl.get("native_schemas", []):
        native = pl.NativeLocalSchema(
            site_id=raw["site"],
            classes=tuple(
                pl.NativeClass(
                    name=c["name"],
                    attributes=tuple(
                        pl.NativeAttribute(
                            a["name"], a["type"], bool(a.get("nullable", True))
                        )
                        for a in c["attributes"]
                    ),
                )
                for c in raw["classes"]
            ),
            storage=StorageDescriptor(
                format=raw["storage"]["format"], location=raw["storage"]["location"]
            ),
        )
        rules_doc = decl.get("type_rules", {}).get(raw["site"], {})
        rules = pl.TransformationRuleSet(
            bindings={
                k.upper(): CanonicalType(v)
                for k, v in rules_doc.get("bindings", {}).items()
            },
            overrides={
                k: CanonicalType(v) for k, v in rules_doc.get("overrides", {}).items()
            },
        )
        canonical_schemas.append(pl.transform_local_schema(native, rules))

    entries = tuple(
        pl.CorrEntry(
            left=pl.EndpointRef.parse(c["left"]),
            right=pl.EndpointRef.parse(c["right"]),
            role=c.get("role", pl.SAME_ENTITY_HORIZONTAL),
        )
        for c in decl.get("correspondences", [])
    )
    report = pl.investigate(canonical_schemas, pl.CorrespondenceDecl(entries))
    if report.conflicts:
        lines = "; ".join(f"{c.kind} at {c.locus}" for c in report.conflicts)
        raise ConflictingInput(f"correspondence conflicts: {lines}")

    intents = [
        pl.ClassIntent(
            name=c["name"],
            kind=c["kind"],
            join_key=c.get("join_key"),
            attributes=tuple(
                pl.AttrIntent(
                    global_name=a["global"],
                    sources=tuple(pl.EndpointRef.parse(s) for s in a["sources"]),
                    nullable=bool(a.get("nullable", True)),
                )
                for a in c["attributes"]
            ),
            routes=tuple(
                pl.FragmentRoute(r["site"], r["local_class"], r["route_when"])
                for r in c.get("routes", [])
            ),
        )
        for c in decl.get("classes", [])
    ]
    result = pl.integrate(report, canonical_schemas, intents)
    for warning in result.warnings:
        click.echo(f"warning {warning.kind} at {warning.locus}: {warning.message}", err=True)

    assembled = {
        "version_hint": 0,
        "classes": [
            {
                "name": c.name,
                "attributes": [
                    {"name": a.name, "type": a.type.value, "nullable": a.nullable}
                    for a in c.attributes
                ],
            }
            for c in result.classes
        ],
        "mappings": json.loads(
            serialize_catalog(
                Catalog(version=0, mappings=result.mappings)
            )
        )["mappings"],
        "sites": sites_doc,
        "local_schemas": [
            json.loads(serialize_catalog(Catalog(version=0, local_schemas=(ls,))))[
                "local_schemas"
            ][0]
            for ls in canonical_schemas
        ],
        "views": decl.get("views", []),
    }
    text = json.dumps(assembled, indent=2) + "\n"
    cat = load_catalog(text)
    vreport = validate_catalog(cat)
    if not vreport.ok:
        from mdbs.errors import InvalidCatalog

        raise InvalidCatalog("assembled catalog failed validation:\n" + vreport.summary())
    return serialize_catalog(cat)


if __name__ == "__main__":
    main()
