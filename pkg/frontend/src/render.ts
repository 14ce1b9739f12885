// DOM builders for the three main panels: schema tree, result grid and
// explain view. All functions return detached elements; main.ts mounts
// them.

import type {
  ClassDoc,
  CompositionNode,
  ExplainDoc,
  PerSiteStatus,
  QueryResponse,
  SchemaDoc,
  SiteDoc,
  Value,
} from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function cell(value: Value): string {
  if (value === null) return "NULL";
  if (value === true) return "true";
  if (value === false) return "false";
  return String(value);
}

// -- schema tree -------------------------------------------------------------

export function renderSchemaTree(schema: SchemaDoc, sites: SiteDoc[]): HTMLElement {
  const bySite = new Map(sites.map((s) => [s.id, s]));
  const root = el("div", "schema-tree");
  const heading = el("div", "tree-heading", `catalog v${schema.catalog_version}`);
  root.appendChild(heading);
  for (const cls of schema.classes) {
    root.appendChild(renderClassNode(cls, bySite));
  }
  return root;
}

function renderClassNode(cls: ClassDoc, bySite: Map<string, SiteDoc>): HTMLElement {
  const details = el("details", "class-node");
  const summary = el("summary");
  summary.appendChild(el("span", "class-name", cls.name));
  if (cls.mapping) {
    summary.appendChild(el("span", "mapping-kind", cls.mapping.kind));
    if (cls.mapping.stale) {
      summary.appendChild(el("span", "stale-flag", "STALE"));
    }
  }
  details.appendChild(summary);

  const attrs = el("ul", "attr-list");
  for (const attr of cls.attributes) {
    attrs.appendChild(
      el("li", "attr", `${attr.name} ${attr.type}${attr.nullable ? "" : " NOT NULL"}`),
    );
  }
  details.appendChild(attrs);

  if (cls.mapping) {
    const frags = el("ul", "fragment-list");
    for (const frag of cls.mapping.fragments) {
      const site = bySite.get(frag.site);
      const label = site
        ? `${frag.site} (${site.adapter}, ${site.health}) . ${frag.local_class}`
        : `${frag.site} . ${frag.local_class}`;
      frags.appendChild(el("li", "fragment", label));
    }
    details.appendChild(frags);
  }
  return details;
}

// -- result grid ---------------------------------------------------------------

export function renderResult(response: QueryResponse): HTMLElement {
  const root = el("div", "result");
  if (response.partial) {
    root.appendChild(el("span", "badge badge-partial", "PARTIAL"));
  }
  if (response.columns && response.columns.length) {
    const table = el("table", "grid");
    const head = el("tr");
    for (const name of response.columns) head.appendChild(el("th", undefined, name));
    table.appendChild(head);
    for (const row of response.rows ?? []) {
      const tr = el("tr");
      for (const value of row) {
        const td = el("td", value === null ? "null-cell" : undefined, cell(value));
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    root.appendChild(table);
  }
  const note = `${(response.rows ?? []).length} rows, catalog v${response.catalog_version ?? "?"}`;
  root.appendChild(el("div", "result-note", note));
  if (response.per_site) {
    root.appendChild(renderStatusChips(response.per_site));
  }
  return root;
}

export function renderStatusChips(statuses: PerSiteStatus[]): HTMLElement {
  const bar = el("div", "status-bar");
  for (const status of statuses) {
    const chip = el(
      "span",
      `chip chip-${status.outcome.toLowerCase()}`,
      `${status.site}: ${status.outcome} (${status.rows_or_affected})`,
    );
    chip.title = status.message || `${status.elapsed_ms}ms`;
    bar.appendChild(chip);
  }
  return bar;
}

// -- explain view ----------------------------------------------------------------

export function renderExplain(doc: ExplainDoc): HTMLElement {
  const root = el("div", "explain");
  root.appendChild(el("div", "explain-statement", doc.statement));
  const panels = el("div", "subquery-panels");
  for (const sq of doc.subqueries) {
    const panel = el("div", "subquery-panel");
    panel.appendChild(el("div", "panel-site", `${sq.site} [${sq.purpose}]`));
    panel.appendChild(el("pre", "local-text", sq.local_text));
    panels.appendChild(panel);
  }
  root.appendChild(panels);
  if (doc.composition) {
    const pre = el("pre", "composition-tree", compositionText(doc.composition, 0));
    root.appendChild(pre);
  }
  return root;
}

export function compositionText(node: CompositionNode, depth: number): string {
  const pad = "  ".repeat(depth);
  let label = node.op;
  if (node.op === "SUBQUERY") label += ` ${node.site}`;
  if (node.op === "JOIN_ON") label += ` ${node.key}`;
  if (node.op === "FILTER") label += ` ${node.predicate}`;
  if (node.op === "SORT") label += ` ${node.attr} ${node.direction}`;
  if (node.op === "LIMIT") label += ` ${node.n}`;
  if (node.op === "PROJECT") label += ` ${(node.attrs as string[]).join(", ")}`;
  const lines = [pad + label];
  if (node.input) {
    lines.push(compositionText(node.input as CompositionNode, depth + 1));
  }
  for (const child of (node.inputs as CompositionNode[] | undefined) ?? []) {
    lines.push(compositionText(child, depth + 1));
  }
  return lines.join("\n");
}

// -- error display ------------------------------------------------------------------

export function renderError(
  error: { kind: string; message: string; locus?: string },
  statementText: string,
): HTMLElement {
  const root = el("div", "error-box");
  root.appendChild(el("div", "error-kind", `${error.kind}: ${error.message}`));
  const offset = errorOffset(error);
  if (offset !== null && (error.kind === "LEX_ERROR" || error.kind === "SYNTAX_ERROR")) {
    const pre = el("pre", "error-locus");
    pre.textContent = statementText + "\n" + " ".repeat(offset) + "^";
    root.appendChild(pre);
  }
  return root;
}

export function errorOffset(error: { locus?: string }): number | null {
  const match = /offset (\d+)/.exec(error.locus ?? "");
  return match ? parseInt(match[1], 10) : null;
}
