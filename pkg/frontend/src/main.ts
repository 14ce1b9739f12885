// Console wiring: one editor, one in-flight query at a time, schema tree
// on the left, results or explain panels on the right, history below.

import { ApiClient } from "./api.js";
import { HistoryStore } from "./history.js";
import {
  errorOffset,
  renderError,
  renderExplain,
  renderResult,
  renderSchemaTree,
  renderStatusChips,
} from "./render.js";
import type { SchemaDoc, SiteDoc } from "./types.js";

interface ConsoleState {
  api: ApiClient;
  history: HistoryStore;
  busy: boolean;
  lastSchema: SchemaDoc | null;
  lastSites: SiteDoc[];
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setBanner(text: string | null): void {
  const banner = byId<HTMLDivElement>("banner");
  banner.textContent = text ?? "";
  banner.style.display = text ? "block" : "none";
}

async function refreshSchema(state: ConsoleState): Promise<void> {
  try {
    const [schema, sites] = await Promise.all([state.api.schema(), state.api.sites()]);
    state.lastSchema = schema;
    state.lastSites = sites.sites;
    setBanner(null);
  } catch {
    // keep the tree from the last successful fetch
    setBanner(`cannot reach ${state.api.baseUrl}`);
  }
  const mount = byId<HTMLDivElement>("schema");
  mount.replaceChildren();
  if (state.lastSchema) {
    mount.appendChild(renderSchemaTree(state.lastSchema, state.lastSites));
  }
}

function renderHistory(state: ConsoleState): void {
  const mount = byId<HTMLUListElement>("history");
  mount.replaceChildren();
  const entries = state.history.all();
  for (let i = entries.length - 1; i >= 0; i--) {
    const entry = entries[i];
    const item = document.createElement("li");
    item.className = `history-entry outcome-${entry.outcome === "ok" ? "ok" : "bad"}`;
    const when = new Date(entry.timestamp).toLocaleTimeString();
    item.textContent = `[${when}] ${entry.text}`;
    item.title = entry.outcome;
    item.addEventListener("click", () => {
      byId<HTMLTextAreaElement>("editor").value = entry.text;
    });
    mount.appendChild(item);
  }
}

async function runStatement(state: ConsoleState, mode: "EXECUTE" | "EXPLAIN"): Promise<void> {
  if (state.busy) return;
  const editor = byId<HTMLTextAreaElement>("editor");
  const text = editor.value.trim();
  if (!text) return;
  state.busy = true;
  const output = byId<HTMLDivElement>("output");
  try {
    const failureMode = byId<HTMLSelectElement>("failure-mode").value;
    const response = await state.api.query(text, mode, failureMode);
    output.replaceChildren();
    let outcome = "ok";
    if (response.error) {
      outcome = response.error.kind;
      output.appendChild(renderError(response.error, text));
      const offset = errorOffset(response.error);
      if (offset !== null) {
        editor.focus();
        editor.setSelectionRange(offset, offset + 1);
      }
      if (response.per_site) {
        output.appendChild(renderStatusChips(response.per_site));
      }
    } else if (response.explain) {
      output.appendChild(renderExplain(response.explain));
    } else {
      if (response.partial) outcome = "partial";
      output.appendChild(renderResult(response));
    }
    state.history.append(text, outcome);
    renderHistory(state);
    setBanner(null);
  } catch {
    setBanner(`cannot reach ${state.api.baseUrl}`);
  } finally {
    state.busy = false;
  }
}

export function boot(): void {
  const serverInput = byId<HTMLInputElement>("server-url");
  if (!serverInput.value) {
    serverInput.value = window.location.origin;
  }
  let state: ConsoleState = makeState(serverInput.value);

  function makeState(url: string): ConsoleState {
    return {
      api: new ApiClient(url),
      history: new HistoryStore(url),
      busy: false,
      lastSchema: null,
      lastSites: [],
    };
  }

  serverInput.addEventListener("change", () => {
    state = makeState(serverInput.value);
    renderHistory(state);
    void refreshSchema(state);
  });
  byId<HTMLButtonElement>("run").addEventListener("click", () => {
    void runStatement(state, "EXECUTE");
  });
  byId<HTMLButtonElement>("explain").addEventListener("click", () => {
    void runStatement(state, "EXPLAIN");
  });
  byId<HTMLButtonElement>("refresh").addEventListener("click", () => {
    void refreshSchema(state);
  });
  byId<HTMLTextAreaElement>("editor").addEventListener("keydown", (event) => {
    if ((event.ctrlKey || event.metaKey) && event.key === "Enter") {
      event.preventDefault();
      void runStatement(state, "EXECUTE");
    }
  });

  renderHistory(state);
  void refreshSchema(state);
}

if (typeof document !== "undefined" && document.getElementById("editor")) {
  boot();
}
