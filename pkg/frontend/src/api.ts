// Thin client over the documented /v1/* endpoints. The console talks to
// nothing else; tests assert that through the fetch spy.

import type { QueryResponse, SchemaDoc, SitesDoc } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/+$/, "") + path;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.url(path));
    return (await resp.json()) as T;
  }

  async query(
    text: string,
    mode: "EXECUTE" | "EXPLAIN",
    failureMode?: string,
  ): Promise<QueryResponse> {
    const body: Record<string, unknown> = { text, mode };
    if (failureMode) body.failure_mode = failureMode;
    const resp = await this.fetchFn(this.url("/v1/query"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await resp.json()) as QueryResponse;
  }

  schema(): Promise<SchemaDoc> {
    return this.get<SchemaDoc>("/v1/schema");
  }

  sites(): Promise<SitesDoc> {
    return this.get<SitesDoc>("/v1/sites");
  }

  views(): Promise<{ views: { name: string; query: string }[] }> {
    return this.get("/v1/views");
  }

  async runView(name: string): Promise<QueryResponse> {
    const resp = await this.fetchFn(this.url(`/v1/views/${name}/run`), {
      method: "POST",
    });
    return (await resp.json()) as QueryResponse;
  }

  health(): Promise<{ status: string; catalog_version: number }> {
    return this.get("/v1/health");
  }
}
