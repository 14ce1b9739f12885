// Shapes of the server's /v1/* JSON documents.

export type Value = number | string | boolean | null;

export interface PerSiteStatus {
  site: string;
  outcome: "OK" | "DENIED" | "TIMEOUT" | "ADAPTER_ERROR";
  rows_or_affected: number;
  elapsed_ms: number;
  message: string;
}

export interface ApiError {
  kind: string;
  message: string;
  locus?: string;
}

export interface SubQueryPanel {
  site: string;
  purpose: string;
  local_text: string;
}

export interface ExplainDoc {
  statement: string;
  catalog_version: number;
  subqueries: SubQueryPanel[];
  composition?: CompositionNode;
}

export interface CompositionNode {
  op: string;
  [key: string]: unknown;
}

export interface QueryResponse {
  columns?: string[];
  rows?: Value[][];
  partial?: boolean;
  per_site?: PerSiteStatus[];
  elapsed_ms?: number;
  catalog_version?: number;
  explain?: ExplainDoc;
  error?: ApiError;
}

export interface AttributeDoc {
  name: string;
  type: string;
  nullable: boolean;
}

export interface FragmentDoc {
  site: string;
  local_class: string;
}

export interface ClassDoc {
  name: string;
  attributes: AttributeDoc[];
  mapping?: {
    kind: string;
    stale: boolean;
    join_key: string | null;
    fragments: FragmentDoc[];
  };
}

export interface SchemaDoc {
  catalog_version: number;
  classes: ClassDoc[];
}

export interface SiteDoc {
  id: string;
  mode: string;
  adapter: string;
  health: string;
  endpoint?: string;
}

export interface SitesDoc {
  catalog_version: number;
  sites: SiteDoc[];
}

export interface HistoryEntry {
  text: string;
  timestamp: number;
  outcome: string; // "ok" | "partial" | error kind
}
