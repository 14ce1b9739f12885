// Query history, append-only within a session, persisted in browser
// storage keyed by server URL so a reload restores it.

import type { HistoryEntry } from "./types.js";

const CAP = 200;
export const RESTORE_AT_LEAST = 50;

export class HistoryStore {
  private entries: HistoryEntry[] = [];

  constructor(
    private serverUrl: string,
    private storage: Storage = window.localStorage,
  ) {
    this.entries = this.load();
  }

  private key(): string {
    return `mdbs-console/history/${this.serverUrl}`;
  }

  private load(): HistoryEntry[] {
    try {
      const raw = this.storage.getItem(this.key());
      if (!raw) return [];
      const parsed = JSON.parse(raw);
      return Array.isArray(parsed) ? (parsed as HistoryEntry[]) : [];
    } catch {
      return [];
    }
  }

  private save(): void {
    try {
      this.storage.setItem(this.key(), JSON.stringify(this.entries.slice(-CAP)));
    } catch {
      // storage full or unavailable: history becomes session-only
    }
  }

  append(text: string, outcome: string): HistoryEntry {
    const entry: HistoryEntry = { text, timestamp: Date.now(), outcome };
    this.entries.push(entry);
    this.save();
    return entry;
  }

  all(): readonly HistoryEntry[] {
    return this.entries;
  }

  get length(): number {
    return this.entries.length;
  }
}
