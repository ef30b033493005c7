/** Local queue of unsent verdicts, replayed after a reconnect.
 *
 * Entries are keyed by pair_key + annotator so a superseding decision made
 * while offline replaces the stale one instead of duplicating it; replay then
 * posts each surviving entry exactly once.
 */

import type { VerdictSubmission } from './types';

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStorage implements StorageLike {
  private data = new Map<string, string>();
  getItem(key: string): string | null {
    return this.data.has(key) ? this.data.get(key)! : null;
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }
  removeItem(key: string): void {
    this.data.delete(key);
  }
}

const entryKey = (v: VerdictSubmission) => `${v.pair_key}::${v.annotator_id}`;

export class OfflineQueue {
  constructor(
    private readonly storage: StorageLike,
    private readonly storageKey = 'speclineage.pending',
  ) {}

  pending(): VerdictSubmission[] {
    const raw = this.storage.getItem(this.storageKey);
    if (!raw) return [];
    try {
      return JSON.parse(raw) as VerdictSubmission[];
    } catch {
      return [];
    }
  }

  get size(): number {
    return this.pending().length;
  }

  enqueue(v: VerdictSubmission): void {
    const entries = this.pending();
    const idx = entries.findIndex((e) => entryKey(e) === entryKey(v));
    if (idx >= 0) {
      entries[idx] = v;
    } else {
      entries.push(v);
    }
    this.storage.setItem(this.storageKey, JSON.stringify(entries));
  }

  /** Post pending entries in order; stops at the first failure. Returns the
   * number of entries successfully delivered. */
  async replay(post: (v: VerdictSubmission) => Promise<unknown>): Promise<number> {
    let delivered = 0;
    let entries = this.pending();
    while (entries.length > 0) {
      try {
        await post(entries[0]);
      } catch {
        break;
      }
      delivered += 1;
      entries = entries.slice(1);
      if (entries.length === 0) {
        this.storage.removeItem(this.storageKey);
      } else {
        this.storage.setItem(this.storageKey, JSON.stringify(entries));
      }
    }
    return delivered;
  }
}
