/** One annotator's working state: the fetched batch, a cursor over it,
 * the current label selection, and the pending submission queue.
 */

import { ApiClient } from "./api.js";
import { labelForKey } from "./keyboard.js";
import { isValidSelection, toggleLabel } from "./labels.js";
import { PendingQueue } from "./queue.js";
import type { BatchItem, ProgressInfo } from "./types.js";

export class UiSession {
  readonly queue = new PendingQueue();
  private batch: BatchItem[] = [];
  private cursor = 0;
  private selection = new Set<number>();

  constructor(
    readonly annotator: string,
    private readonly client: ApiClient,
  ) {}

  async loadBatch(n = 10): Promise<number> {
    this.batch = await this.client.getBatch(this.annotator, n);
    this.cursor = 0;
    this.selection = new Set();
    return this.batch.length;
  }

  /** The post under the cursor, or null when the batch is used up. */
  current(): BatchItem | null {
    return this.cursor < this.batch.length ? this.batch[this.cursor]! : null;
  }

  selected(): number[] {
    return [...this.selection].sort((a, b) => a - b);
  }

  toggle(id: number): void {
    this.selection = toggleLabel(this.selection, id);
  }

  /** Route a keypress; returns true when it toggled a label. */
  pressKey(key: string): boolean {
    const id = labelForKey(key);
    if (id === null || this.current() === null) {
      return false;
    }
    this.toggle(id);
    return true;
  }

  /** Submitting an empty selection is never allowed. */
  canSubmit(): boolean {
    return (
      this.current() !== null &&
      this.selection.size > 0 &&
      isValidSelection(this.selection)
    );
  }

  /**
   * Queue the current answer and advance. The answer is flushed
   * opportunistically; when the service is unreachable it stays queued
   * and a later flush(), or the next submit, will deliver it.
   */
  async submitCurrent(): Promise<boolean> {
    const item = this.current();
    if (item === null || !this.canSubmit()) {
      return false;
    }
    this.queue.enqueue({
      annotator: this.annotator,
      post_id: item.post_id,
      labels: this.selected(),
      round: item.round,
    });
    this.cursor += 1;
    this.selection = new Set();
    await this.queue.flush(this.client);
    return true;
  }

  /** Move past the current post without answering it. */
  skip(): void {
    if (this.cursor < this.batch.length) {
      this.cursor += 1;
      this.selection = new Set();
    }
  }

  async flushPending(): Promise<number> {
    const result = await this.queue.flush(this.client);
    return result.remaining;
  }

  progress(): Promise<ProgressInfo> {
    return this.client.getProgress(this.annotator);
  }
}
