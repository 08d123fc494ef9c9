/** Offline-tolerant FIFO queue of pending submissions.
 *
 * An item leaves the queue only once the service has acknowledged it —
 * either by accepting it or by answering 409 already-answered, which
 * means an earlier flush of the same item got through. Network failures
 * stop the flush and keep the remaining items in order, so retrying is
 * always safe and every answer is delivered exactly once.
 */

import { ApiClient, ServiceError } from "./api.js";
import type { Submission } from "./types.js";

export interface FlushResult {
  /** newly accepted by the service */
  delivered: number;
  /** acknowledged as already answered (counts as success) */
  duplicates: number;
  /** definitively rejected (4xx other than 409); dropped from the queue */
  rejected: number;
  /** still pending, e.g. after a network failure */
  remaining: number;
}

export class PendingQueue {
  private items: Submission[] = [];
  private flushing = false;

  get length(): number {
    return this.items.length;
  }

  /** Pending items in flush order (read-only view). */
  snapshot(): readonly Submission[] {
    return [...this.items];
  }

  enqueue(submission: Submission): void {
    this.items.push(submission);
  }

  /**
   * Try to deliver everything, head first. Never throws: a network
   * failure simply leaves the rest queued. Concurrent calls are
   * serialized — a flush that finds another in flight does nothing.
   */
  async flush(client: ApiClient): Promise<FlushResult> {
    const result: FlushResult = {
      delivered: 0,
      duplicates: 0,
      rejected: 0,
      remaining: this.items.length,
    };
    if (this.flushing) {
      return result;
    }
    this.flushing = true;
    try {
      while (this.items.length > 0) {
        const head = this.items[0]!;
        try {
          await client.submit(head);
          result.delivered += 1;
        } catch (err) {
          if (err instanceof ServiceError && err.status === 409) {
            result.duplicates += 1; // someone already delivered it: done
          } else if (err instanceof ServiceError && err.status < 500) {
            result.rejected += 1; // the service will never take this one
          } else {
            break; // offline or server trouble: keep it queued
          }
        }
        this.items.shift();
      }
    } finally {
      this.flushing = false;
    }
    result.remaining = this.items.length;
    return result;
  }
}
