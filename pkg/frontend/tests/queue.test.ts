import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { PendingQueue } from "../src/queue.js";
import type { Submission } from "../src/types.js";
import { MockService } from "./mock_service.js";

function submission(postId: string, labels: number[] = [1]): Submission {
  return { annotator: "a1", post_id: postId, labels, round: 1 };
}

function setup() {
  const service = new MockService();
  const client = new ApiClient("http://svc", service.fetchFn);
  const queue = new PendingQueue();
  return { service, client, queue };
}

describe("offline submission queue", () => {
  it("delivers a queued answer exactly once after reconnecting", async () => {
    const { service, client, queue } = setup();
    service.offline = true;
    queue.enqueue(submission("p1"));

    let result = await queue.flush(client);
    expect(result).toMatchObject({ delivered: 0, remaining: 1 });
    expect(service.received).toHaveLength(0);

    service.offline = false;
    result = await queue.flush(client);
    expect(result).toMatchObject({ delivered: 1, remaining: 0 });
    expect(queue.length).toBe(0);
    expect(service.received).toHaveLength(1);

    // nothing left to send; a later flush must not repeat the POST
    await queue.flush(client);
    expect(service.received).toHaveLength(1);
  });

  it("treats already-answered as success", async () => {
    const { service, client, queue } = setup();
    service.markAnswered("a1", "p1", 1);
    queue.enqueue(submission("p1"));
    const result = await queue.flush(client);
    expect(result).toMatchObject({ delivered: 0, duplicates: 1, remaining: 0 });
    expect(queue.length).toBe(0);
  });

  it("flushes queued items in FIFO order", async () => {
    const { service, client, queue } = setup();
    for (const id of ["p1", "p2", "p3"]) {
      queue.enqueue(submission(id));
    }
    const result = await queue.flush(client);
    expect(result.delivered).toBe(3);
    expect(service.received.map((s) => s.post_id)).toEqual(["p1", "p2", "p3"]);
  });

  it("keeps the tail queued when the network dies mid-flush", async () => {
    const { service, client, queue } = setup();
    for (const id of ["p1", "p2", "p3"]) {
      queue.enqueue(submission(id));
    }
    // first POST succeeds, then two network failures
    service.failNext = 0;
    const failingAfterFirst: typeof service.fetchFn = async (input, init) => {
      if (service.received.length >= 1 && init?.method === "POST") {
        throw new TypeError("fetch failed");
      }
      return service.fetchFn(input, init);
    };
    const flaky = new ApiClient("http://svc", failingAfterFirst);

    let result = await queue.flush(flaky);
    expect(result).toMatchObject({ delivered: 1, remaining: 2 });
    expect(queue.snapshot().map((s) => s.post_id)).toEqual(["p2", "p3"]);

    result = await queue.flush(client);
    expect(result).toMatchObject({ delivered: 2, remaining: 0 });
    const ids = service.received.map((s) => s.post_id);
    expect(ids).toEqual(["p1", "p2", "p3"]); // no re-send of p1
  });

  it("serializes concurrent flushes", async () => {
    const { service, client, queue } = setup();
    service.delayMs = 5;
    for (const id of ["p1", "p2"]) {
      queue.enqueue(submission(id));
    }
    const [first, second] = await Promise.all([
      queue.flush(client),
      queue.flush(client),
    ]);
    expect(first.delivered + second.delivered).toBe(2);
    expect(second.delivered === 0 || first.delivered === 0).toBe(true);
    expect(service.received.map((s) => s.post_id)).toEqual(["p1", "p2"]);
  });

  it("drops definitively rejected items instead of blocking the queue", async () => {
    const { service, client, queue } = setup();
    queue.enqueue({ annotator: "a1", post_id: "bad", labels: [12, 1], round: 1 });
    queue.enqueue(submission("p2"));
    const result = await queue.flush(client);
    expect(result).toMatchObject({ rejected: 1, delivered: 1, remaining: 0 });
    expect(service.received.map((s) => s.post_id)).toEqual(["p2"]);
  });
});
