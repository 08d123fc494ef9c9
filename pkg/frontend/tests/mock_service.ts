/** In-memory stand-in for the annotation service, exposing a fetch-like
 * function with switchable network failure. Mirrors the real endpoints'
 * shapes, including 409 on re-submission.
 */

import type { FetchLike } from "../src/api.js";
import type { BatchItem, GuidelineEntry, Submission } from "../src/types.js";

export const GUIDELINE_FIXTURE: GuidelineEntry[] = Array.from(
  { length: 13 },
  (_, i) => {
    const label = i + 1;
    const named: Record<number, [string, string]> = {
      1: ["Anhedonia", "Reduced interest in the surroundings or activities."],
      9: [
        "Psychomotor retardation or lassitude",
        "Difficulty getting started or slowness initiating and performing everyday activities.",
      ],
      12: ["NoED", "No evidence of depression."],
      13: ["Gibberish", "Unintelligible short post."],
    };
    const [title, lead] = named[label] ?? [`Label ${label}`, `About label ${label}.`];
    return {
      label,
      title,
      lead,
      elaboration: [`point one for ${label}`],
      examples: [`example post for ${label}`],
    };
  },
);

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export class MockService {
  offline = false;
  /** number of upcoming requests that fail at the network level */
  failNext = 0;
  /** artificial per-request delay, for interleaving tests */
  delayMs = 0;
  batch: BatchItem[] = [];
  readonly received: Submission[] = [];
  private readonly answered = new Set<string>();

  /** Pretend a submission already reached the service earlier. */
  markAnswered(annotator: string, postId: string, round: number): void {
    this.answered.add(`${annotator}/${postId}/${round}`);
  }

  readonly fetchFn: FetchLike = async (input, init) => {
    if (this.delayMs > 0) {
      await new Promise((resolve) => setTimeout(resolve, this.delayMs));
    }
    if (this.offline) {
      throw new TypeError("fetch failed");
    }
    if (this.failNext > 0) {
      this.failNext -= 1;
      throw new TypeError("fetch failed");
    }

    if (input.includes("/api/annotations") && init?.method === "POST") {
      const sub = JSON.parse(String(init.body)) as Submission;
      const key = `${sub.annotator}/${sub.post_id}/${sub.round}`;
      if (this.answered.has(key)) {
        return json(
          { code: "already-answered", message: "duplicate", detail: key },
          409,
        );
      }
      if (sub.labels.some((lab) => lab === 12 || lab === 13) && sub.labels.length > 1) {
        return json(
          { code: "noed-singleton", message: "singleton label", detail: sub.labels },
          400,
        );
      }
      this.answered.add(key);
      this.received.push(sub);
      return json({ status: "accepted", post_id: sub.post_id, round: sub.round });
    }
    if (input.includes("/api/batch")) {
      return json({ items: this.batch });
    }
    if (input.includes("/api/progress")) {
      return json({
        annotator_id: "a1",
        assigned: this.batch.length,
        answered: this.received.length,
        remaining: this.batch.length - this.received.length,
      });
    }
    if (input.includes("/api/guideline")) {
      return json({ entries: GUIDELINE_FIXTURE });
    }
    if (input.includes("/api/labels")) {
      return json({
        labels: GUIDELINE_FIXTURE.map((e) => ({ id: e.label, name: e.title })),
      });
    }
    return json({ code: "not-found", message: "no such endpoint" }, 404);
  };
}
