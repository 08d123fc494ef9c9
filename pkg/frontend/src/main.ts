/** Page wiring: reads the annotator token, drives a UiSession, and
 * re-renders after every interaction. Everything testable lives in the
 * imported modules; this file only touches the DOM.
 */

import { ApiClient } from "./api.js";
import { UiSession } from "./session.js";
import type { GuidelineEntry } from "./types.js";
import {
  renderDone,
  renderGuideline,
  renderPost,
  renderProgress,
  renderQueueBadge,
} from "./view.js";

const FLUSH_INTERVAL_MS = 5_000;

function param(name: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? "";
}

async function boot(): Promise<void> {
  const app = document.getElementById("app");
  const status = document.getElementById("status");
  if (!app || !status) {
    return;
  }
  const annotator = param("annotator");
  if (!annotator) {
    app.innerHTML = `<p>Add <code>?annotator=YOUR_ID</code> to the URL to begin.</p>`;
    return;
  }

  const client = new ApiClient(param("base") || "");
  const session = new UiSession(annotator, client);
  let guideline: GuidelineEntry[] = [];
  try {
    guideline = await client.getGuideline();
  } catch {
    status.textContent = "service unreachable — retrying on submit";
  }
  await session.loadBatch(10).catch(() => 0);

  const rerender = async (): Promise<void> => {
    const item = session.current();
    app.innerHTML = item
      ? renderPost(item, new Set(session.selected()), guideline)
      : renderDone();
    let progressHtml = "";
    try {
      progressHtml = renderProgress(await session.progress());
    } catch {
      // keep the last status text when offline
    }
    status.innerHTML = progressHtml + renderQueueBadge(session.queue.length);
    app.querySelectorAll<HTMLButtonElement>(".label-toggle").forEach((btn) => {
      btn.addEventListener("click", () => {
        session.toggle(Number(btn.dataset.label));
        void rerender();
      });
    });
    app.querySelector("#submit")?.addEventListener("click", () => {
      void session.submitCurrent().then(rerender);
    });
    app.querySelector("#skip")?.addEventListener("click", () => {
      session.skip();
      void rerender();
    });
  };

  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) {
      return;
    }
    if (event.key === "Enter") {
      void session.submitCurrent().then(rerender);
    } else if (event.key === "s") {
      session.skip();
      void rerender();
    } else if (session.pressKey(event.key)) {
      void rerender();
    }
  });

  window.setInterval(() => {
    void session.flushPending().then((remaining) => {
      const badge = document.querySelector(".queue-badge");
      if (badge && remaining === 0) {
        void rerender();
      }
    });
  }, FLUSH_INTERVAL_MS);

  const aside = document.getElementById("guideline");
  if (aside) {
    aside.innerHTML = renderGuideline(guideline);
  }
  await rerender();
}

void boot();
