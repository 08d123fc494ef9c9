/** HTML renderers. Pure string builders so they are trivially testable;
 * the page wiring in main.ts injects the strings and attaches events.
 */

import { ED, GIBBERISH, NOED, SYMPTOM_IDS } from "./labels.js";
import type { BatchItem, GuidelineEntry, ProgressInfo } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function entryFor(
  guideline: readonly GuidelineEntry[],
  id: number,
): GuidelineEntry | undefined {
  return guideline.find((e) => e.label === id);
}

function toggleButton(
  id: number,
  selection: ReadonlySet<number>,
  guideline: readonly GuidelineEntry[],
): string {
  const entry = entryFor(guideline, id);
  const name = entry ? entry.title : `label ${id}`;
  const tip = entry ? `${entry.title}: ${entry.lead}` : "";
  const on = selection.has(id) ? " selected" : "";
  return (
    `<button type="button" class="label-toggle${on}" data-label="${id}"` +
    ` aria-pressed="${selection.has(id)}" title="${escapeHtml(tip)}">` +
    `${id <= 10 ? `<kbd>${id % 10}</kbd> ` : ""}${escapeHtml(name)}</button>`
  );
}

/** One post with its round badge and the grouped 13-label picker. */
export function renderPost(
  item: BatchItem,
  selection: ReadonlySet<number>,
  guideline: readonly GuidelineEntry[],
): string {
  const symptoms = SYMPTOM_IDS.map((id) =>
    toggleButton(id, selection, guideline),
  ).join("");
  const others = [ED, NOED, GIBBERISH]
    .map((id) => toggleButton(id, selection, guideline))
    .join("");
  const disabled = selection.size === 0 ? " disabled" : "";
  return `
<article class="post" data-post-id="${escapeHtml(item.post_id)}">
  <header>
    <span class="round-badge">round ${item.round}</span>
  </header>
  <p class="post-text">${escapeHtml(item.text)}</p>
  <div class="labels symptoms" role="group" aria-label="symptoms">${symptoms}</div>
  <div class="labels others" role="group" aria-label="other">${others}</div>
  <footer>
    <button type="button" id="submit"${disabled}>Submit</button>
    <button type="button" id="skip">Skip</button>
  </footer>
</article>`;
}

/** The full annotation guideline, straight from the service. */
export function renderGuideline(entries: readonly GuidelineEntry[]): string {
  const sections = entries
    .map((entry) => {
      const points = entry.elaboration
        .map((line) => `<li>${escapeHtml(line)}</li>`)
        .join("");
      const examples = entry.examples
        .map((line) => `<li class="example">${escapeHtml(line)}</li>`)
        .join("");
      return `
<section class="guideline-entry" data-label="${entry.label}">
  <h3>${entry.label}. ${escapeHtml(entry.title)}</h3>
  <p>${escapeHtml(entry.lead)}</p>
  <ul>${points}</ul>
  <ul class="examples">${examples}</ul>
</section>`;
    })
    .join("\n");
  return `<div class="guideline">${sections}</div>`;
}

export function renderProgress(info: ProgressInfo): string {
  return (
    `<span class="progress">${info.answered} / ${info.assigned} answered, ` +
    `${info.remaining} to go</span>`
  );
}

/** Badge showing how many answers wait for the service to come back. */
export function renderQueueBadge(pending: number): string {
  if (pending === 0) {
    return "";
  }
  return `<span class="queue-badge" role="status">${pending} queued offline</span>`;
}

export function renderDone(): string {
  return `<p class="done">Batch finished — load more posts or take a break.</p>`;
}
