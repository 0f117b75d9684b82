/**
 * HTML-string rendering with escape-by-default interpolation.
 *
 * The view receives only the blinded TaskView, so producer identities cannot
 * appear here; annotated Czech/Slovak text is escaped and rendered verbatim.
 */

import { State } from "./controller.js";
import { Strings } from "./i18n.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function claimList(claims: string[]): string {
  if (claims.length === 0) {
    return `<p class="empty">&mdash;</p>`;
  }
  const items = claims.map((c) => `<li>${escapeHtml(c)}</li>`).join("");
  return `<ol>${items}</ol>`;
}

function progressLine(state: State, t: Strings): string {
  const { done, total } = state.progress;
  return `<p class="progress">${escapeHtml(t.progress(done, total))}</p>`;
}

function renderTask(state: State, t: Strings): string {
  const task = state.task!;
  const disabled = state.phase === "submitting" ? " disabled" : "";
  const notice = state.notice === "duplicate"
    ? `<p class="notice">${escapeHtml(t.duplicateSkipped)}</p>`
    : "";
  return `
${notice}
<section class="comment">
  <h2>${escapeHtml(t.comment)}</h2>
  <blockquote>${escapeHtml(task.comment)}</blockquote>
</section>
<section class="reference">
  <h2>${escapeHtml(t.reference)}</h2>
  ${claimList(task.reference)}
</section>
<div class="options">
  <section class="option">
    <h2>${escapeHtml(t.optionA)}</h2>
    ${claimList(task.optionA)}
  </section>
  <section class="option">
    <h2>${escapeHtml(t.optionB)}</h2>
    ${claimList(task.optionB)}
  </section>
</div>
<div class="votes">
  <button data-action="vote" data-choice="left"${disabled}>${escapeHtml(t.voteA)}</button>
  <button data-action="vote" data-choice="both"${disabled}>${escapeHtml(t.voteBoth)}</button>
  <button data-action="vote" data-choice="right"${disabled}>${escapeHtml(t.voteB)}</button>
</div>
${progressLine(state, t)}`;
}

function renderDone(state: State, t: Strings): string {
  // completion screen: no tally link for annotators
  return `
<section class="done">
  <h2>${escapeHtml(t.done)}</h2>
  <p>${escapeHtml(t.doneDetail)}</p>
</section>
${progressLine(state, t)}`;
}

function renderError(state: State, t: Strings): string {
  return `
<section class="error">
  <h2>${escapeHtml(t.errorTitle)}</h2>
  <p>${escapeHtml(state.error ?? "")}</p>
  <button data-action="retry">${escapeHtml(t.retry)}</button>
</section>`;
}

export function renderApp(state: State, t: Strings): string {
  const body =
    state.phase === "done" ? renderDone(state, t)
    : state.phase === "error" ? renderError(state, t)
    : state.phase === "loading" ? `<p class="loading">${escapeHtml(t.loading)}</p>`
    : renderTask(state, t);
  return `<h1>${escapeHtml(t.title)}</h1>\n${body}`;
}
