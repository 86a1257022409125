// DOM builders. Every SQL string, cell value, short answer, and explanation
// is set via textContent straight from the API payload, so the rendered text
// is byte-identical to what the server sent.

import type { AskResponse, Stage } from "./api.js";
import type { AskViewState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderResultTable(
  columns: string[],
  rows: unknown[][],
  truncated: boolean,
): HTMLElement {
  const wrapper = el("div", "result-table");
  if (rows.length === 0) {
    wrapper.appendChild(el("p", "placeholder", "no results"));
    return wrapper;
  }
  const table = el("table");
  const head = el("thead");
  const headRow = el("tr");
  for (const name of columns) {
    headRow.appendChild(el("th", undefined, name));
  }
  head.appendChild(headRow);
  table.appendChild(head);
  const body = el("tbody");
  for (const row of rows) {
    const tr = el("tr");
    for (const cell of row) {
      tr.appendChild(el("td", cell === null ? "null-cell" : undefined,
        cell === null ? "NULL" : String(cell)));
    }
    body.appendChild(tr);
  }
  table.appendChild(body);
  wrapper.appendChild(table);
  if (truncated) {
    wrapper.appendChild(el("p", "truncation-notice", `showing first ${rows.length} rows`));
  }
  return wrapper;
}

export function renderStages(stages: Stage[]): HTMLElement {
  const list = el("ol", "stages");
  for (const stage of stages) {
    const item = el("li", `stage stage-${stage.status}`);
    item.appendChild(el("span", "stage-name", stage.name));
    item.appendChild(el("span", "stage-detail", stage.detail));
    list.appendChild(item);
  }
  return list;
}

export function renderSqlPreview(sql: string): HTMLElement {
  const block = el("pre", "sql-preview");
  const code = el("code", undefined, sql);
  block.appendChild(code);
  return block;
}

function renderResponseBody(response: AskResponse): HTMLElement {
  const container = el("div", "response");
  if (response.sql !== null) {
    container.appendChild(renderSqlPreview(response.sql));
  }
  if (response.verdict === "sql" && response.columns && response.rows) {
    container.appendChild(
      renderResultTable(response.columns, response.rows, response.truncated === true),
    );
    if (response.short_answer) {
      container.appendChild(el("p", "short-answer", response.short_answer));
    }
  }
  if (response.verdict === "abstained") {
    const panel = el("div", "abstention");
    panel.appendChild(el("h3", undefined, "This question cannot be answered here"));
    panel.appendChild(el("p", "explanation", response.explanation ?? ""));
    container.appendChild(panel);
  }
  container.appendChild(renderStages(response.stages));
  return container;
}

export function renderView(root: HTMLElement, state: AskViewState): void {
  root.replaceChildren();
  switch (state.phase) {
    case "idle":
      root.appendChild(el("p", "placeholder", "Ask a question about the database."));
      return;
    case "submitting":
      root.appendChild(el("p", "progress", "Translating and executing..."));
      return;
    case "showing_error": {
      const banner = el("div", "error-banner");
      banner.appendChild(el("p", undefined, state.error ?? "Something went wrong."));
      const retry = el("button", "retry", "Retry");
      retry.type = "button";
      banner.appendChild(retry);
      root.appendChild(banner);
      if (state.response) {
        root.appendChild(renderResponseBody(state.response));
      }
      return;
    }
    case "showing_result":
    case "showing_abstention":
      if (state.response) {
        root.appendChild(renderResponseBody(state.response));
      }
      return;
  }
}
