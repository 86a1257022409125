import { describe, expect, it } from "vitest";

import type { AskResponse } from "../src/api.js";
import { renderResultTable, renderSqlPreview, renderStages, renderView } from "../src/render.js";
import { initialState, requestFailed, responseReceived, submitStarted } from "../src/state.js";

function askResponse(overrides: Partial<AskResponse> = {}): AskResponse {
  return {
    verdict: "sql",
    sql: "SELECT symbol FROM gene",
    columns: ["symbol"],
    rows: [["TP53"], ["EGFR"]],
    truncated: false,
    short_answer: "Two genes match.",
    explanation: null,
    stages: [
      { name: "prompt-built", status: "ok", detail: "nar@0shot" },
      { name: "llm-called", status: "ok", detail: "call 1" },
      { name: "executed", status: "ok", detail: "2 rows" },
      { name: "verdict", status: "ok", detail: "sql" },
    ],
    transcript_id: "abc123",
    ...overrides,
  };
}

describe("renderResultTable", () => {
  it("renders a one-by-one table", () => {
    const node = renderResultTable(["x"], [[1]], false);
    expect(node.querySelectorAll("th")).toHaveLength(1);
    expect(node.querySelectorAll("tbody td")).toHaveLength(1);
    expect(node.querySelector("tbody td")?.textContent).toBe("1");
  });

  it("shows a truncation notice", () => {
    const node = renderResultTable(["x"], [[1], [2]], true);
    expect(node.querySelector(".truncation-notice")?.textContent).toBe("showing first 2 rows");
  });

  it("shows a placeholder for empty results", () => {
    const node = renderResultTable(["x"], [], false);
    expect(node.querySelector(".placeholder")?.textContent).toBe("no results");
    expect(node.querySelector("table")).toBeNull();
  });

  it("marks null cells", () => {
    const node = renderResultTable(["x"], [[null]], false);
    expect(node.querySelector(".null-cell")?.textContent).toBe("NULL");
  });
});

describe("renderSqlPreview", () => {
  it("renders the SQL byte-identically", () => {
    const sql = "SELECT  a,\n\tb FROM t  WHERE x = 'y;`' -- strange   spacing";
    expect(renderSqlPreview(sql).querySelector("code")?.textContent).toBe(sql);
  });
});

describe("renderStages", () => {
  it("lists every stage with name and detail", () => {
    const node = renderStages(askResponse().stages);
    const items = node.querySelectorAll("li");
    expect(items).toHaveLength(4);
    expect(items[0].querySelector(".stage-name")?.textContent).toBe("prompt-built");
    expect(items[1].querySelector(".stage-detail")?.textContent).toBe("call 1");
  });
});

describe("renderView", () => {
  function mount(): HTMLElement {
    const root = document.createElement("div");
    document.body.appendChild(root);
    return root;
  }

  it("renders sql verdict with preview, table, short answer, and stages", () => {
    const root = mount();
    const response = askResponse();
    const state = responseReceived(submitStarted(initialState("m"), "q", "m"), response);
    renderView(root, state);
    expect(root.querySelector(".sql-preview code")?.textContent).toBe(response.sql);
    expect(root.querySelectorAll("tbody tr")).toHaveLength(2);
    expect(root.querySelector(".short-answer")?.textContent).toBe("Two genes match.");
    expect(root.querySelectorAll(".stages li")).toHaveLength(4);
  });

  it("renders abstention with the explanation and suggestions", () => {
    const root = mount();
    const response = askResponse({
      verdict: "abstained",
      sql: null,
      columns: null,
      rows: null,
      short_answer: null,
      explanation: "The schema stores no trial phases; ask about mutations or expression instead.",
    });
    const state = responseReceived(submitStarted(initialState("m"), "q", "m"), response);
    renderView(root, state);
    expect(root.querySelector(".abstention")).not.toBeNull();
    expect(root.querySelector(".explanation")?.textContent).toBe(response.explanation);
    expect(root.querySelector(".sql-preview")).toBeNull();
  });

  it("renders an error banner with retry on request failure", () => {
    const root = mount();
    const state = requestFailed(submitStarted(initialState("m"), "q", "m"), "Bad Gateway");
    renderView(root, state);
    expect(root.querySelector(".error-banner p")?.textContent).toBe("Bad Gateway");
    expect(root.querySelector("button.retry")).not.toBeNull();
  });

  it("keeps db_failed stage detail visible under the banner", () => {
    const root = mount();
    const response = askResponse({
      verdict: "db_failed",
      columns: null,
      rows: null,
      short_answer: null,
      stages: [
        { name: "executed", status: "error", detail: "no such table: nope" },
        { name: "verdict", status: "ok", detail: "db_failed" },
      ],
    });
    const state = responseReceived(submitStarted(initialState("m"), "q", "m"), response);
    renderView(root, state);
    expect(root.querySelector(".error-banner")).not.toBeNull();
    expect(root.textContent).toContain("no such table: nope");
    // the SQL the server reported is still shown verbatim
    expect(root.querySelector(".sql-preview code")?.textContent).toBe(response.sql);
  });
});
