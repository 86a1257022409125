import { describe, expect, it } from "vitest";

import type { AskResponse } from "../src/api.js";
import {
  canSubmit,
  initialState,
  modelChanged,
  requestFailed,
  responseReceived,
  submitStarted,
} from "../src/state.js";

function response(verdict: AskResponse["verdict"]): AskResponse {
  return {
    verdict,
    sql: verdict === "abstained" ? null : "SELECT 1",
    columns: verdict === "sql" ? ["x"] : null,
    rows: verdict === "sql" ? [[1]] : null,
    truncated: false,
    short_answer: null,
    explanation: verdict === "abstained" ? "no such data" : null,
    stages: [],
    transcript_id: "t1",
  };
}

describe("ask view state machine", () => {
  it("starts idle with the default model", () => {
    const state = initialState("llama3.3:70b");
    expect(state.phase).toBe("idle");
    expect(state.model).toBe("llama3.3:70b");
  });

  it("blocks submit while submitting or on empty text", () => {
    const idle = initialState("m");
    expect(canSubmit(idle, "   ")).toBe(false);
    expect(canSubmit(idle, "how many?")).toBe(true);
    const busy = submitStarted(idle, "how many?", "m");
    expect(busy.phase).toBe("submitting");
    expect(canSubmit(busy, "another")).toBe(false);
  });

  it("maps verdicts onto phases", () => {
    const busy = submitStarted(initialState("m"), "q", "m");
    expect(responseReceived(busy, response("sql")).phase).toBe("showing_result");
    expect(responseReceived(busy, response("abstained")).phase).toBe("showing_abstention");
    expect(responseReceived(busy, response("unusable")).phase).toBe("showing_error");
    expect(responseReceived(busy, response("db_failed")).phase).toBe("showing_error");
  });

  it("keeps the failed response available for stage display", () => {
    const busy = submitStarted(initialState("m"), "q", "m");
    const failed = responseReceived(busy, response("db_failed"));
    expect(failed.response?.verdict).toBe("db_failed");
    expect(failed.error).toMatch(/failed to execute/);
  });

  it("records request failures with a message", () => {
    const busy = submitStarted(initialState("m"), "q", "m");
    const failed = requestFailed(busy, "boom");
    expect(failed.phase).toBe("showing_error");
    expect(failed.error).toBe("boom");
    expect(failed.response).toBeNull();
  });

  it("persists model selection across submissions", () => {
    let state = initialState("a");
    state = modelChanged(state, "b");
    state = submitStarted(state, "q", state.model);
    const done = responseReceived(state, response("sql"));
    expect(done.model).toBe("b");
  });
});
