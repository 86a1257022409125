// View-state machine for the ask console. One question is in flight at a
// time; every transition is a pure function from (state, event) to state so
// the UI layer just re-renders whatever the state says.

import type { AskResponse } from "./api.js";

export type Phase =
  | "idle"
  | "submitting"
  | "showing_result"
  | "showing_abstention"
  | "showing_error";

export interface AskViewState {
  phase: Phase;
  question: string;
  model: string;
  response: AskResponse | null;
  error: string | null;
}

export function initialState(model: string): AskViewState {
  return { phase: "idle", question: "", model, response: null, error: null };
}

export function canSubmit(state: AskViewState, text: string): boolean {
  return state.phase !== "submitting" && text.trim().length > 0;
}

export function submitStarted(state: AskViewState, question: string, model: string): AskViewState {
  return { ...state, phase: "submitting", question, model, response: null, error: null };
}

export function responseReceived(state: AskViewState, response: AskResponse): AskViewState {
  const phase: Phase =
    response.verdict === "abstained"
      ? "showing_abstention"
      : response.verdict === "sql"
        ? "showing_result"
        : "showing_error";
  const error =
    response.verdict === "unusable"
      ? "The model produced no usable SQL for this question."
      : response.verdict === "db_failed"
        ? "The generated SQL failed to execute."
        : null;
  return { ...state, phase, response, error };
}

export function requestFailed(state: AskViewState, message: string): AskViewState {
  return { ...state, phase: "showing_error", response: null, error: message };
}

export function modelChanged(state: AskViewState, model: string): AskViewState {
  return { ...state, model };
}
