// Wiring: model dropdown, question form, result area, transcript drawer.

import { askQuestion, fetchModels, fetchTranscript, ApiError } from "./api.js";
import {
  AskViewState,
  canSubmit,
  initialState,
  modelChanged,
  requestFailed,
  responseReceived,
  submitStarted,
} from "./state.js";
import { renderView } from "./render.js";

export async function setupConsole(document: Document): Promise<void> {
  const form = document.getElementById("ask-form") as HTMLFormElement;
  const input = document.getElementById("question-input") as HTMLInputElement;
  const modelSelect = document.getElementById("model-select") as HTMLSelectElement;
  const submitButton = document.getElementById("submit-button") as HTMLButtonElement;
  const resultRoot = document.getElementById("result-root") as HTMLElement;
  const drawer = document.getElementById("transcript-drawer") as HTMLElement;

  const models = await fetchModels();
  modelSelect.replaceChildren();
  for (const name of models.models) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    if (name === models.default) option.selected = true;
    modelSelect.appendChild(option);
  }

  let state: AskViewState = initialState(models.default);

  const update = (next: AskViewState): void => {
    state = next;
    submitButton.disabled = state.phase === "submitting";
    renderView(resultRoot, state);
    if (state.phase !== "submitting") {
      attachRetry();
      attachTranscriptLink();
    }
  };

  const submit = async (): Promise<void> => {
    const question = input.value;
    if (!canSubmit(state, question)) return;
    update(submitStarted(state, question, modelSelect.value));
    try {
      const response = await askQuestion(question, state.model);
      update(responseReceived(state, response));
    } catch (err) {
      const message = err instanceof ApiError ? err.message : "network failure";
      update(requestFailed(state, message));
    }
  };

  const attachRetry = (): void => {
    const retry = resultRoot.querySelector("button.retry");
    retry?.addEventListener("click", () => void submit());
  };

  const attachTranscriptLink = (): void => {
    if (!state.response) return;
    const link = document.createElement("button");
    link.type = "button";
    link.className = "transcript-link";
    link.textContent = "Show transcript";
    link.addEventListener("click", async () => {
      try {
        const transcript = await fetchTranscript(state.response!.transcript_id);
        drawer.textContent = JSON.stringify(transcript, null, 2);
        drawer.classList.add("open");
      } catch {
        drawer.textContent = "transcript unavailable";
        drawer.classList.add("open");
      }
    });
    resultRoot.appendChild(link);
  };

  modelSelect.addEventListener("change", () => {
    state = modelChanged(state, modelSelect.value);
  });
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit();
  });
  update(state);
}

if (typeof window !== "undefined" && document.getElementById("ask-form")) {
  void setupConsole(document);
}
