// Typed client for the askdb HTTP API. All server interaction goes through
// these functions; the UI renders API payloads verbatim and never invents
// SQL or result data.

export interface Stage {
  name: string;
  status: string;
  detail: string;
}

export interface AskResponse {
  verdict: "sql" | "abstained" | "unusable" | "db_failed";
  sql: string | null;
  columns: string[] | null;
  rows: unknown[][] | null;
  truncated: boolean | null;
  short_answer: string | null;
  explanation: string | null;
  stages: Stage[];
  transcript_id: string;
}

export interface ModelsResponse {
  models: string[];
  default: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number | null = null,
  ) {
    super(message);
  }
}

export const FALLBACK_MODEL = "llama3.3:70b";

async function errorFromResponse(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && body.detail) {
      detail = typeof body.detail === "string" ? body.detail : (body.detail.error ?? detail);
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(detail, response.status);
}

export async function askQuestion(question: string, model: string): Promise<AskResponse> {
  let response: Response;
  try {
    response = await fetch("/api/ask", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ question, model }),
    });
  } catch (err) {
    throw new ApiError(err instanceof Error ? err.message : "network failure");
  }
  if (!response.ok) {
    throw await errorFromResponse(response);
  }
  return (await response.json()) as AskResponse;
}

export async function fetchModels(): Promise<ModelsResponse> {
  try {
    const response = await fetch("/api/models");
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return (await response.json()) as ModelsResponse;
  } catch {
    // degraded mode: the console still works with the default model
    return { models: [FALLBACK_MODEL], default: FALLBACK_MODEL };
  }
}

export async function fetchTranscript(transcriptId: string): Promise<unknown> {
  const response = await fetch(`/api/transcripts/${transcriptId}`);
  if (!response.ok) {
    throw await errorFromResponse(response);
  }
  return response.json();
}
