/** Thin fetch client for the survey backend. */

import { assertBlinded, sanitizeDeck } from "./blinding.js";
import type { DeckMeta, ExportedResponse, SessionState, Source } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class SurveyApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return response.json();
  }

  async fetchDeck(): Promise<DeckMeta> {
    return sanitizeDeck(await this.request("/api/deck"));
  }

  async startSession(raterId: string): Promise<SessionState> {
    const state = await this.request("/api/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ rater_id: raterId }),
    });
    assertBlinded(state, "session start");
    return state as SessionState;
  }

  async fetchSession(sessionId: string): Promise<SessionState> {
    const state = await this.request(`/api/sessions/${encodeURIComponent(sessionId)}`);
    assertBlinded(state, "session state");
    return state as SessionState;
  }

  async submitJudgment(sessionId: string, itemId: string, judged: Source): Promise<SessionState> {
    const state = await this.request(`/api/sessions/${encodeURIComponent(sessionId)}/responses`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ item_id: itemId, judged_source: judged }),
    });
    assertBlinded(state, "judgment reply");
    return state as SessionState;
  }

  /** Allowed only for completed sessions; the export carries true labels. */
  async fetchExport(sessionId: string): Promise<ExportedResponse[]> {
    return (await this.request(
      `/api/sessions/${encodeURIComponent(sessionId)}/export`,
    )) as ExportedResponse[];
  }

  imageUrl(itemId: string): string {
    return `${this.baseUrl}/api/items/${encodeURIComponent(itemId)}/image`;
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/api/sessions/${encodeURIComponent(sessionId)}/export`;
  }
}
