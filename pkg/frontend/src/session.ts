/** Session flow: one-way rating over a fixed deck, resumable after refresh.
 *
 * The server is the source of truth for the cursor; the client persists only
 * the session id and re-derives its position on load, so a refresh lands on
 * the exact next unanswered item.
 */

import { ApiError, SurveyApi } from "./api.js";
import type { DeckItemView, DeckMeta, SessionState, Source } from "./types.js";

export type Phase = "login" | "rating" | "complete";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export const SESSION_STORAGE_KEY = "frost2ffpe.survey.session_id";

export class SessionFlow {
  private state: SessionState | null = null;
  private submitting = false;

  constructor(
    private readonly api: SurveyApi,
    readonly deck: DeckMeta,
    private readonly store: KeyValueStore,
    private readonly storageKey: string = SESSION_STORAGE_KEY,
  ) {}

  /** Fetches the deck and resumes a stored session when one exists. */
  static async initialize(api: SurveyApi, store: KeyValueStore): Promise<SessionFlow> {
    const flow = new SessionFlow(api, await api.fetchDeck(), store);
    await flow.resume();
    return flow;
  }

  get phase(): Phase {
    if (this.state === null) return "login";
    return this.state.complete ? "complete" : "rating";
  }

  get session(): SessionState | null {
    return this.state;
  }

  get busy(): boolean {
    return this.submitting;
  }

  progress(): { answered: number; total: number } {
    return {
      answered: this.state?.cursor ?? 0,
      total: this.deck.n_items,
    };
  }

  /** The item awaiting judgment, or null outside the rating phase. */
  currentItem(): DeckItemView | null {
    if (this.state === null || this.state.complete) return null;
    return this.deck.items[this.state.cursor] ?? null;
  }

  async start(raterId: string): Promise<SessionState> {
    const trimmed = raterId.trim();
    if (!trimmed) {
      throw new Error("rater id must be non-empty");
    }
    if (this.state !== null) {
      throw new Error("session already started");
    }
    this.state = await this.api.startSession(trimmed);
    this.store.setItem(this.storageKey, this.state.session_id);
    return this.state;
  }

  /** Reloads server state for a stored session id; false when none exists. */
  async resume(): Promise<boolean> {
    const stored = this.store.getItem(this.storageKey);
    if (!stored) return false;
    try {
      this.state = await this.api.fetchSession(stored);
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.store.removeItem(this.storageKey);
        return false;
      }
      throw error;
    }
  }

  /** Judge the current item. Rejects reentrant calls; never skips or revisits. */
  async submit(judged: Source): Promise<SessionState> {
    if (this.state === null) throw new Error("no active session");
    if (this.state.complete) throw new Error("session already complete");
    if (this.submitting) throw new Error("a submission is already in flight");
    const item = this.currentItem();
    if (item === null) throw new Error("no item at cursor");

    this.submitting = true;
    try {
      this.state = await this.api.submitJudgment(this.state.session_id, item.item_id, judged);
      return this.state;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // another tab advanced the session; re-sync instead of diverging
        this.state = await this.api.fetchSession(this.state.session_id);
      }
      throw error;
    } finally {
      this.submitting = false;
    }
  }

  /** Forgets the stored session id (e.g. to start a new rater). */
  clearStored(): void {
    this.store.removeItem(this.storageKey);
  }
}
