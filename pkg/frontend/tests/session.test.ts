import { beforeEach, describe, expect, it } from "vitest";

import { ApiError, SurveyApi } from "../src/api.js";
import { SESSION_STORAGE_KEY, SessionFlow, type KeyValueStore } from "../src/session.js";
import type { DeckMeta, SessionState, Source } from "../src/types.js";

class MemoryStore implements KeyValueStore {
  private data = new Map<string, string>();
  getItem(key: string): string | null {
    return this.data.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }
  removeItem(key: string): void {
    this.data.delete(key);
  }
}

/** In-memory fake of the backend with the same ordering/duplicate rules. */
class FakeApi {
  deck: DeckMeta;
  sessions = new Map<string, { rater: string; answers: Array<{ item: string; judged: Source }> }>();
  private counter = 0;

  constructor(nItems = 4) {
    this.deck = {
      schema: "frost2ffpe-deck-v1",
      n_items: nItems,
      items: Array.from({ length: nItems }, (_, i) => ({ item_id: `item_${i}`, index: i })),
    };
  }

  private state(id: string): SessionState {
    const s = this.sessions.get(id);
    if (!s) throw new ApiError(404, `unknown session ${id}`);
    return {
      session_id: id,
      rater_id: s.rater,
      cursor: s.answers.length,
      n_items: this.deck.n_items,
      complete: s.answers.length >= this.deck.n_items,
    };
  }

  async fetchDeck(): Promise<DeckMeta> {
    return this.deck;
  }

  async startSession(raterId: string): Promise<SessionState> {
    const id = `s${this.counter++}`;
    this.sessions.set(id, { rater: raterId, answers: [] });
    return this.state(id);
  }

  async fetchSession(id: string): Promise<SessionState> {
    return this.state(id);
  }

  async submitJudgment(id: string, itemId: string, judged: Source): Promise<SessionState> {
    const s = this.sessions.get(id);
    if (!s) throw new ApiError(404, `unknown session ${id}`);
    const expected = this.deck.items[s.answers.length];
    if (!expected || expected.item_id !== itemId) {
      throw new ApiError(409, "out-of-order submission");
    }
    if (s.answers.some((a) => a.item === itemId)) {
      throw new ApiError(409, "duplicate submission");
    }
    s.answers.push({ item: itemId, judged });
    return this.state(id);
  }

  imageUrl(itemId: string): string {
    return `/api/items/${itemId}/image`;
  }
}

const asApi = (fake: FakeApi) => fake as unknown as SurveyApi;

describe("SessionFlow", () => {
  let fake: FakeApi;
  let store: MemoryStore;

  beforeEach(() => {
    fake = new FakeApi(4);
    store = new MemoryStore();
  });

  it("starts in the login phase and rejects empty rater ids", async () => {
    const flow = await SessionFlow.initialize(asApi(fake), store);
    expect(flow.phase).toBe("login");
    await expect(flow.start("   ")).rejects.toThrow(/non-empty/);
  });

  it("walks the deck in order and completes", async () => {
    const flow = await SessionFlow.initialize(asApi(fake), store);
    await flow.start("dr-x");
    expect(flow.phase).toBe("rating");
    for (let i = 0; i < 4; i++) {
      expect(flow.currentItem()?.item_id).toBe(`item_${i}`);
      expect(flow.progress()).toEqual({ answered: i, total: 4 });
      await flow.submit(i % 2 === 0 ? "real_ffpe" : "ai_ffpe");
    }
    expect(flow.phase).toBe("complete");
    expect(flow.currentItem()).toBeNull();
  });

  it("persists the session id and resumes at the server cursor", async () => {
    const flow = await SessionFlow.initialize(asApi(fake), store);
    await flow.start("dr-y");
    await flow.submit("real_ffpe");
    await flow.submit("ai_ffpe");
    expect(store.getItem(SESSION_STORAGE_KEY)).not.toBeNull();

    // a page refresh: fresh flow over the same store
    const resumed = await SessionFlow.initialize(asApi(fake), store);
    expect(resumed.phase).toBe("rating");
    expect(resumed.progress()).toEqual({ answered: 2, total: 4 });
    expect(resumed.currentItem()?.item_id).toBe("item_2");
  });

  it("drops a stale stored session id", async () => {
    store.setItem(SESSION_STORAGE_KEY, "never-existed");
    const flow = await SessionFlow.initialize(asApi(fake), store);
    expect(flow.phase).toBe("login");
    expect(store.getItem(SESSION_STORAGE_KEY)).toBeNull();
  });

  it("rejects reentrant submissions without advancing", async () => {
    const flow = await SessionFlow.initialize(asApi(fake), store);
    await flow.start("dr-z");
    const first = flow.submit("real_ffpe");
    await expect(flow.submit("ai_ffpe")).rejects.toThrow(/already in flight/);
    await first;
    expect(flow.progress().answered).toBe(1);
  });

  it("re-syncs with the server after a conflict", async () => {
    const flow = await SessionFlow.initialize(asApi(fake), store);
    const session = await flow.start("dr-w");
    // another tab answers item_0 behind this flow's back
    await fake.submitJudgment(session.session_id, "item_0", "ai_ffpe");
    await expect(flow.submit("real_ffpe")).rejects.toThrow(ApiError);
    expect(flow.progress().answered).toBe(1); // re-synced, not diverged
    expect(flow.currentItem()?.item_id).toBe("item_1");
  });

  it("refuses submissions after completion", async () => {
    fake = new FakeApi(1);
    const flow = await SessionFlow.initialize(asApi(fake), store);
    await flow.start("dr-v");
    await flow.submit("real_ffpe");
    expect(flow.phase).toBe("complete");
    await expect(flow.submit("real_ffpe")).rejects.toThrow(/complete/);
  });
});
