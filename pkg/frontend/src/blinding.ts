/** Client-side blinding guard.
 *
 * The server must never reveal true labels before a session is complete;
 * this is defense in depth on the client: every rater-facing payload is
 * deep-scanned and the app refuses to proceed if a label leaks.
 */

import type { DeckItemView, DeckMeta } from "./types.js";

const FORBIDDEN_KEY = "true_source";

export class BlindingViolation extends Error {
  constructor(context: string) {
    super(`blinding violation: payload for "${context}" contains ${FORBIDDEN_KEY}`);
    this.name = "BlindingViolation";
  }
}

function containsForbiddenKey(value: unknown): boolean {
  if (Array.isArray(value)) {
    return value.some(containsForbiddenKey);
  }
  if (value !== null && typeof value === "object") {
    for (const [key, nested] of Object.entries(value as Record<string, unknown>)) {
      if (key === FORBIDDEN_KEY) return true;
      if (containsForbiddenKey(nested)) return true;
    }
  }
  return false;
}

/** Throws when a pre-completion payload carries the true label anywhere. */
export function assertBlinded(payload: unknown, context: string): void {
  if (containsForbiddenKey(payload)) {
    throw new BlindingViolation(context);
  }
}

/** Validates and narrows the deck payload to the rater-facing shape. */
export function sanitizeDeck(raw: unknown): DeckMeta {
  assertBlinded(raw, "deck");
  if (raw === null || typeof raw !== "object") {
    throw new Error("malformed deck payload");
  }
  const doc = raw as Record<string, unknown>;
  const items = doc.items;
  if (!Array.isArray(items) || typeof doc.n_items !== "number") {
    throw new Error("malformed deck payload: items/n_items");
  }
  const views: DeckItemView[] = items.map((item, i) => {
    const entry = item as Record<string, unknown>;
    if (typeof entry.item_id !== "string") {
      throw new Error(`malformed deck item at index ${i}`);
    }
    return { item_id: entry.item_id, index: typeof entry.index === "number" ? entry.index : i };
  });
  if (views.length !== doc.n_items) {
    throw new Error(`deck length ${views.length} does not match n_items ${doc.n_items}`);
  }
  return { schema: String(doc.schema ?? ""), n_items: doc.n_items, items: views };
}
