/** Shared wire types for the survey client. */

export type Source = "real_ffpe" | "ai_ffpe";

export const SOURCES: readonly Source[] = ["real_ffpe", "ai_ffpe"];

/** One deck entry as the rater is allowed to see it: id and position only. */
export interface DeckItemView {
  item_id: string;
  index: number;
}

export interface DeckMeta {
  schema: string;
  n_items: number;
  items: DeckItemView[];
}

export interface SessionState {
  session_id: string;
  rater_id: string;
  cursor: number;
  n_items: number;
  complete: boolean;
}

/** One row of the completed-session export; true_source appears only here. */
export interface ExportedResponse {
  rater_id: string;
  item_id: string;
  true_source: Source;
  judged_source: Source;
  timestamp_iso8601: string;
}

export function isSource(value: unknown): value is Source {
  return value === "real_ffpe" || value === "ai_ffpe";
}
