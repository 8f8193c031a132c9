/** Client-side scoring of a completed session, mirroring the backend stats. */

import { SOURCES, type ExportedResponse, type Source } from "./types.js";

export type Confusion = Record<Source, Record<Source, number>>;

export interface ClassScores {
  precision: number;
  recall: number;
  f1: number;
  support: number;
}

export function confusionMatrix(responses: ExportedResponse[]): Confusion {
  const matrix: Confusion = {
    real_ffpe: { real_ffpe: 0, ai_ffpe: 0 },
    ai_ffpe: { real_ffpe: 0, ai_ffpe: 0 },
  };
  for (const r of responses) {
    matrix[r.true_source][r.judged_source] += 1;
  }
  return matrix;
}

/** Precision/recall/F1 per class with the zero-division-to-0 convention. */
export function perClassScores(matrix: Confusion): Record<Source, ClassScores> {
  const result = {} as Record<Source, ClassScores>;
  for (const cls of SOURCES) {
    const tp = matrix[cls][cls];
    const judged = SOURCES.reduce((acc, t) => acc + matrix[t][cls], 0);
    const support = SOURCES.reduce((acc, j) => acc + matrix[cls][j], 0);
    const precision = judged > 0 ? tp / judged : 0;
    const recall = support > 0 ? tp / support : 0;
    const f1 = precision + recall > 0 ? (2 * precision * recall) / (precision + recall) : 0;
    result[cls] = { precision, recall, f1, support };
  }
  return result;
}

/** The survey's headline rate: share of each true class judged real. */
export function fractionJudgedReal(matrix: Confusion): Record<Source, number> {
  const result = {} as Record<Source, number>;
  for (const cls of SOURCES) {
    const total = SOURCES.reduce((acc, j) => acc + matrix[cls][j], 0);
    result[cls] = total > 0 ? matrix[cls].real_ffpe / total : 0;
  }
  return result;
}
