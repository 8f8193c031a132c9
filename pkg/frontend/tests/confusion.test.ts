import { describe, expect, it } from "vitest";

import { confusionMatrix, fractionJudgedReal, perClassScores } from "../src/confusion.js";
import type { ExportedResponse, Source } from "../src/types.js";

function deck(judge: (trueSource: Source, i: number) => Source): ExportedResponse[] {
  const rows: ExportedResponse[] = [];
  let t = 0;
  for (const trueSource of ["real_ffpe", "ai_ffpe"] as const) {
    for (let i = 0; i < 5; i++) {
      rows.push({
        rater_id: "r1",
        item_id: `${trueSource}_${i}`,
        true_source: trueSource,
        judged_source: judge(trueSource, i),
        timestamp_iso8601: `2026-01-01T00:00:${String(t++).padStart(2, "0")}+00:00`,
      });
    }
  }
  return rows;
}

describe("confusion scoring", () => {
  it("all-correct judgments give F1 = 1 for both classes", () => {
    const scores = perClassScores(confusionMatrix(deck((t) => t)));
    expect(scores.real_ffpe.f1).toBe(1);
    expect(scores.ai_ffpe.f1).toBe(1);
  });

  it("judging everything real matches the closed form", () => {
    const matrix = confusionMatrix(deck(() => "real_ffpe"));
    const scores = perClassScores(matrix);
    expect(scores.real_ffpe.recall).toBe(1);
    expect(scores.real_ffpe.precision).toBeCloseTo(0.5, 12);
    expect(scores.real_ffpe.f1).toBeCloseTo(2 / 3, 12);
    expect(scores.ai_ffpe.f1).toBe(0);
    const judgedReal = fractionJudgedReal(matrix);
    expect(judgedReal.real_ffpe).toBe(1);
    expect(judgedReal.ai_ffpe).toBe(1);
  });

  it("counts land in the right confusion cells", () => {
    const matrix = confusionMatrix(
      deck((t, i) => (i === 0 ? (t === "real_ffpe" ? "ai_ffpe" : "real_ffpe") : t)),
    );
    expect(matrix.real_ffpe).toEqual({ real_ffpe: 4, ai_ffpe: 1 });
    expect(matrix.ai_ffpe).toEqual({ real_ffpe: 1, ai_ffpe: 4 });
  });
});
