import { describe, expect, it } from "vitest";

import { ZOOM_MAX, ZOOM_MIN, panBy, resetZoom, toTransform, zoomAt } from "../src/zoom.js";

describe("zoom math", () => {
  it("clamps to the configured range", () => {
    let state = resetZoom();
    for (let i = 0; i < 30; i++) state = zoomAt(state, 0, 0, 2);
    expect(state.scale).toBe(ZOOM_MAX);
    for (let i = 0; i < 60; i++) state = zoomAt(state, 0, 0, 0.5);
    expect(state.scale).toBe(ZOOM_MIN);
  });

  it("keeps the anchor point fixed while zooming", () => {
    const state = zoomAt(resetZoom(), 100, 50, 2);
    // the content point under (100, 50) was (100, 50); after the zoom it must
    // still render at (100, 50): p_screen = p_content * scale + translation
    expect(100 * state.scale + state.x).toBeCloseTo(100, 9);
    expect(50 * state.scale + state.y).toBeCloseTo(50, 9);
  });

  it("pans additively and resets cleanly", () => {
    const panned = panBy(panBy(resetZoom(), 5, -3), -2, 10);
    expect(panned).toEqual({ scale: 1, x: 3, y: 7 });
    expect(resetZoom()).toEqual({ scale: 1, x: 0, y: 0 });
  });

  it("emits a CSS transform string", () => {
    expect(toTransform({ scale: 2, x: 3.5, y: -1 })).toBe("translate(3.5px, -1px) scale(2)");
  });
});
