/** Pan/zoom math for the patch viewer (CSS transform based). */

export interface ZoomState {
  scale: number;
  x: number; // translation in viewport pixels
  y: number;
}

export const ZOOM_MIN = 1;
export const ZOOM_MAX = 8;

export function resetZoom(): ZoomState {
  return { scale: 1, x: 0, y: 0 };
}

export function clampScale(scale: number, min = ZOOM_MIN, max = ZOOM_MAX): number {
  return Math.min(max, Math.max(min, scale));
}

/** Zoom by `factor` keeping the viewport point (cx, cy) fixed on screen. */
export function zoomAt(
  state: ZoomState,
  cx: number,
  cy: number,
  factor: number,
  min = ZOOM_MIN,
  max = ZOOM_MAX,
): ZoomState {
  const scale = clampScale(state.scale * factor, min, max);
  const applied = scale / state.scale;
  return {
    scale,
    x: cx - (cx - state.x) * applied,
    y: cy - (cy - state.y) * applied,
  };
}

export function panBy(state: ZoomState, dx: number, dy: number): ZoomState {
  return { ...state, x: state.x + dx, y: state.y + dy };
}

export function toTransform(state: ZoomState): string {
  return `translate(${state.x}px, ${state.y}px) scale(${state.scale})`;
}
