/** Viewport mapping between screen (canvas) and image pixel coordinates.
 *
 * Strokes are stored in image pixels, so a stroke drawn at any zoom or
 * pan lands on the same pixels.
 */

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function identityViewport(): Viewport {
  return { scale: 1, offsetX: 0, offsetY: 0 };
}

export function screenToImage(v: Viewport, sx: number, sy: number): [number, number] {
  return [(sx - v.offsetX) / v.scale, (sy - v.offsetY) / v.scale];
}

export function imageToScreen(v: Viewport, ix: number, iy: number): [number, number] {
  return [ix * v.scale + v.offsetX, iy * v.scale + v.offsetY];
}

/** Zoom about a fixed screen point so the pixel under the cursor stays put. */
export function zoomAt(v: Viewport, sx: number, sy: number, factor: number): Viewport {
  const scale = Math.min(64, Math.max(1 / 64, v.scale * factor));
  const [ix, iy] = screenToImage(v, sx, sy);
  return { scale, offsetX: sx - ix * scale, offsetY: sy - iy * scale };
}

export function pan(v: Viewport, dx: number, dy: number): Viewport {
  return { ...v, offsetX: v.offsetX + dx, offsetY: v.offsetY + dy };
}
