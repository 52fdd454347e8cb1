/** Pure pixel math for the editor overlays: cutout compositing,
 * uncertainty heatmap, stroke rasterization, trimap export, box scaling.
 * Everything operates on typed arrays so it is testable without a DOM.
 */

import type { PatchBoxDto, Stroke } from "./types.js";

/** Checkerboard-composited cutout preview: alpha blends the image over
 * a gray checker, the standard transparency visualization. */
export function compositeCutout(
  rgb: Float32Array, alpha: Float32Array, width: number, height: number, tile = 8,
): Uint8ClampedArray {
  if (rgb.length !== width * height * 3 || alpha.length !== width * height) {
    throw new Error("compositeCutout: size mismatch");
  }
  const out = new Uint8ClampedArray(width * height * 4);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = y * width + x;
      const checker = ((x / tile) | 0) % 2 === ((y / tile) | 0) % 2 ? 0.78 : 0.58;
      const a = alpha[i];
      for (let c = 0; c < 3; c++) {
        out[4 * i + c] = Math.round(255 * (a * rgb[3 * i + c] + (1 - a) * checker));
      }
      out[4 * i + 3] = 255;
    }
  }
  return out;
}

/** Blue-to-red heat ramp over the normalized uncertainty, transparent
 * where the value is zero so it works as an overlay. */
export function uncertaintyHeatmap(
  values: Float32Array, width: number, height: number,
): Uint8ClampedArray {
  if (values.length !== width * height) {
    throw new Error("uncertaintyHeatmap: size mismatch");
  }
  let max = 0;
  for (let i = 0; i < values.length; i++) {
    if (values[i] > max) max = values[i];
  }
  const out = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < values.length; i++) {
    const t = max > 0 ? values[i] / max : 0;
    out[4 * i] = Math.round(255 * t);
    out[4 * i + 1] = Math.round(255 * 0.25 * t);
    out[4 * i + 2] = Math.round(255 * (1 - t));
    out[4 * i + 3] = Math.round(200 * t);
  }
  return out;
}

/** Latent-space boxes scaled to image pixel rectangles by the codec factor. */
export function boxesToImageRects(
  boxes: PatchBoxDto[], latentF: number,
): Array<{ x: number; y: number; w: number; h: number }> {
  return boxes.map((b) => ({
    x: b.x * latentF,
    y: b.y * latentF,
    w: b.w * latentF,
    h: b.h * latentF,
  }));
}

/** Stamp strokes into a label map; 255 marks untouched pixels. */
export function rasterizeStrokes(
  strokes: Stroke[], width: number, height: number,
): Uint8Array {
  const labels = new Uint8Array(width * height).fill(255);
  for (const stroke of strokes) {
    const r = stroke.radius;
    const pts = stroke.points.length > 1
      ? stroke.points
      : [stroke.points[0], stroke.points[0]];
    for (let s = 0; s + 1 < pts.length; s++) {
      stampSegment(labels, width, height, pts[s], pts[s + 1], r, stroke.label);
    }
  }
  return labels;
}

function stampSegment(
  labels: Uint8Array, width: number, height: number,
  p0: [number, number], p1: [number, number], radius: number, label: number,
): void {
  const [x0, y0] = p0;
  const [x1, y1] = p1;
  const minX = Math.max(0, Math.floor(Math.min(x0, x1) - radius));
  const maxX = Math.min(width - 1, Math.ceil(Math.max(x0, x1) + radius));
  const minY = Math.max(0, Math.floor(Math.min(y0, y1) - radius));
  const maxY = Math.min(height - 1, Math.ceil(Math.max(y0, y1) + radius));
  const dx = x1 - x0;
  const dy = y1 - y0;
  const len2 = dx * dx + dy * dy;
  for (let y = minY; y <= maxY; y++) {
    for (let x = minX; x <= maxX; x++) {
      let t = 0;
      if (len2 > 0) {
        t = Math.min(1, Math.max(0, ((x - x0) * dx + (y - y0) * dy) / len2));
      }
      const px = x0 + t * dx;
      const py = y0 + t * dy;
      if ((x - px) ** 2 + (y - py) ** 2 <= radius * radius) {
        labels[y * width + x] = label;
      }
    }
  }
}

/** Trimap export: unpainted pixels are unknown (128), strokes paint
 * background 0, foreground 255 or unknown 128 (8-bit levels of 0/0.5/1). */
export function trimapImage(strokes: Stroke[], width: number, height: number): Uint8Array {
  const labels = rasterizeStrokes(strokes, width, height);
  const out = new Uint8Array(width * height);
  for (let i = 0; i < labels.length; i++) {
    switch (labels[i]) {
      case 0: out[i] = 0; break;
      case 1: out[i] = 255; break;
      default: out[i] = 128; break;
    }
  }
  return out;
}
