import { describe, expect, it } from "vitest";

import {
  boxesToImageRects, compositeCutout, rasterizeStrokes, trimapImage,
  uncertaintyHeatmap,
} from "../src/render.js";

describe("compositeCutout", () => {
  it("alpha one shows the image, alpha zero shows the checker", () => {
    const w = 16, h = 16;
    const rgb = new Float32Array(w * h * 3).fill(0.25);
    const alpha = new Float32Array(w * h);
    alpha.fill(1, 0, w * 8);   // top half opaque
    const out = compositeCutout(rgb, alpha, w, h, 8);
    expect(out[0]).toBe(Math.round(255 * 0.25));          // image color
    const bottom = 4 * (15 * w + 0);
    expect([Math.round(255 * 0.78), Math.round(255 * 0.58)]).toContain(out[bottom]);
  });

  it("checker tiles alternate", () => {
    const w = 16, h = 8;
    const out = compositeCutout(new Float32Array(w * h * 3), new Float32Array(w * h), w, h, 8);
    expect(out[0]).not.toBe(out[4 * 8]); // adjacent tiles differ
  });
});

describe("uncertaintyHeatmap", () => {
  it("zero values are transparent, max is hot", () => {
    const u = new Float32Array([0, 0.5, 1, 0.25]);
    const out = uncertaintyHeatmap(u, 2, 2);
    expect(out[3]).toBe(0);          // zero -> transparent
    expect(out[4 * 2]).toBe(255);    // max -> red channel saturated
    expect(out[4 * 2 + 2]).toBe(0);  // ... and no blue
  });
});

describe("boxesToImageRects", () => {
  it("scales latent boxes by the codec factor", () => {
    const rects = boxesToImageRects([{ x: 3, y: 2, w: 4, h: 5 }], 8);
    expect(rects[0]).toEqual({ x: 24, y: 16, w: 32, h: 40 });
  });
});

describe("stroke rasterization", () => {
  it("stamps discs along the segment", () => {
    const labels = rasterizeStrokes(
      [{ label: 1, radius: 1.4, points: [[2, 2], [8, 2]] }], 12, 6);
    expect(labels[2 * 12 + 2]).toBe(1);
    expect(labels[2 * 12 + 5]).toBe(1);
    expect(labels[2 * 12 + 8]).toBe(1);
    expect(labels[5 * 12 + 2]).toBe(255);  // untouched
  });

  it("later strokes overwrite earlier ones", () => {
    const labels = rasterizeStrokes([
      { label: 1, radius: 2, points: [[4, 4]] },
      { label: 0, radius: 2, points: [[4, 4]] },
    ], 8, 8);
    expect(labels[4 * 8 + 4]).toBe(0);
  });

  it("trimap export uses the three 8-bit levels with unknown default", () => {
    const img = trimapImage([
      { label: 1, radius: 1, points: [[1, 1]] },
      { label: 0, radius: 1, points: [[6, 1]] },
      { label: 2, radius: 1, points: [[3, 6]] },
    ], 8, 8);
    expect(img[1 * 8 + 1]).toBe(255);
    expect(img[1 * 8 + 6]).toBe(0);
    expect(img[6 * 8 + 3]).toBe(128);
    expect(img[0]).toBe(128);  // unpainted pixels stay unknown
    const levels = new Set(img);
    for (const v of levels) expect([0, 128, 255]).toContain(v);
  });
});
