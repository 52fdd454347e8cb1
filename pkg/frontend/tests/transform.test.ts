import { describe, expect, it } from "vitest";

import { identityViewport, imageToScreen, pan, screenToImage, zoomAt } from "../src/transform.js";

describe("viewport transform", () => {
  it("screen/image mappings are inverse", () => {
    const v = { scale: 3.5, offsetX: -40, offsetY: 17 };
    for (const p of [[0, 0], [12.5, 7.25], [300, 200]] as Array<[number, number]>) {
      const [sx, sy] = imageToScreen(v, p[0], p[1]);
      const [ix, iy] = screenToImage(v, sx, sy);
      expect(ix).toBeCloseTo(p[0], 10);
      expect(iy).toBeCloseTo(p[1], 10);
    }
  });

  it("stroke coordinates are zoom independent", () => {
    // the same image pixel produces the same stored stroke point no
    // matter how the viewport is zoomed or panned
    const target: [number, number] = [37, 21];
    const viewports = [
      identityViewport(),
      { scale: 4, offsetX: 100, offsetY: -30 },
      zoomAt(identityViewport(), 50, 50, 8),
      pan(zoomAt(identityViewport(), 0, 0, 0.25), 300, 12),
    ];
    for (const v of viewports) {
      const [sx, sy] = imageToScreen(v, target[0], target[1]);
      const [ix, iy] = screenToImage(v, sx, sy);
      expect(ix).toBeCloseTo(target[0], 9);
      expect(iy).toBeCloseTo(target[1], 9);
    }
  });

  it("zoomAt keeps the anchor pixel fixed on screen", () => {
    const v0 = { scale: 2, offsetX: 10, offsetY: 10 };
    const anchor: [number, number] = [120, 90];
    const before = screenToImage(v0, anchor[0], anchor[1]);
    const v1 = zoomAt(v0, anchor[0], anchor[1], 1.6);
    const after = screenToImage(v1, anchor[0], anchor[1]);
    expect(after[0]).toBeCloseTo(before[0], 9);
    expect(after[1]).toBeCloseTo(before[1], 9);
    expect(v1.scale).toBeCloseTo(3.2, 12);
  });
});
