/** Scripted end-to-end drive against a real engine process.
 *
 * Starts the matting service with the procedural threshold oracle,
 * draws one foreground and one background stroke through the editor
 * session, submits, and checks that the rendered alpha honors the
 * stroke-covered pixels. The request payload is validated against the
 * shared JSON schema before it leaves the editor.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { deflateSync, inflateSync } from "node:zlib";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { Ajv2020 } from "ajv/dist/2020.js";

import { HttpMatteClient } from "../src/api.js";
import { bytesToBase64 } from "../src/b64.js";
import { encodePngGray8 } from "../src/png.js";
import { compositeCutout, rasterizeStrokes } from "../src/render.js";
import { EditorSession } from "../src/session.js";

const deflate = (d: Uint8Array) => new Uint8Array(deflateSync(d));
const inflate = (d: Uint8Array) => new Uint8Array(inflateSync(d));

const PORT = 8452;
const BASE = `http://127.0.0.1:${PORT}`;
const WIDTH = 96;
const HEIGHT = 64;

let server: ChildProcess | null = null;

async function waitForHealth(client: HttpMatteClient, tries = 120): Promise<void> {
  for (let i = 0; i < tries; i++) {
    try {
      const h = await client.health();
      if (h.status === "ok") return;
    } catch {
      await new Promise((r) => setTimeout(r, 500));
    }
  }
  throw new Error("engine did not become healthy");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "genmatte-editor-"));
  const cfgPath = join(dir, "config.json");
  writeFileSync(cfgPath, JSON.stringify({
    denoiser: { kind: "procedural", target: "luminance_threshold" },
  }));
  server = spawn("genmatte", ["serve", "--port", String(PORT), "--config", cfgPath],
                 { stdio: "ignore" });
  const client = new HttpMatteClient({ baseUrl: BASE, inflate });
  await waitForHealth(client);
}, 90_000);

afterAll(() => {
  server?.kill();
});

describe("editor round trip against the live engine", () => {
  it("stroke-known pixels survive into the rendered alpha", async () => {
    // step image: left half dark (target alpha 0), right half bright (1)
    const pixels = new Uint8Array(WIDTH * HEIGHT);
    for (let y = 0; y < HEIGHT; y++) {
      for (let x = 0; x < WIDTH; x++) {
        pixels[y * WIDTH + x] = x < WIDTH / 2 ? 51 : 217;  // 0.2 / 0.85
      }
    }
    const png = await encodePngGray8(pixels, WIDTH, HEIGHT, deflate);

    const session = new EditorSession(deflate);
    session.loadImage({ width: WIDTH, height: HEIGHT, pngBase64: bytesToBase64(png) });
    session.setMode("scribble");
    session.drawStroke(1, 4, [[66, 12], [84, 44]]);   // FG stroke, bright side
    session.drawStroke(0, 4, [[10, 12], [28, 44]]);   // BG stroke, dark side

    const body = await session.buildRequest({ seed: 3, hr: true, diagnostics: true });
    const schema = JSON.parse(readFileSync(
      join(__dirname, "..", "..", "schema", "matte-v1.schema.json"), "utf-8"));
    const validate = new Ajv2020({ strictTypes: false }).compile(schema);
    expect(validate(body), JSON.stringify(validate.errors)).toBe(true);

    const client = new HttpMatteClient({ baseUrl: BASE, inflate });
    const response = await session.submit(client, { seed: 3, hr: true, diagnostics: true });
    expect(response).not.toBeNull();
    expect(response!.width).toBe(WIDTH);
    expect(response!.height).toBe(HEIGHT);
    expect(response!.latentF).toBeGreaterThanOrEqual(1);

    // the alpha must honor the stroke-covered pixels within 1e-2
    const labels = rasterizeStrokes(session.strokes, WIDTH, HEIGHT);
    let fgChecked = 0;
    let bgChecked = 0;
    for (let i = 0; i < labels.length; i++) {
      if (labels[i] === 1) {
        expect(Math.abs(response!.alpha[i] - 1)).toBeLessThanOrEqual(1e-2);
        fgChecked++;
      } else if (labels[i] === 0) {
        expect(Math.abs(response!.alpha[i])).toBeLessThanOrEqual(1e-2);
        bgChecked++;
      }
    }
    expect(fgChecked).toBeGreaterThan(50);
    expect(bgChecked).toBeGreaterThan(50);

    // rendering: the checkerboard cutout shows the image on FG strokes
    // and pure checker on BG strokes
    const rgb = new Float32Array(WIDTH * HEIGHT * 3);
    for (let i = 0; i < pixels.length; i++) {
      rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = pixels[i] / 255;
    }
    const rendered = compositeCutout(rgb, response!.alpha, WIDTH, HEIGHT);
    for (const [i, label] of [...labels.entries()].filter(([, l]) => l !== 255)) {
      const shown = rendered[4 * i] / 255;
      if (label === 1) {
        expect(Math.abs(shown - pixels[i] / 255)).toBeLessThanOrEqual(0.02);
      } else {
        expect([0.78, 0.58].some((c) => Math.abs(shown - c) <= 0.02)).toBe(true);
      }
    }
  }, 120_000);

  it("second identical submit returns identical alpha", async () => {
    const pixels = new Uint8Array(WIDTH * HEIGHT).fill(200);
    const png = await encodePngGray8(pixels, WIDTH, HEIGHT, deflate);
    const session = new EditorSession(deflate);
    session.loadImage({ width: WIDTH, height: HEIGHT, pngBase64: bytesToBase64(png) });
    const client = new HttpMatteClient({ baseUrl: BASE, inflate });
    const a = await session.submit(client, { seed: 5 });
    const b = await session.submit(client, { seed: 5 });
    expect(Array.from(a!.alpha)).toEqual(Array.from(b!.alpha));
  }, 60_000);
});
