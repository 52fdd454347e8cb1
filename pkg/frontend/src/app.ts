/** Browser wiring: canvas painting, toolbar, overlays, submission.
 *
 * All pixel math lives in render.ts and the state transitions in
 * session.ts; this module only handles DOM events and drawing, so the
 * testable core never touches the document. Strokes are captured on
 * pointer events and rendered immediately; service calls run async and
 * never block input.
 */

import { HttpMatteClient } from "./api.js";
import { base64ToBytes, bytesToBase64 } from "./b64.js";
import { boxesToImageRects, compositeCutout, uncertaintyHeatmap } from "./render.js";
import { EditorSession } from "./session.js";
import { identityViewport, screenToImage, zoomAt, type Viewport } from "./transform.js";
import type { GuidanceMode, StrokeLabel } from "./types.js";

async function streamTransform(data: Uint8Array, ts: { readable: ReadableStream; writable: WritableStream }): Promise<Uint8Array> {
  const writer = ts.writable.getWriter();
  const copy = new Uint8Array(data.length);
  copy.set(data);
  void writer.write(copy);
  void writer.close();
  const chunks: Uint8Array[] = [];
  const reader = ts.readable.getReader();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    chunks.push(value as Uint8Array);
  }
  const total = chunks.reduce((n, c) => n + c.length, 0);
  const out = new Uint8Array(total);
  let off = 0;
  for (const c of chunks) {
    out.set(c, off);
    off += c.length;
  }
  return out;
}

const inflate = (d: Uint8Array) => streamTransform(d, new DecompressionStream("deflate"));
const deflate = (d: Uint8Array) => streamTransform(d, new CompressionStream("deflate"));

const LABEL_COLORS: Record<number, string> = {
  0: "rgba(220, 60, 60, 0.85)",   // background stroke
  1: "rgba(60, 200, 90, 0.85)",   // foreground stroke
  2: "rgba(200, 200, 60, 0.85)",  // unknown (trimap)
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function startApp(): void {
  const session = new EditorSession(deflate);
  const client = new HttpMatteClient({ baseUrl: "", inflate });
  const canvas = el<HTMLCanvasElement>("editor");
  const ctx = canvas.getContext("2d")!;
  let viewport: Viewport = identityViewport();
  let imageBitmap: ImageBitmap | null = null;
  let imageRgb: Float32Array | null = null;
  let currentStroke: Array<[number, number]> | null = null;
  let label: StrokeLabel = 1;
  let radius = 6;

  const status = el<HTMLSpanElement>("status");
  const say = (text: string) => { status.textContent = text; };

  function redraw(): void {
    ctx.save();
    ctx.fillStyle = "#222";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    if (!imageBitmap || !session.image) {
      ctx.restore();
      return;
    }
    ctx.translate(viewport.offsetX, viewport.offsetY);
    ctx.scale(viewport.scale, viewport.scale);
    ctx.imageSmoothingEnabled = viewport.scale < 2;
    const { width, height } = session.image;
    if (session.response && session.overlayOpacity > 0 && imageRgb) {
      const rgba = compositeCutout(imageRgb, session.response.alpha, width, height);
      const img = new ImageData(new Uint8ClampedArray(rgba), width, height);
      // draw base image, then the cutout at the configured opacity
      ctx.drawImage(imageBitmap, 0, 0);
      ctx.globalAlpha = session.overlayOpacity;
      drawImageData(ctx, img, width, height);
      ctx.globalAlpha = 1;
    } else {
      ctx.drawImage(imageBitmap, 0, 0);
    }
    if (session.response?.uncertainty && session.showUncertainty) {
      const u = session.response.uncertainty;
      const heat = uncertaintyHeatmap(u.data, u.width, u.height);
      const img = new ImageData(new Uint8ClampedArray(heat), u.width, u.height);
      ctx.save();
      ctx.scale(width / u.width, height / u.height);
      drawImageData(ctx, img, u.width, u.height);
      ctx.restore();
    }
    if (session.response?.boxes && session.showBoxes) {
      ctx.strokeStyle = "rgba(80, 160, 255, 0.9)";
      ctx.lineWidth = 2 / viewport.scale;
      for (const r of boxesToImageRects(session.response.boxes, session.response.latentF)) {
        ctx.strokeRect(r.x, r.y, r.w, r.h);
      }
    }
    for (const stroke of session.strokes) {
      ctx.strokeStyle = LABEL_COLORS[stroke.label];
      ctx.lineWidth = stroke.radius * 2;
      ctx.lineCap = "round";
      ctx.lineJoin = "round";
      ctx.beginPath();
      stroke.points.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
      ctx.stroke();
    }
    ctx.restore();
  }

  function drawImageData(c: CanvasRenderingContext2D, img: ImageData, w: number, h: number): void {
    const tmp = document.createElement("canvas");
    tmp.width = w;
    tmp.height = h;
    tmp.getContext("2d")!.putImageData(img, 0, 0);
    c.drawImage(tmp, 0, 0);
  }

  async function loadFile(file: File): Promise<void> {
    const bytes = new Uint8Array(await file.arrayBuffer());
    imageBitmap = await createImageBitmap(new Blob([bytes]));
    const { width, height } = imageBitmap;
    const probe = document.createElement("canvas");
    probe.width = width;
    probe.height = height;
    const pctx = probe.getContext("2d")!;
    pctx.drawImage(imageBitmap, 0, 0);
    const rgba = pctx.getImageData(0, 0, width, height).data;
    imageRgb = new Float32Array(width * height * 3);
    for (let i = 0; i < width * height; i++) {
      imageRgb[3 * i] = rgba[4 * i] / 255;
      imageRgb[3 * i + 1] = rgba[4 * i + 1] / 255;
      imageRgb[3 * i + 2] = rgba[4 * i + 2] / 255;
    }
    // PNG inputs are submitted byte-for-byte; anything else is re-encoded
    const pngBase64 = file.type === "image/png"
      ? bytesToBase64(bytes)
      : await canvasToPngBase64(probe);
    session.loadImage({ width, height, pngBase64 });
    viewport = identityViewport();
    say(`loaded ${file.name} (${width}x${height})`);
    redraw();
  }

  async function canvasToPngBase64(c: HTMLCanvasElement): Promise<string> {
    const blob: Blob = await new Promise((resolve) => c.toBlob((b) => resolve(b!), "image/png"));
    return bytesToBase64(new Uint8Array(await blob.arrayBuffer()));
  }

  el<HTMLInputElement>("file").addEventListener("change", (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) void loadFile(file);
  });

  el<HTMLSelectElement>("mode").addEventListener("change", (ev) => {
    session.setMode((ev.target as HTMLSelectElement).value as GuidanceMode);
    redraw();
  });
  el<HTMLSelectElement>("label").addEventListener("change", (ev) => {
    label = Number((ev.target as HTMLSelectElement).value) as StrokeLabel;
  });
  el<HTMLInputElement>("radius").addEventListener("input", (ev) => {
    radius = Number((ev.target as HTMLInputElement).value);
  });
  el<HTMLInputElement>("prompt").addEventListener("input", (ev) => {
    session.setPrompt((ev.target as HTMLInputElement).value);
  });
  el<HTMLInputElement>("opacity").addEventListener("input", (ev) => {
    session.overlayOpacity = Number((ev.target as HTMLInputElement).value) / 100;
    redraw();  // no refetch: pure re-render
  });
  el<HTMLInputElement>("show-uncertainty").addEventListener("change", (ev) => {
    session.showUncertainty = (ev.target as HTMLInputElement).checked;
    redraw();
  });
  el<HTMLInputElement>("show-boxes").addEventListener("change", (ev) => {
    session.showBoxes = (ev.target as HTMLInputElement).checked;
    redraw();
  });
  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    session.undo();
    redraw();
  });

  canvas.addEventListener("pointerdown", (ev) => {
    if (!session.image || (session.mode !== "scribble" && session.mode !== "trimap")) {
      return;
    }
    canvas.setPointerCapture(ev.pointerId);
    currentStroke = [screenToImage(viewport, ev.offsetX, ev.offsetY)];
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!currentStroke) return;
    currentStroke.push(screenToImage(viewport, ev.offsetX, ev.offsetY));
    // live preview: draw the in-progress stroke without touching state
    redraw();
    ctx.save();
    ctx.translate(viewport.offsetX, viewport.offsetY);
    ctx.scale(viewport.scale, viewport.scale);
    ctx.strokeStyle = LABEL_COLORS[label];
    ctx.lineWidth = radius * 2;
    ctx.lineCap = "round";
    ctx.beginPath();
    currentStroke.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
    ctx.stroke();
    ctx.restore();
  });
  canvas.addEventListener("pointerup", () => {
    if (currentStroke) {
      session.drawStroke(label, radius, currentStroke);
      currentStroke = null;
      redraw();
    }
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    viewport = zoomAt(viewport, ev.offsetX, ev.offsetY, ev.deltaY < 0 ? 1.15 : 1 / 1.15);
    redraw();
  });

  const submitBtn = el<HTMLButtonElement>("submit");
  submitBtn.addEventListener("click", () => {
    if (session.inFlight) return;
    submitBtn.disabled = true;
    say("matting...");
    const hr = el<HTMLInputElement>("hr").checked;
    session
      .submit(client, { hr, diagnostics: true, seed: 0 })
      .then((res) => {
        if (res) say(`done in ${res.timingMs.toFixed(0)} ms`);
        redraw();
      })
      .catch((err) => say(`${err instanceof Error ? err.message : err} - retry?`))
      .finally(() => { submitBtn.disabled = false; });
  });

  say("load an image to begin");
}

startApp();
