/** Editor session state and transitions.
 *
 * The session owns the image handle, stroke list, guidance mode and the
 * last service response. Strokes live in image-pixel coordinates and
 * only exist in scribble/trimap modes; loading a new image clears the
 * response and all strokes. One request may be in flight at a time;
 * stroke edits made while waiting simply stay in the session and ride
 * along with the next submit.
 */

import { bytesToBase64 } from "./b64.js";
import type { DeflateFn } from "./png.js";
import { encodePngGray8 } from "./png.js";
import { trimapImage } from "./render.js";
import type {
  GuidanceMode, ImageRef, MatteRequestBody, MatteResponse, Stroke, StrokeLabel,
  SubmitOptions,
} from "./types.js";

export interface MatteClient {
  submit(body: MatteRequestBody): Promise<MatteResponse>;
}

export class EditorSession {
  image: ImageRef | null = null;
  mode: GuidanceMode = "none";
  strokes: Stroke[] = [];
  prompt = "";
  maskBase64: string | null = null;
  response: MatteResponse | null = null;
  overlayOpacity = 0.8;
  showUncertainty = false;
  showBoxes = false;
  inFlight = false;
  lastError: string | null = null;

  private undoStack: Stroke[][] = [];

  constructor(private readonly deflate: DeflateFn) {}

  loadImage(image: ImageRef): void {
    this.image = image;
    this.response = null;
    this.strokes = [];
    this.undoStack = [];
    this.lastError = null;
  }

  setMode(mode: GuidanceMode): void {
    if (mode === this.mode) {
      return;
    }
    this.mode = mode;
    if (mode !== "scribble" && mode !== "trimap") {
      this.strokes = [];
      this.undoStack = [];
    }
  }

  /** Append a stroke (image-pixel coordinates); grows the undo stack. */
  drawStroke(label: StrokeLabel, radius: number, points: Array<[number, number]>): void {
    if (!this.image) {
      throw new Error("no image loaded");
    }
    if (this.mode !== "scribble" && this.mode !== "trimap") {
      throw new Error(`strokes are not available in ${this.mode} mode`);
    }
    if (this.mode === "scribble" && label === 2) {
      throw new Error("scribble strokes are foreground (1) or background (0)");
    }
    if (!points.length || radius <= 0) {
      throw new Error("stroke needs points and a positive radius");
    }
    this.undoStack.push(this.strokes.slice());
    this.strokes = [...this.strokes, { label, radius, points: points.slice() }];
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) {
      return false;
    }
    this.strokes = prev;
    return true;
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  setPrompt(prompt: string): void {
    this.prompt = prompt;
  }

  setMask(maskBase64: string): void {
    this.maskBase64 = maskBase64;
  }

  /** Request body for the current state; the guidance field is absent
   * when the mode contributes nothing. */
  async buildRequest(opts: SubmitOptions = {}): Promise<MatteRequestBody> {
    if (!this.image) {
      throw new Error("no image loaded");
    }
    const body: MatteRequestBody = { image: this.image.pngBase64 };
    if (opts.seed !== undefined) body.seed = opts.seed;
    if (opts.hr !== undefined) body.hr = opts.hr;
    if (opts.diagnostics !== undefined) body.diagnostics = opts.diagnostics;
    if (opts.steps !== undefined) body.steps = opts.steps;
    if (opts.seeds !== undefined) body.seeds = opts.seeds;
    const guidance = await this.buildGuidance();
    if (guidance !== null) {
      body.guidance = guidance;
    }
    return body;
  }

  private async buildGuidance(): Promise<MatteRequestBody["guidance"] | null> {
    const { width, height } = this.image!;
    switch (this.mode) {
      case "none":
        return null;
      case "prompt":
        return this.prompt ? { prompt: this.prompt } : null;
      case "scribble": {
        if (!this.strokes.length) {
          return null;
        }
        return {
          scribbles: {
            strokes: this.strokes.map((s) => ({
              label: s.label as 0 | 1,
              radius: s.radius,
              points: s.points.map(([x, y]) => [x, y]),
            })),
          },
        };
      }
      case "trimap": {
        if (!this.strokes.length) {
          return null;
        }
        const pixels = trimapImage(this.strokes, width, height);
        const png = await encodePngGray8(pixels, width, height, this.deflate);
        return { trimap: bytesToBase64(png) };
      }
      case "mask":
        return this.maskBase64 ? { mask: this.maskBase64 } : null;
    }
  }

  /** Submit the current state. Returns the response, or null when a
   * request is already in flight (resubmit is disabled, edits queue up
   * for the next submit). Errors are recorded for the retry affordance
   * and re-thrown. */
  async submit(client: MatteClient, opts: SubmitOptions = {}): Promise<MatteResponse | null> {
    if (this.inFlight) {
      return null;
    }
    // flag set before the first await so a reentrant call cannot slip
    // past the guard while the request body is being built
    this.inFlight = true;
    this.lastError = null;
    try {
      const body = await this.buildRequest(opts);
      const response = await client.submit(body);
      this.response = response;
      return response;
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      throw err;
    } finally {
      this.inFlight = false;
    }
  }
}
