/** Shared editor types mirroring the service's /v1 contract. */

export type GuidanceMode = "none" | "scribble" | "trimap" | "mask" | "prompt";

/** Stroke labels: 0 background, 1 foreground, 2 unknown (trimap only). */
export type StrokeLabel = 0 | 1 | 2;

export interface Stroke {
  label: StrokeLabel;
  radius: number;
  /** Image-pixel coordinates, independent of the viewport zoom. */
  points: Array<[number, number]>;
}

export interface PatchBoxDto {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ImageRef {
  width: number;
  height: number;
  /** Base64 PNG exactly as it will be submitted. */
  pngBase64: string;
}

export interface MatteResponse {
  /** Decoded 16-bit single-channel matte, values in [0, 1]. */
  alpha: Float32Array;
  width: number;
  height: number;
  /** Decoded uncertainty map at its own (LR) resolution, when requested. */
  uncertainty: { data: Float32Array; width: number; height: number } | null;
  /** Latent-space refinement boxes, when requested. */
  boxes: PatchBoxDto[] | null;
  latentF: number;
  timingMs: number;
}

export interface MatteRequestBody {
  image: string;
  seed?: number;
  hr?: boolean;
  diagnostics?: boolean;
  steps?: number;
  eta?: number;
  seeds?: number;
  guidance?: {
    trimap?: string;
    mask?: string;
    scribbles?: { strokes: Array<{ label: 0 | 1; radius: number; points: number[][] }> };
    literal?: boolean;
    band?: number;
    prompt?: string;
  };
}

export interface SubmitOptions {
  seed?: number;
  hr?: boolean;
  diagnostics?: boolean;
  steps?: number;
  seeds?: number;
}
