/** HTTP client for the matting service's /v1 endpoints. */

import { base64ToBytes } from "./b64.js";
import type { InflateFn } from "./png.js";
import { decodePng } from "./png.js";
import type { MatteRequestBody, MatteResponse } from "./types.js";

export interface HttpClientOptions {
  baseUrl: string;
  inflate: InflateFn;
  fetchImpl?: typeof fetch;
}

interface RawMatteResponse {
  alpha: string;
  uncertainty?: string;
  boxes?: Array<{ x: number; y: number; w: number; h: number }>;
  latent_f: number;
  timing_ms: number;
}

export class HttpMatteClient {
  private readonly baseUrl: string;
  private readonly inflate: InflateFn;
  private readonly fetchImpl: typeof fetch;

  constructor(options: HttpClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, "");
    this.inflate = options.inflate;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  async health(): Promise<{ status: string; version: string }> {
    const res = await this.fetchImpl(`${this.baseUrl}/v1/health`);
    if (!res.ok) {
      throw new Error(`health check failed: HTTP ${res.status}`);
    }
    return res.json();
  }

  async submit(body: MatteRequestBody): Promise<MatteResponse> {
    const res = await this.fetchImpl(`${this.baseUrl}/v1/matte`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      let detail = `HTTP ${res.status}`;
      try {
        const payload = await res.json();
        if (payload && typeof payload.error === "string") {
          detail = `${detail}: ${payload.error}`;
        }
      } catch {
        // no structured error body
      }
      throw new Error(`matte request failed (${detail})`);
    }
    const raw: RawMatteResponse = await res.json();
    const alphaPng = await decodePng(base64ToBytes(raw.alpha), this.inflate);
    if (alphaPng.channels !== 1) {
      throw new Error("alpha payload is not single channel");
    }
    let uncertainty: MatteResponse["uncertainty"] = null;
    if (raw.uncertainty) {
      const u = await decodePng(base64ToBytes(raw.uncertainty), this.inflate);
      uncertainty = { data: u.data, width: u.width, height: u.height };
    }
    return {
      alpha: alphaPng.data,
      width: alphaPng.width,
      height: alphaPng.height,
      uncertainty,
      boxes: raw.boxes ?? null,
      latentF: raw.latent_f,
      timingMs: raw.timing_ms,
    };
  }
}
