/** Minimal PNG codec for the editor's needs.
 *
 * Decodes non-interlaced 8-bit gray / RGB / RGBA and 16-bit gray (the
 * service returns 16-bit gray mattes); encodes 8-bit gray (trimap and
 * mask export). The zlib step is injected so the browser can use
 * (De)CompressionStream and node tests can use node:zlib.
 */

export type InflateFn = (data: Uint8Array) => Uint8Array | Promise<Uint8Array>;
export type DeflateFn = (data: Uint8Array) => Uint8Array | Promise<Uint8Array>;

export interface DecodedImage {
  width: number;
  height: number;
  channels: number;
  bitDepth: number;
  /** Channel-interleaved, row-major, normalized to [0, 1]. */
  data: Float32Array;
}

const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

const CHANNELS_BY_COLOR_TYPE: Record<number, number> = { 0: 1, 2: 3, 6: 4 };

export async function decodePng(bytes: Uint8Array, inflate: InflateFn): Promise<DecodedImage> {
  if (bytes.length < 8 || SIGNATURE.some((b, i) => bytes[i] !== b)) {
    throw new Error("not a PNG file");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let pos = 8;
  let width = 0;
  let height = 0;
  let bitDepth = 0;
  let colorType = 0;
  const idat: Uint8Array[] = [];
  while (pos + 8 <= bytes.length) {
    const length = view.getUint32(pos);
    const type = String.fromCharCode(bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]);
    const dataStart = pos + 8;
    if (type === "IHDR") {
      width = view.getUint32(dataStart);
      height = view.getUint32(dataStart + 4);
      bitDepth = bytes[dataStart + 8];
      colorType = bytes[dataStart + 9];
      if (bytes[dataStart + 12] !== 0) {
        throw new Error("interlaced PNG not supported");
      }
    } else if (type === "IDAT") {
      idat.push(bytes.subarray(dataStart, dataStart + length));
    } else if (type === "IEND") {
      break;
    }
    pos = dataStart + length + 4; // skip CRC
  }
  const channels = CHANNELS_BY_COLOR_TYPE[colorType];
  if (!channels) {
    throw new Error(`unsupported PNG color type ${colorType}`);
  }
  if (bitDepth !== 8 && !(bitDepth === 16 && colorType === 0)) {
    throw new Error(`unsupported PNG bit depth ${bitDepth} (color type ${colorType})`);
  }
  const compressed = concat(idat);
  const raw = await inflate(compressed);
  const bytesPerSample = bitDepth / 8;
  const bpp = channels * bytesPerSample;
  const stride = width * bpp;
  const pixels = unfilter(raw, height, stride, bpp);
  const out = new Float32Array(width * height * channels);
  if (bitDepth === 8) {
    for (let i = 0; i < out.length; i++) {
      out[i] = pixels[i] / 255;
    }
  } else {
    for (let i = 0; i < out.length; i++) {
      out[i] = ((pixels[2 * i] << 8) | pixels[2 * i + 1]) / 65535;
    }
  }
  return { width, height, channels, bitDepth, data: out };
}

function concat(parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let off = 0;
  for (const p of parts) {
    out.set(p, off);
    off += p.length;
  }
  return out;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

function unfilter(raw: Uint8Array, height: number, stride: number, bpp: number): Uint8Array {
  if (raw.length < height * (stride + 1)) {
    throw new Error("truncated PNG pixel data");
  }
  const out = new Uint8Array(height * stride);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const src = y * (stride + 1) + 1;
    const dst = y * stride;
    const prev = dst - stride;
    for (let x = 0; x < stride; x++) {
      const rawByte = raw[src + x];
      const left = x >= bpp ? out[dst + x - bpp] : 0;
      const up = y > 0 ? out[prev + x] : 0;
      const upLeft = y > 0 && x >= bpp ? out[prev + x - bpp] : 0;
      let value: number;
      switch (filter) {
        case 0: value = rawByte; break;
        case 1: value = rawByte + left; break;
        case 2: value = rawByte + up; break;
        case 3: value = rawByte + ((left + up) >> 1); break;
        case 4: value = rawByte + paeth(left, up, upLeft); break;
        default: throw new Error(`unknown PNG filter ${filter}`);
      }
      out[dst + x] = value & 0xff;
    }
  }
  return out;
}

// -- encoding ---------------------------------------------------------------

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let crc = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    crc = CRC_TABLE[(crc ^ bytes[i]) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + data.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, data.length);
  for (let i = 0; i < 4; i++) {
    out[4 + i] = type.charCodeAt(i);
  }
  out.set(data, 8);
  view.setUint32(8 + data.length, crc32(out.subarray(4, 8 + data.length)));
  return out;
}

/** Encode an 8-bit grayscale image (values 0..255, row-major). */
export async function encodePngGray8(
  data: Uint8Array, width: number, height: number, deflate: DeflateFn,
): Promise<Uint8Array> {
  if (data.length !== width * height) {
    throw new Error(`expected ${width * height} pixels, got ${data.length}`);
  }
  const ihdr = new Uint8Array(13);
  const iv = new DataView(ihdr.buffer);
  iv.setUint32(0, width);
  iv.setUint32(4, height);
  ihdr[8] = 8;  // bit depth
  ihdr[9] = 0;  // color type gray
  const filtered = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    filtered[y * (width + 1)] = 0;
    filtered.set(data.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  const idat = await deflate(filtered);
  return concat([
    new Uint8Array(SIGNATURE),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat instanceof Uint8Array ? idat : new Uint8Array(idat)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}
