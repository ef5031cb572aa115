/** PNG codec interface plus the node implementation (pngjs).
 *
 * The browser build uses the canvas-backed codec from dom.ts instead;
 * sessions receive a codec explicitly so this module (and pngjs) never
 * enters the browser bundle.
 */
import { PNG } from "pngjs";

export interface DecodedImage {
  width: number;
  height: number;
  rgba: Uint8Array; // 4 bytes per pixel
}

/** Async so the browser twin can ride on createImageBitmap/canvas. */
export interface PngCodec {
  decode(data: Uint8Array): Promise<DecodedImage>;
  /** Encode a 0/1 mask as an opaque black/white PNG. */
  encodeMask(mask: Uint8Array, width: number, height: number): Promise<Uint8Array>;
}

export function maskFromDecoded(img: DecodedImage, threshold = 128): Uint8Array {
  const out = new Uint8Array(img.width * img.height);
  for (let i = 0; i < out.length; i++) {
    out[i] = img.rgba[i * 4] >= threshold ? 1 : 0;
  }
  return out;
}

export function b64encode(data: Uint8Array): string {
  return Buffer.from(data).toString("base64");
}

export function b64decode(data: string): Uint8Array {
  return new Uint8Array(Buffer.from(data, "base64"));
}

export const nodePngCodec: PngCodec = {
  async decode(data: Uint8Array): Promise<DecodedImage> {
    const png = PNG.sync.read(Buffer.from(data));
    return { width: png.width, height: png.height, rgba: new Uint8Array(png.data) };
  },

  async encodeMask(mask: Uint8Array, width: number, height: number): Promise<Uint8Array> {
    if (mask.length !== width * height) {
      throw new Error(`mask length ${mask.length} != ${width}x${height}`);
    }
    const png = new PNG({ width, height });
    for (let i = 0; i < mask.length; i++) {
      const v = mask[i] ? 255 : 0;
      png.data[i * 4] = v;
      png.data[i * 4 + 1] = v;
      png.data[i * 4 + 2] = v;
      png.data[i * 4 + 3] = 255;
    }
    return new Uint8Array(PNG.sync.write(png));
  },
};
