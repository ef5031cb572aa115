/** Review-and-refill steering: accept, erase, or extend the predicted
 * artifact region, trigger a refill, and watch PAR across rounds.
 */
import type { ApiClient } from "./api.js";
import { rasterizeStrokes, type Stroke } from "./brush.js";
import { b64decode, b64encode, maskFromDecoded, type PngCodec } from "./png.js";
import type { RefillResult, SegmentResult } from "./types.js";

export class ReviewRefillSession {
  overlayB64: string | null = null;
  width = 0;
  height = 0;
  /** Server prediction as loaded; never mutated by edits. */
  prediction: Uint8Array | null = null;
  /** The user's working region; starts as a copy of the prediction. */
  region: Uint8Array | null = null;
  edited = false;
  history: number[] = [];
  lastError: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly sampleId: string,
    private readonly codec: PngCodec,
  ) {}

  async loadPrediction(): Promise<SegmentResult> {
    const seg = await this.api.requestSegment(this.sampleId);
    const decoded = await this.codec.decode(b64decode(seg.mask_png_b64));
    this.width = decoded.width;
    this.height = decoded.height;
    this.prediction = maskFromDecoded(decoded);
    this.region = new Uint8Array(this.prediction);
    this.overlayB64 = seg.overlay_png_b64;
    this.edited = false;
    return seg;
  }

  async syncHistory(): Promise<number[]> {
    const trace = await this.api.getTrace(this.sampleId);
    this.history = trace.pars;
    return this.history;
  }

  eraseAll(): void {
    if (!this.region) throw new Error("no prediction loaded");
    this.region.fill(0);
    this.edited = true;
  }

  /** Brush edits on the working region (paint adds, erase removes). */
  applyStrokes(strokes: readonly Stroke[]): void {
    if (!this.region) throw new Error("no prediction loaded");
    const delta = rasterizeStrokes(
      strokes.filter((s) => s.mode === "paint"),
      this.width,
      this.height,
    );
    const eraser = rasterizeStrokes(
      strokes.filter((s) => s.mode === "erase").map((s) => ({ ...s, mode: "paint" as const })),
      this.width,
      this.height,
    );
    for (let i = 0; i < this.region.length; i++) {
      if (delta[i]) this.region[i] = 1;
      if (eraser[i]) this.region[i] = 0;
    }
    this.edited = true;
  }

  regionArea(): number {
    if (!this.region) return 0;
    let n = 0;
    for (const v of this.region) n += v;
    return n;
  }

  /** Refill is only offered while some region is selected. */
  canRefill(): boolean {
    return this.regionArea() > 0;
  }

  /** One steering round. Accept-without-edit sends no override, so the
   * refill hole is exactly the server prediction clipped to the hole;
   * edited regions are uploaded as the override. Errors keep state. */
  async refill(): Promise<RefillResult | null> {
    if (!this.region) throw new Error("no prediction loaded");
    if (!this.canRefill()) {
      this.lastError = "no region selected";
      return null;
    }
    let override: string | undefined;
    if (this.edited) {
      override = b64encode(await this.codec.encodeMask(this.region, this.width, this.height));
    }
    let result: RefillResult;
    try {
      result = await this.api.requestRefill(this.sampleId, override);
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return null; // inline message; region and history stay intact
    }
    this.lastError = null;
    if (!result.noop && result.artifact_png_b64) {
      const decoded = await this.codec.decode(b64decode(result.artifact_png_b64));
      this.prediction = maskFromDecoded(decoded);
      this.region = new Uint8Array(this.prediction);
      this.edited = false;
      this.history.push(result.par);
    }
    return result;
  }
}
