/** Labeling-view state: two panels, a bbox hint, brushing, submission.
 *
 * The task payload deliberately has no hole mask and this session never
 * asks the server for one, so the annotator's judgment is unbiased by
 * the hole boundary. Brushes may cross it freely; the server clips.
 */
import type { ApiClient } from "./api.js";
import { BrushState } from "./brush.js";
import { b64decode, b64encode, maskFromDecoded, type PngCodec } from "./png.js";
import type { Box, LabelResult, LabelTask } from "./types.js";

export class LabelingSession {
  readonly brush = new BrushState();
  task: LabelTask | null = null;
  imageWidth = 0;
  imageHeight = 0;
  lastError: string | null = null;
  lastResult: LabelResult | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly annotatorId: string,
    private readonly codec: PngCodec,
  ) {}

  /** Fetch the next task; false when the queue is empty. */
  async load(): Promise<boolean> {
    const task = await this.api.nextLabelTask(this.annotatorId);
    if (task === null) {
      this.task = null;
      return false;
    }
    this.task = task;
    const decoded = await this.codec.decode(b64decode(task.image_png_b64));
    this.imageWidth = decoded.width;
    this.imageHeight = decoded.height;
    this.brush.clear();
    this.lastResult = null;
    this.lastError = null;
    return true;
  }

  /** Editable fill plus the untouched duplicate reference. */
  panels(): { editable: string; reference: string } {
    if (!this.task) throw new Error("no task loaded");
    return {
      editable: this.task.image_png_b64,
      reference: this.task.reference_image_png_b64,
    };
  }

  bbox(): Box | null {
    return this.task?.bbox ?? null;
  }

  /** Current mask on the image's native pixel grid. */
  rasterized(): Uint8Array {
    if (!this.task) throw new Error("no task loaded");
    return this.brush.rasterize(this.imageWidth, this.imageHeight);
  }

  /** Post the rasterized mask; zero strokes submit a perfect-fill (empty)
   * judgment. On network failure the draft strokes are kept for retry. */
  async submit(): Promise<LabelResult | null> {
    if (!this.task) throw new Error("no task loaded");
    const mask = this.rasterized();
    const png = await this.codec.encodeMask(mask, this.imageWidth, this.imageHeight);
    try {
      this.lastResult = await this.api.submitLabel(
        this.task.sample_id,
        b64encode(png),
        this.annotatorId,
      );
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return null; // draft retained; caller offers retry
    }
    this.lastError = null;
    return this.lastResult;
  }

  /** Re-request the task to renew the lease on activity; drafts survive.
   * Returns false when the lease was lost to someone else meanwhile. */
  async renewLease(): Promise<boolean> {
    if (!this.task) return false;
    const task = await this.api.nextLabelTask(this.annotatorId);
    return task !== null && task.sample_id === this.task.sample_id;
  }

  /** Decode helper for tests and the DOM layer. */
  async decodeMaskB64(pngB64: string): Promise<Uint8Array> {
    return maskFromDecoded(await this.codec.decode(b64decode(pngB64)));
  }
}
