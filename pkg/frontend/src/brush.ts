/** Brush strokes and their rasterization to a binary mask.
 *
 * The mask is always rasterized on the image's native pixel grid; the
 * DOM layer converts screen coordinates through `mapViewToImage` before
 * they reach the brush, so on-screen zoom never changes the export.
 */

export type BrushMode = "paint" | "erase";

export interface StrokePoint {
  x: number;
  y: number;
}

export interface Stroke {
  mode: BrushMode;
  radius: number;
  points: StrokePoint[];
}

/** Screen-space to image-space coordinates under zoom and pan. */
export function mapViewToImage(
  viewX: number,
  viewY: number,
  zoom: number,
  panX = 0,
  panY = 0,
): StrokePoint {
  if (zoom <= 0) {
    throw new Error(`zoom must be positive, got ${zoom}`);
  }
  return { x: (viewX - panX) / zoom, y: (viewY - panY) / zoom };
}

function stampDisk(
  mask: Uint8Array,
  width: number,
  height: number,
  cx: number,
  cy: number,
  radius: number,
  value: 0 | 1,
): void {
  const r2 = radius * radius;
  const y0 = Math.max(Math.floor(cy - radius), 0);
  const y1 = Math.min(Math.ceil(cy + radius), height - 1);
  const x0 = Math.max(Math.floor(cx - radius), 0);
  const x1 = Math.min(Math.ceil(cx + radius), width - 1);
  for (let y = y0; y <= y1; y++) {
    for (let x = x0; x <= x1; x++) {
      const dx = x - cx;
      const dy = y - cy;
      if (dx * dx + dy * dy <= r2) {
        mask[y * width + x] = value;
      }
    }
  }
}

function stampStroke(mask: Uint8Array, width: number, height: number, stroke: Stroke): void {
  const value: 0 | 1 = stroke.mode === "paint" ? 1 : 0;
  const pts = stroke.points;
  if (pts.length === 0) return;
  stampDisk(mask, width, height, pts[0].x, pts[0].y, stroke.radius, value);
  for (let i = 1; i < pts.length; i++) {
    const a = pts[i - 1];
    const b = pts[i];
    const dist = Math.hypot(b.x - a.x, b.y - a.y);
    const steps = Math.max(1, Math.ceil((dist / Math.max(stroke.radius, 1)) * 2));
    for (let s = 1; s <= steps; s++) {
      const t = s / steps;
      stampDisk(mask, width, height, a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t,
        stroke.radius, value);
    }
  }
}

/** Apply strokes in order onto a fresh width*height binary mask. */
export function rasterizeStrokes(
  strokes: readonly Stroke[],
  width: number,
  height: number,
): Uint8Array {
  if (width <= 0 || height <= 0) {
    throw new Error(`bad raster size ${width}x${height}`);
  }
  const mask = new Uint8Array(width * height);
  for (const stroke of strokes) {
    stampStroke(mask, width, height, stroke);
  }
  return mask;
}

export const MIN_BRUSH_RADIUS = 2;
export const MAX_BRUSH_RADIUS = 64;
export const DEFAULT_BRUSH_RADIUS = 12;

export class BrushState {
  radius = DEFAULT_BRUSH_RADIUS;
  mode: BrushMode = "paint";

  private strokes: Stroke[] = [];
  private redoStack: Stroke[] = [];
  private active: Stroke | null = null;

  setRadius(radius: number): void {
    this.radius = Math.min(MAX_BRUSH_RADIUS, Math.max(MIN_BRUSH_RADIUS, radius));
  }

  begin(x: number, y: number): void {
    this.active = { mode: this.mode, radius: this.radius, points: [{ x, y }] };
  }

  extend(x: number, y: number): void {
    if (!this.active) {
      this.begin(x, y);
      return;
    }
    this.active.points.push({ x, y });
  }

  end(): void {
    if (this.active) {
      this.strokes.push(this.active);
      this.active = null;
      this.redoStack = []; // a new stroke invalidates the redo history
    }
  }

  undo(): boolean {
    const stroke = this.strokes.pop();
    if (!stroke) return false;
    this.redoStack.push(stroke);
    return true;
  }

  redo(): boolean {
    const stroke = this.redoStack.pop();
    if (!stroke) return false;
    this.strokes.push(stroke);
    return true;
  }

  clear(): void {
    this.strokes = [];
    this.redoStack = [];
    this.active = null;
  }

  get strokeCount(): number {
    return this.strokes.length;
  }

  allStrokes(): readonly Stroke[] {
    return this.active ? [...this.strokes, this.active] : this.strokes;
  }

  rasterize(width: number, height: number): Uint8Array {
    return rasterizeStrokes(this.allStrokes(), width, height);
  }
}
