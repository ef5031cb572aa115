/** Thin browser layer: canvas rendering and event wiring around the
 * session view-models. All decisions live in the sessions; this file
 * only draws and forwards events, and supplies the canvas PNG codec.
 */
import type { ApiClient } from "./api.js";
import { mapViewToImage } from "./brush.js";
import type { LabelingSession } from "./labeling.js";
import type { DecodedImage, PngCodec } from "./png.js";
import type { ReviewRefillSession } from "./review.js";
import type { VotingSession } from "./voting.js";
import type { Box } from "./types.js";

/** PNG codec backed by canvas APIs; the browser twin of nodePngCodec. */
export const canvasPngCodec: PngCodec = {
  async decode(data: Uint8Array): Promise<DecodedImage> {
    const bitmap = await createImageBitmap(new Blob([data.slice()], { type: "image/png" }));
    const canvas = document.createElement("canvas");
    canvas.width = bitmap.width;
    canvas.height = bitmap.height;
    const ctx = canvas.getContext("2d")!;
    ctx.drawImage(bitmap, 0, 0);
    const px = ctx.getImageData(0, 0, canvas.width, canvas.height);
    return { width: canvas.width, height: canvas.height, rgba: new Uint8Array(px.data) };
  },

  async encodeMask(mask: Uint8Array, width: number, height: number): Promise<Uint8Array> {
    const canvas = document.createElement("canvas");
    canvas.width = width;
    canvas.height = height;
    const ctx = canvas.getContext("2d")!;
    const data = ctx.createImageData(width, height);
    for (let i = 0; i < mask.length; i++) {
      const v = mask[i] ? 255 : 0;
      data.data[i * 4] = v;
      data.data[i * 4 + 1] = v;
      data.data[i * 4 + 2] = v;
      data.data[i * 4 + 3] = 255;
    }
    ctx.putImageData(data, 0, 0);
    const url = canvas.toDataURL("image/png");
    const b64 = url.slice(url.indexOf(",") + 1);
    return Uint8Array.from(atob(b64), (c) => c.charCodeAt(0));
  },
};

export async function loadImageElement(pngB64: string): Promise<HTMLImageElement> {
  const img = new Image();
  img.src = `data:image/png;base64,${pngB64}`;
  await img.decode();
  return img;
}

function drawBbox(ctx: CanvasRenderingContext2D, bbox: Box | null, zoom: number): void {
  if (!bbox) return;
  ctx.strokeStyle = "#285aff";
  ctx.lineWidth = 2;
  ctx.strokeRect(
    bbox.x0 * zoom,
    bbox.y0 * zoom,
    (bbox.x1 - bbox.x0 + 1) * zoom,
    (bbox.y1 - bbox.y0 + 1) * zoom,
  );
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  parent: HTMLElement,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (text) node.textContent = text;
  parent.appendChild(node);
  return node;
}

/** Two panels (editable + reference), bbox overlay, brush handlers. */
export async function mountLabelingView(
  root: HTMLElement,
  session: LabelingSession,
  zoom = 1,
): Promise<void> {
  root.innerHTML = "";
  if (!session.task) {
    el("p", root, "No labeling tasks available.");
    return;
  }
  const panels = session.panels();
  const wrap = el("div", root);
  wrap.className = "panels";

  const editable = el("canvas", wrap);
  const reference = el("canvas", wrap);
  const [editImg, refImg] = await Promise.all([
    loadImageElement(panels.editable),
    loadImageElement(panels.reference),
  ]);
  for (const [canvas, img] of [
    [editable, editImg],
    [reference, refImg],
  ] as const) {
    canvas.width = img.naturalWidth * zoom;
    canvas.height = img.naturalHeight * zoom;
    const ctx = canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
    drawBbox(ctx, session.bbox(), zoom);
  }

  const redraw = () => {
    const ctx = editable.getContext("2d")!;
    ctx.drawImage(editImg, 0, 0, editable.width, editable.height);
    drawBbox(ctx, session.bbox(), zoom);
    const mask = session.rasterized();
    const overlay = ctx.getImageData(0, 0, editable.width, editable.height);
    for (let y = 0; y < editable.height; y++) {
      for (let x = 0; x < editable.width; x++) {
        const p = mapViewToImage(x, y, zoom);
        const mi = Math.floor(p.y) * session.imageWidth + Math.floor(p.x);
        if (mask[mi]) {
          const o = (y * editable.width + x) * 4;
          overlay.data[o] = 255;
          overlay.data[o + 1] = 80;
          overlay.data[o + 2] = 160;
        }
      }
    }
    ctx.putImageData(overlay, 0, 0);
  };

  let brushing = false;
  editable.addEventListener("pointerdown", (ev) => {
    brushing = true;
    const p = mapViewToImage(ev.offsetX, ev.offsetY, zoom);
    session.brush.begin(p.x, p.y);
    redraw();
  });
  editable.addEventListener("pointermove", (ev) => {
    if (!brushing) return;
    const p = mapViewToImage(ev.offsetX, ev.offsetY, zoom);
    session.brush.extend(p.x, p.y);
    redraw();
  });
  editable.addEventListener("pointerup", () => {
    brushing = false;
    session.brush.end();
    redraw();
  });

  const bar = el("div", root);
  const paintBtn = el("button", bar, "paint");
  const eraseBtn = el("button", bar, "erase");
  const undoBtn = el("button", bar, "undo");
  const redoBtn = el("button", bar, "redo");
  const submitBtn = el("button", bar, "submit");
  const status = el("span", bar, "");
  paintBtn.onclick = () => (session.brush.mode = "paint");
  eraseBtn.onclick = () => (session.brush.mode = "erase");
  undoBtn.onclick = () => {
    session.brush.undo();
    redraw();
  };
  redoBtn.onclick = () => {
    session.brush.redo();
    redraw();
  };
  submitBtn.onclick = async () => {
    submitBtn.disabled = true;
    const result = await session.submit();
    submitBtn.disabled = false;
    status.textContent = result
      ? `saved (${result.perfect_fill ? "perfect fill" : `${result.label_area}px`})`
      : `failed: ${session.lastError ?? "unknown"}; draft kept, retry`;
  };
}

/** Overlay, accept/erase/add controls, refill button, PAR history strip. */
export async function mountReviewView(
  root: HTMLElement,
  session: ReviewRefillSession,
): Promise<void> {
  root.innerHTML = "";
  const canvas = el("canvas", root);
  const strip = el("div", root);
  strip.className = "history-strip";
  const bar = el("div", root);
  const eraseAllBtn = el("button", bar, "erase all");
  const refillBtn = el("button", bar, "refill");
  const status = el("span", bar, "");

  const redraw = async () => {
    if (session.overlayB64) {
      const img = await loadImageElement(session.overlayB64);
      canvas.width = img.naturalWidth;
      canvas.height = img.naturalHeight;
      canvas.getContext("2d")!.drawImage(img, 0, 0);
    }
    strip.textContent = `PAR history: ${session.history.map((p) => p.toFixed(3)).join(" -> ")}`;
    refillBtn.disabled = !session.canRefill();
    if (!session.canRefill()) status.textContent = "no region selected";
  };

  eraseAllBtn.onclick = async () => {
    session.eraseAll();
    await redraw();
  };
  refillBtn.onclick = async () => {
    refillBtn.disabled = true;
    const result = await session.refill();
    if (result === null) {
      status.textContent = session.lastError ?? "refill failed";
    } else if (result.noop) {
      status.textContent = `nothing to refill: ${result.reason ?? ""}`;
    } else {
      status.textContent = `PAR ${result.par.toFixed(3)}`;
    }
    await redraw();
  };

  await session.loadPrediction();
  await session.syncHistory();
  await redraw();
}

/** Side-by-side pair with bbox hints; keyboard or click choice. */
export async function mountVotingView(root: HTMLElement, session: VotingSession): Promise<void> {
  root.innerHTML = "";
  if (!session.pair) {
    el("p", root, "No pairs to vote on.");
    return;
  }
  const imgs = session.images();
  const wrap = el("div", root);
  wrap.className = "panels";
  const left = el("canvas", wrap);
  const right = el("canvas", wrap);
  for (const [canvas, b64] of [
    [left, imgs.left],
    [right, imgs.right],
  ] as const) {
    const img = await loadImageElement(b64);
    canvas.width = img.naturalWidth;
    canvas.height = img.naturalHeight;
    const ctx = canvas.getContext("2d")!;
    ctx.drawImage(img, 0, 0);
    drawBbox(ctx, session.pair.bbox, 1);
  }
  const bar = el("div", root);
  const submitBtn = el("button", bar, "submit vote");
  const status = el("span", bar, "");
  left.onclick = () => session.choose("left");
  right.onclick = () => session.choose("right");
  document.addEventListener("keydown", (ev) => session.chooseByKey(ev.key));
  submitBtn.onclick = async () => {
    submitBtn.disabled = true; // double-submit guard, belt and braces
    const state = await session.submit();
    status.textContent = state ? `vote recorded (${state.votes_a + state.votes_b}/5)` : "pick a side first";
    submitBtn.disabled = state === null;
  };
}

