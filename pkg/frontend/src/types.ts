/** Shared payload shapes for the /v1 annotation service. */

export interface Box {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface LabelTask {
  queue: "label";
  sample_id: string;
  image_png_b64: string;
  reference_image_png_b64: string;
  bbox: Box | null;
  lease_seconds: number;
}

export interface VoteTask {
  queue: "vote";
  pair_id: string;
  left_png_b64: string;
  right_png_b64: string;
  left_option: "A" | "B";
  right_option: "A" | "B";
  bbox: Box | null;
  lease_seconds: number;
}

export interface LabelResult {
  sample_id: string;
  label_area: number;
  perfect_fill: boolean;
  n_revisions: number;
  review_status: string;
}

export interface SegmentResult {
  sample_id: string;
  model_id: string;
  mask_png_b64: string;
  overlay_png_b64: string;
  artifact_area: number;
  par: number | null;
  cached: boolean;
}

export interface RefillResult {
  sample_id: string;
  noop: boolean;
  par: number;
  reason?: string;
  refilled_area?: number;
  fill_png_b64?: string;
  artifact_png_b64?: string;
  fill_revision?: string;
}

export interface VoteState {
  pair_id: string;
  votes_a: number;
  votes_b: number;
  closed: boolean;
  strong: "A" | "B" | "none" | null;
}

export interface TraceState {
  sample_id: string;
  steps: { fill: string; artifact_mask: string; par: number }[];
  pars: number[];
}
