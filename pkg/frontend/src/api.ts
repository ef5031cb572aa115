/** Typed client for the /v1 annotation service.
 *
 * Every request is appended to `log`, which the tests use to assert the
 * labeling and voting views never pull hole-mask bytes.
 */
import type {
  LabelResult,
  LabelTask,
  RefillResult,
  SegmentResult,
  TraceState,
  VoteState,
  VoteTask,
} from "./types.js";

export interface RequestLogEntry {
  method: string;
  path: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly log: RequestLogEntry[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T | null> {
    this.log.push({ method, path });
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (res.status === 204) {
      return null;
    }
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const parsed = (await res.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  nextLabelTask(annotatorId: string): Promise<LabelTask | null> {
    return this.request<LabelTask>(
      "GET",
      `/v1/tasks/label?annotator_id=${encodeURIComponent(annotatorId)}`,
    );
  }

  nextVoteTask(voterId: string): Promise<VoteTask | null> {
    return this.request<VoteTask>(
      "GET",
      `/v1/tasks/vote?annotator_id=${encodeURIComponent(voterId)}`,
    );
  }

  async submitLabel(
    sampleId: string,
    rawLabelPngB64: string,
    annotatorId: string,
  ): Promise<LabelResult> {
    const res = await this.request<LabelResult>("POST", "/v1/labels", {
      sample_id: sampleId,
      raw_label_png_b64: rawLabelPngB64,
      annotator_id: annotatorId,
    });
    return res as LabelResult;
  }

  async requestSegment(sampleId: string, modelId = "default"): Promise<SegmentResult> {
    const res = await this.request<SegmentResult>("POST", "/v1/segment", {
      sample_id: sampleId,
      model_id: modelId,
    });
    return res as SegmentResult;
  }

  async requestRefill(
    sampleId: string,
    overridePngB64?: string,
    backendId = "default",
  ): Promise<RefillResult> {
    const body: Record<string, unknown> = { sample_id: sampleId, backend_id: backendId };
    if (overridePngB64 !== undefined) {
      body.mask_override_png_b64 = overridePngB64;
    }
    const res = await this.request<RefillResult>("POST", "/v1/refill", body);
    return res as RefillResult;
  }

  async recordVote(pairId: string, chosen: "A" | "B", voterId: string): Promise<VoteState> {
    const res = await this.request<VoteState>("POST", "/v1/votes", {
      pair_id: pairId,
      chosen,
      voter_id: voterId,
    });
    return res as VoteState;
  }

  async getTrace(sampleId: string): Promise<TraceState> {
    const res = await this.request<TraceState>("GET", `/v1/traces/${sampleId}`);
    return res as TraceState;
  }
}
