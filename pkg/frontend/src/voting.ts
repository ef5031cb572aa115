/** Two-alternative preference voting: randomized sides, single choice.
 *
 * Voters see two fills and a rough bounding box only; no original image
 * and no hole mask, so the judgment is purely perceptual. The server
 * randomizes which option lands on the left per serving; this session
 * translates the picked side back to the canonical option.
 */
import type { ApiClient } from "./api.js";
import type { VoteState, VoteTask } from "./types.js";

export type Side = "left" | "right";

export class VotingSession {
  pair: VoteTask | null = null;
  selection: Side | null = null;
  submitted = false;
  lastState: VoteState | null = null;
  private inFlight = false;

  constructor(
    private readonly api: ApiClient,
    private readonly voterId: string,
  ) {}

  async load(): Promise<boolean> {
    const pair = await this.api.nextVoteTask(this.voterId);
    this.pair = pair;
    this.selection = null;
    this.submitted = false;
    this.lastState = null;
    return pair !== null;
  }

  images(): { left: string; right: string } {
    if (!this.pair) throw new Error("no pair loaded");
    return { left: this.pair.left_png_b64, right: this.pair.right_png_b64 };
  }

  choose(side: Side): void {
    if (this.submitted) return;
    this.selection = side;
  }

  /** Keyboard affordance: arrows or 1/2 pick a side. */
  chooseByKey(key: string): boolean {
    const mapping: Record<string, Side> = {
      ArrowLeft: "left",
      ArrowRight: "right",
      "1": "left",
      "2": "right",
    };
    const side = mapping[key];
    if (!side) return false;
    this.choose(side);
    return true;
  }

  /** Exactly one vote per pair: repeat calls and double-clicks are no-ops. */
  async submit(): Promise<VoteState | null> {
    if (!this.pair || this.selection === null) return null;
    if (this.submitted || this.inFlight) return this.lastState;
    this.inFlight = true;
    try {
      const chosen =
        this.selection === "left" ? this.pair.left_option : this.pair.right_option;
      this.lastState = await this.api.recordVote(this.pair.pair_id, chosen, this.voterId);
      this.submitted = true;
      return this.lastState;
    } finally {
      this.inFlight = false;
    }
  }
}
