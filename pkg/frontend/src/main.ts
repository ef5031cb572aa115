/** Browser entry point: picks a view from the location hash.
 *
 *   #label?annotator=a1        labeling workflow
 *   #review?sample=s00012      review-and-refill steering
 *   #vote?voter=v1             A/B preference voting
 */
import { ApiClient } from "./api.js";
import { canvasPngCodec, mountLabelingView, mountReviewView, mountVotingView } from "./dom.js";
import { LabelingSession } from "./labeling.js";
import { ReviewRefillSession } from "./review.js";
import { VotingSession } from "./voting.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const api = new ApiClient("");
  const [view, queryPart] = window.location.hash.replace(/^#/, "").split("?");
  const params = new URLSearchParams(queryPart ?? "");

  if (view === "review") {
    const sampleId = params.get("sample");
    if (!sampleId) {
      root.textContent = "review view needs #review?sample=<id>";
      return;
    }
    const session = new ReviewRefillSession(api, sampleId, canvasPngCodec);
    await mountReviewView(root, session);
    return;
  }
  if (view === "vote") {
    const session = new VotingSession(api, params.get("voter") ?? "anonymous");
    await session.load();
    await mountVotingView(root, session);
    return;
  }
  const session = new LabelingSession(api, params.get("annotator") ?? "anonymous",
    canvasPngCodec);
  await session.load();
  await mountLabelingView(root, session);
}

window.addEventListener("hashchange", () => void boot());
void boot();
