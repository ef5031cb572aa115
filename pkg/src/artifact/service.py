"""Annotation/review HTTP service.

JSON-over-HTTP under /v1: task queues with leases, label submission,
on-demand segmentation with caching, steered refills, and five-voter
preference records. Masks and images travel as base64 PNG.

Labeling tasks deliberately never contain the hole mask; annotators see
the fill, an untouched duplicate, and a dilated bounding box only, so
their judgment is not biased toward the hole boundary. Vote tasks
randomize the left/right order per serving and record the order.
"""
from __future__ import annotations

import base64
import dataclasses
import hashlib
import json
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .dataset import Sample, load_sample, list_sample_ids, persist_sample
from .evaluation import par, strong_preference
from .imaging import image_from_png_bytes, image_to_png_bytes
from .inpaint import InpaintBackendError, Inpainter, OracleInpainter
from .masks import (
    as_mask,
    canonicalize_label,
    display_bbox,
    intersect,
    mask_from_png_bytes,
    mask_to_png_bytes,
)

DEFAULT_LEASE_SECONDS = 30 * 60
BBOX_MARGIN = 16
ARTIFACT_BOUNDARY_PINK = (255, 105, 180)
BBOX_BLUE = (40, 90, 255)


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(data: str) -> bytes:
    return base64.b64decode(data.encode("ascii"))


def render_overlay(fill: np.ndarray, artifact_mask: np.ndarray | None, bbox) -> np.ndarray:
    """Fill image with the artifact boundary in pink and the bbox in blue."""
    out = fill.copy()
    if artifact_mask is not None and artifact_mask.any():
        from scipy import ndimage

        inner = ndimage.binary_erosion(artifact_mask, np.ones((3, 3), bool), border_value=0)
        out[artifact_mask & ~inner] = ARTIFACT_BOUNDARY_PINK
    if bbox is not None:
        out[bbox.y0, bbox.x0 : bbox.x1 + 1] = BBOX_BLUE
        out[bbox.y1, bbox.x0 : bbox.x1 + 1] = BBOX_BLUE
        out[bbox.y0 : bbox.y1 + 1, bbox.x0] = BBOX_BLUE
        out[bbox.y0 : bbox.y1 + 1, bbox.x1] = BBOX_BLUE
    return out


@dataclasses.dataclass
class _Lease:
    task_id: str
    annotator_id: str
    expires_at: float


class _LeaseBoard:
    """Per-queue task leases: no double assignment while a lease is live."""

    def __init__(self, lease_seconds: float):
        self.lease_seconds = lease_seconds
        self._leases: dict[str, dict[str, _Lease]] = {}
        self._lock = threading.Lock()

    def acquire(self, queue: str, annotator_id: str, candidates) -> str | None:
        now = time.time()
        with self._lock:
            board = self._leases.setdefault(queue, {})
            for lease in list(board.values()):
                if lease.expires_at <= now:
                    del board[lease.task_id]
            mine = [l for l in board.values() if l.annotator_id == annotator_id]
            if mine:
                # same task until released; re-requesting renews the lease
                mine[0].expires_at = now + self.lease_seconds
                return mine[0].task_id
            for task_id in candidates:
                if task_id not in board:
                    board[task_id] = _Lease(task_id, annotator_id,
                                            now + self.lease_seconds)
                    return task_id
        return None

    def held_by(self, queue: str, task_id: str) -> _Lease | None:
        now = time.time()
        with self._lock:
            lease = self._leases.get(queue, {}).get(task_id)
            if lease and lease.expires_at > now:
                return lease
            return None

    def release(self, queue: str, task_id: str) -> None:
        with self._lock:
            self._leases.get(queue, {}).pop(task_id, None)


class OracleBackendFactory:
    """Per-sample restore-probability oracle; RNG state advances across
    refills of the same sample so repeated steering keeps making progress."""

    def __init__(self, restore_fraction: float, seed: int = 0):
        self.restore_fraction = restore_fraction
        self.seed = seed
        self._cache: dict[str, OracleInpainter] = {}
        self._lock = threading.Lock()

    def for_sample(self, sample: Sample) -> Inpainter:
        with self._lock:
            inp = self._cache.get(sample.id)
            if inp is None:
                per_sample = int.from_bytes(
                    hashlib.sha256(f"{self.seed}:{sample.id}".encode()).digest()[:4], "big"
                )
                inp = OracleInpainter(sample.image, self.restore_fraction, per_sample)
                self._cache[sample.id] = inp
            return inp


class SharedBackendFactory:
    """Wraps a sample-independent inpainter (toy diffusion, external cmd)."""

    def __init__(self, inpainter: Inpainter):
        self.inpainter = inpainter

    def for_sample(self, sample: Sample) -> Inpainter:
        return self.inpainter


class ServiceState:
    """Disk-backed sample store plus registered models and fill backends."""

    def __init__(self, root, models: dict | None = None, backends: dict | None = None,
                 lease_seconds: float = DEFAULT_LEASE_SECONDS):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.models = models or {}
        self.backends = backends or {}
        self.leases = _LeaseBoard(lease_seconds)
        self._sample_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._votes_lock = threading.Lock()
        self._segment_cache: dict[tuple, dict] = {}
        self._votes_path = self.root / "_votes.json"
        self._pairs_dir = self.root / "_pairs"
        self.votes: dict[str, dict] = {}
        if self._votes_path.exists():
            with open(self._votes_path) as f:
                self.votes = json.load(f)

    # -- samples ------------------------------------------------------------

    def sample_lock(self, sample_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._sample_locks.setdefault(sample_id, threading.Lock())

    def sample_ids(self) -> list[str]:
        try:
            return [i for i in list_sample_ids(self.root) if not i.startswith("_")]
        except FileNotFoundError:
            return []

    def get_sample(self, sample_id: str) -> Sample:
        try:
            return load_sample(self.root, sample_id)
        except FileNotFoundError:
            raise HTTPException(status_code=404, detail=f"unknown sample {sample_id}")

    # -- pairs and votes ----------------------------------------------------

    def pair_ids(self) -> list[str]:
        if not self._pairs_dir.is_dir():
            return []
        return sorted(p.name for p in self._pairs_dir.iterdir() if (p / "a.png").exists())

    def save_pair(self, pair_id: str, image_a: bytes, image_b: bytes,
                  bbox: dict | None = None) -> None:
        d = self._pairs_dir / pair_id
        d.mkdir(parents=True, exist_ok=True)
        (d / "a.png").write_bytes(image_a)
        (d / "b.png").write_bytes(image_b)
        with open(d / "meta.json", "w") as f:
            json.dump({"pair_id": pair_id, "bbox": bbox}, f)

    def load_pair(self, pair_id: str) -> dict:
        d = self._pairs_dir / pair_id
        if not (d / "a.png").exists():
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id}")
        with open(d / "meta.json") as f:
            meta = json.load(f)
        return {
            "pair_id": pair_id,
            "image_a": (d / "a.png").read_bytes(),
            "image_b": (d / "b.png").read_bytes(),
            "bbox": meta.get("bbox"),
        }

    def vote_record(self, pair_id: str) -> dict:
        return self.votes.setdefault(
            pair_id,
            {"votes": {}, "votes_a": 0, "votes_b": 0, "strong": None,
             "closed": False, "served_order": {}},
        )

    def persist_votes(self) -> None:
        with open(self._votes_path, "w") as f:
            json.dump(self.votes, f, indent=2)


# -- request bodies ---------------------------------------------------------


class LabelSubmission(BaseModel):
    sample_id: str
    raw_label_png_b64: str
    annotator_id: str


class SegmentRequest(BaseModel):
    sample_id: str
    model_id: str = "default"


class RefillRequest(BaseModel):
    sample_id: str
    backend_id: str = "default"
    model_id: str = "default"
    mask_override_png_b64: str | None = None


class VoteSubmission(BaseModel):
    pair_id: str
    chosen: str  # "A" | "B"
    voter_id: str


class ReviewSubmission(BaseModel):
    sample_id: str
    reviewer_id: str
    approve: bool = True


class PairCreate(BaseModel):
    pair_id: str
    image_a_png_b64: str
    image_b_png_b64: str
    bbox: dict | None = None


def _sample_bbox(sample: Sample):
    if not sample.hole.any():
        return None
    return display_bbox(sample.hole, margin=BBOX_MARGIN)


def _archive(path: Path, stem: str) -> str:
    """Move an existing file aside as the next numbered revision file."""
    n = 0
    while (path.parent / f"{stem}_rev_{n:03d}.png").exists():
        n += 1
    target = path.parent / f"{stem}_rev_{n:03d}.png"
    path.rename(target)
    return target.name


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="inpainting artifact annotation service")

    # -- tasks ---------------------------------------------------------------

    @app.get("/v1/tasks/{queue}")
    def next_task(queue: str, annotator_id: str):
        if queue == "label":
            return _label_task(annotator_id)
        if queue == "review":
            return _review_task(annotator_id)
        if queue == "vote":
            return _vote_task(annotator_id)
        raise HTTPException(status_code=404, detail=f"unknown queue {queue!r}")

    def _label_task(annotator_id: str):
        candidates = []
        for sid in state.sample_ids():
            s = state.get_sample(sid)
            if s.fill is not None and s.label is None:
                candidates.append(sid)
        sid = state.leases.acquire("label", annotator_id, candidates)
        if sid is None:
            return Response(status_code=204)
        s = state.get_sample(sid)
        bbox = _sample_bbox(s)
        fill_png = image_to_png_bytes(s.fill)
        # hole mask intentionally absent from this payload
        return {
            "queue": "label",
            "sample_id": sid,
            "image_png_b64": _b64(fill_png),
            "reference_image_png_b64": _b64(fill_png),
            "bbox": bbox.to_dict() if bbox else None,
            "lease_seconds": state.leases.lease_seconds,
        }

    def _review_task(annotator_id: str):
        candidates = []
        for sid in state.sample_ids():
            s = state.get_sample(sid)
            if s.label is not None and s.review_status != "expert_approved":
                candidates.append(sid)
        sid = state.leases.acquire("review", annotator_id, candidates)
        if sid is None:
            return Response(status_code=204)
        s = state.get_sample(sid)
        bbox = _sample_bbox(s)
        fill = s.fill if s.fill is not None else s.image
        overlay = render_overlay(fill, s.label, bbox)
        return {
            "queue": "review",
            "sample_id": sid,
            "image_png_b64": _b64(image_to_png_bytes(fill)),
            "overlay_png_b64": _b64(image_to_png_bytes(overlay)),
            "label_png_b64": _b64(mask_to_png_bytes(s.label)),
            "review_status": s.review_status,
            "bbox": bbox.to_dict() if bbox else None,
            "lease_seconds": state.leases.lease_seconds,
        }

    def _vote_task(annotator_id: str):
        candidates = []
        for pid in state.pair_ids():
            rec = state.vote_record(pid)
            if not rec["closed"] and annotator_id not in rec["votes"]:
                candidates.append(pid)
        pid = state.leases.acquire("vote", annotator_id, candidates)
        if pid is None:
            return Response(status_code=204)
        pair = state.load_pair(pid)
        rec = state.vote_record(pid)
        order = rec["served_order"].get(annotator_id)
        if order is None:
            # fresh random order per serving, remembered for this voter
            order = "A" if np.random.default_rng().random() < 0.5 else "B"
            with state._votes_lock:
                rec["served_order"][annotator_id] = order
                state.persist_votes()
        left, right = (("A", "B") if order == "A" else ("B", "A"))
        images = {"A": pair["image_a"], "B": pair["image_b"]}
        return {
            "queue": "vote",
            "pair_id": pid,
            "left_png_b64": _b64(images[left]),
            "right_png_b64": _b64(images[right]),
            "left_option": left,
            "right_option": right,
            "bbox": pair["bbox"],
            "lease_seconds": state.leases.lease_seconds,
        }

    # -- labels ---------------------------------------------------------------

    @app.post("/v1/labels")
    def submit_label(sub: LabelSubmission):
        lease = state.leases.held_by("label", sub.sample_id)
        if lease is not None and lease.annotator_id != sub.annotator_id:
            raise HTTPException(status_code=409, detail="sample leased by another annotator")
        with state.sample_lock(sub.sample_id):
            s = state.get_sample(sub.sample_id)
            raw = mask_from_png_bytes(_unb64(sub.raw_label_png_b64))
            if raw.shape != s.hole.shape:
                raise HTTPException(
                    status_code=422,
                    detail=f"label shape {raw.shape} != sample {s.hole.shape}",
                )
            label = canonicalize_label(raw, s.hole)
            if (label & ~s.hole).any():  # server-side re-validation
                raise HTTPException(status_code=500, detail="canonicalization failed")
            label_path = state.root / s.id / "label.png"
            if s.label is not None and label_path.exists():
                s.revisions.append(_archive(label_path, "label"))
            s.label = label
            s.review_status = "unreviewed"
            s.provenance.setdefault("annotators", []).append(sub.annotator_id)
            persist_sample(s, state.root)
        state.leases.release("label", sub.sample_id)
        return {
            "sample_id": s.id,
            "label_area": int(label.sum()),
            "perfect_fill": not label.any(),
            "n_revisions": len(s.revisions),
            "review_status": s.review_status,
        }

    # -- segmentation ----------------------------------------------------------

    @app.post("/v1/segment")
    def request_segment(req: SegmentRequest):
        model = state.models.get(req.model_id)
        if model is None:
            raise HTTPException(status_code=404, detail=f"unknown model {req.model_id}")
        s = state.get_sample(req.sample_id)
        if s.fill is None:
            raise HTTPException(status_code=412, detail="sample has no fill to segment")
        fill_png = image_to_png_bytes(s.fill)
        key = (req.sample_id, req.model_id, hashlib.sha256(fill_png).hexdigest())
        cached = state._segment_cache.get(key)
        if cached is not None:
            return {**cached, "cached": True}
        pred = intersect(as_mask(model.predict(s.fill, s.hole)), s.hole)
        overlay = render_overlay(s.fill, pred, _sample_bbox(s))
        payload = {
            "sample_id": s.id,
            "model_id": req.model_id,
            "mask_png_b64": _b64(mask_to_png_bytes(pred)),
            "overlay_png_b64": _b64(image_to_png_bytes(overlay)),
            "artifact_area": int(pred.sum()),
            "par": par(pred, s.hole) if s.hole.any() else None,
        }
        state._segment_cache[key] = payload
        return {**payload, "cached": False}

    # -- refill -----------------------------------------------------------------

    @app.post("/v1/refill")
    def request_refill(req: RefillRequest):
        backend = state.backends.get(req.backend_id)
        if backend is None:
            raise HTTPException(status_code=404, detail=f"unknown backend {req.backend_id}")
        model = state.models.get(req.model_id)
        if model is None:
            raise HTTPException(status_code=404, detail=f"unknown model {req.model_id}")
        with state.sample_lock(req.sample_id):
            s = state.get_sample(req.sample_id)
            if s.fill is None:
                raise HTTPException(status_code=412, detail="sample has no fill to refine")
            if req.mask_override_png_b64 is not None:
                override = mask_from_png_bytes(_unb64(req.mask_override_png_b64))
                if override.shape != s.hole.shape:
                    raise HTTPException(status_code=422, detail="override shape mismatch")
                refill_hole = intersect(override, s.hole)
            else:
                refill_hole = intersect(as_mask(model.predict(s.fill, s.hole)), s.hole)
            if not refill_hole.any():
                return {
                    "sample_id": s.id, "noop": True,
                    "par": par(intersect(as_mask(model.predict(s.fill, s.hole)), s.hole),
                               s.hole),
                    "reason": "empty effective refill hole",
                }
            inp = backend.for_sample(s)
            try:
                new_fill = inp.fill(s.fill, refill_hole)
            except InpaintBackendError as e:
                raise HTTPException(
                    status_code=502,
                    detail=f"backend failed: {e}; stderr: {e.stderr[:500]}",
                )
            post_pred = intersect(as_mask(model.predict(new_fill, s.hole)), s.hole)
            post_par = par(post_pred, s.hole)

            fill_path = state.root / s.id / "fill.png"
            rev_name = _archive(fill_path, "fill")
            s.provenance.setdefault("fill_revisions", []).append(rev_name)
            s.fill = new_fill
            persist_sample(s, state.root)
            _append_trace_step(s, new_fill, post_pred, post_par)
        return {
            "sample_id": s.id,
            "noop": False,
            "par": post_par,
            "refilled_area": int(refill_hole.sum()),
            "fill_png_b64": _b64(image_to_png_bytes(new_fill)),
            "artifact_png_b64": _b64(mask_to_png_bytes(post_pred)),
            "fill_revision": rev_name,
        }

    def _append_trace_step(s: Sample, fill, artifact_mask, step_par: float):
        from .masks import save_mask
        from .imaging import save_image

        trace_dir = state.root / s.id / "trace"
        trace_dir.mkdir(exist_ok=True)
        manifest_path = trace_dir / "trace.json"
        if manifest_path.exists():
            with open(manifest_path) as f:
                manifest = json.load(f)
        else:
            save_mask(trace_dir / "hole.png", s.hole)
            manifest = {"original_hole": "hole.png", "steps": []}
        k = len(manifest["steps"]) + 1
        fill_name, mask_name = f"step_{k:02d}_fill.png", f"step_{k:02d}_artifact.png"
        save_image(trace_dir / fill_name, fill)
        save_mask(trace_dir / mask_name, artifact_mask)
        manifest["steps"].append({"fill": fill_name, "artifact_mask": mask_name,
                                  "par": step_par})
        with open(manifest_path, "w") as f:
            json.dump(manifest, f, indent=2)

    # -- votes ---------------------------------------------------------------

    @app.post("/v1/votes")
    def record_vote(sub: VoteSubmission):
        if sub.chosen not in ("A", "B"):
            raise HTTPException(status_code=422, detail="chosen must be 'A' or 'B'")
        if sub.pair_id not in state.pair_ids():
            raise HTTPException(status_code=404, detail=f"unknown pair {sub.pair_id}")
        with state._votes_lock:
            rec = state.vote_record(sub.pair_id)
            if rec["closed"]:
                raise HTTPException(status_code=409, detail="pair already has 5 votes")
            if sub.voter_id in rec["votes"]:
                raise HTTPException(status_code=409, detail="voter already voted on pair")
            rec["votes"][sub.voter_id] = sub.chosen
            rec["votes_a"] = sum(1 for v in rec["votes"].values() if v == "A")
            rec["votes_b"] = sum(1 for v in rec["votes"].values() if v == "B")
            if rec["votes_a"] + rec["votes_b"] == 5:
                rec["strong"] = strong_preference(rec["votes_a"], rec["votes_b"])
                rec["closed"] = True
            state.persist_votes()
        state.leases.release("vote", sub.pair_id)
        return {
            "pair_id": sub.pair_id,
            "votes_a": rec["votes_a"],
            "votes_b": rec["votes_b"],
            "closed": rec["closed"],
            "strong": rec["strong"],
        }

    @app.post("/v1/pairs")
    def create_pair(req: PairCreate):
        if req.pair_id in state.pair_ids():
            raise HTTPException(status_code=409, detail="pair exists")
        state.save_pair(req.pair_id, _unb64(req.image_a_png_b64),
                        _unb64(req.image_b_png_b64), req.bbox)
        return {"pair_id": req.pair_id}

    # -- review ----------------------------------------------------------------

    @app.post("/v1/reviews")
    def submit_review(sub: ReviewSubmission):
        with state.sample_lock(sub.sample_id):
            s = state.get_sample(sub.sample_id)
            if s.label is None:
                raise HTTPException(status_code=412, detail="nothing to review: no label")
            reviewers = s.provenance.setdefault("reviewers", [])
            if not sub.approve:
                s.review_status = "unreviewed"
                reviewers.clear()
            else:
                if s.review_status == "expert_approved":
                    raise HTTPException(status_code=409, detail="already expert approved")
                if sub.reviewer_id in reviewers:
                    raise HTTPException(
                        status_code=409, detail="each review round needs a distinct reviewer"
                    )
                reviewers.append(sub.reviewer_id)
                s.review_status = (
                    "cross_checked" if s.review_status == "unreviewed" else "expert_approved"
                )
            persist_sample(s, state.root)
        state.leases.release("review", sub.sample_id)
        return {"sample_id": s.id, "review_status": s.review_status}

    # -- reads -----------------------------------------------------------------

    @app.get("/v1/samples/{sample_id}")
    def get_sample(sample_id: str):
        s = state.get_sample(sample_id)
        bbox = _sample_bbox(s)
        return {
            "id": s.id,
            "review_status": s.review_status,
            "revisions": s.revisions,
            "provenance": s.provenance,
            "bbox": bbox.to_dict() if bbox else None,
            "image_png_b64": _b64(image_to_png_bytes(s.image)),
            "hole_png_b64": _b64(mask_to_png_bytes(s.hole)),
            "fill_png_b64": _b64(image_to_png_bytes(s.fill)) if s.fill is not None else None,
            "label_png_b64": _b64(mask_to_png_bytes(s.label)) if s.label is not None else None,
        }

    @app.get("/v1/traces/{sample_id}")
    def get_trace(sample_id: str):
        state.get_sample(sample_id)  # 404 on unknown sample
        manifest_path = state.root / sample_id / "trace" / "trace.json"
        if not manifest_path.exists():
            return {"sample_id": sample_id, "steps": [], "pars": []}
        with open(manifest_path) as f:
            manifest = json.load(f)
        return {
            "sample_id": sample_id,
            "steps": manifest["steps"],
            "pars": [st["par"] for st in manifest["steps"]],
        }

    app.state.service = state
    return app
