"""Iterative refill of detected artifact regions, and the onion-peel baseline.

Step one fills the whole hole. Every later step refills only a region
inside the original hole: the segmenter's artifact prediction for the
iterative loop, a progressively eroded hole for the onion baseline.
Compositing guarantees pixels outside the original hole never change.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .imaging import as_image, load_image, save_image
from .inpaint import InpaintBackendError, Inpainter
from .masks import area, as_mask, erode, intersect, load_mask, save_mask, square_kernel


@dataclasses.dataclass
class FillStep:
    fill: np.ndarray
    artifact_mask: np.ndarray
    par: float


@dataclasses.dataclass
class IterFillTrace:
    original_hole: np.ndarray
    steps: list[FillStep]
    terminated_by: str  # "max_iters" | "empty_artifacts"

    @property
    def pars(self) -> list[float]:
        return [s.par for s in self.steps]

    @property
    def final_fill(self) -> np.ndarray:
        return self.steps[-1].fill


def iterative_fill(image: np.ndarray, hole: np.ndarray, inpainter: Inpainter,
                   segmenter, max_iters: int = 5) -> IterFillTrace:
    """Fill, localize artifacts, refill just those, repeat.

    Each step's refill hole is the previous step's predicted artifact
    region clipped to the original hole, so the refill region only ever
    shrinks relative to the first fill. Stops early once no artifacts
    are detected (refilling an empty hole is the identity anyway).
    """
    image = as_image(image)
    hole = as_mask(hole)
    if not hole.any():
        raise ValueError("hole mask is empty")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    hole_area = area(hole)
    current_img = image
    current_hole = hole
    steps: list[FillStep] = []
    terminated = "max_iters"
    for k in range(1, max_iters + 1):
        try:
            filled = inpainter.fill(current_img, current_hole)
        except InpaintBackendError as e:
            raise InpaintBackendError(f"fill failed at step {k}: {e}", stderr=e.stderr) from e
        artifacts = intersect(segmenter.predict(filled, hole), hole)
        steps.append(FillStep(fill=filled, artifact_mask=artifacts,
                              par=area(artifacts) / hole_area))
        if not artifacts.any():
            terminated = "empty_artifacts"
            break
        current_img = filled
        current_hole = artifacts
    return IterFillTrace(original_hole=hole, steps=steps, terminated_by=terminated)


def onion_fill(image: np.ndarray, hole: np.ndarray, inpainter: Inpainter,
               n_steps: int = 5, erode_iters_per_step: int = 3) -> IterFillTrace:
    """Heuristic baseline: refill progressively eroded holes, onion-peel style.

    Step k refills the hole eroded (k-1)*erode_iters_per_step times with
    a 5x5 kernel, keeping the outer rings from earlier steps. The
    recorded artifact mask of a step is the next (more eroded) refill
    region; the trace ends early once that erodes away.
    """
    image = as_image(image)
    hole = as_mask(hole)
    if not hole.any():
        raise ValueError("hole mask is empty")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if erode_iters_per_step < 1:
        raise ValueError("erode_iters_per_step must be >= 1")

    kernel = square_kernel(5)
    hole_area = area(hole)
    current_img = image
    steps: list[FillStep] = []
    terminated = "max_iters"
    for k in range(1, n_steps + 1):
        refill = hole if k == 1 else erode(hole, kernel, (k - 1) * erode_iters_per_step)
        try:
            filled = inpainter.fill(current_img, refill)
        except InpaintBackendError as e:
            raise InpaintBackendError(f"fill failed at step {k}: {e}", stderr=e.stderr) from e
        remaining = erode(hole, kernel, k * erode_iters_per_step)
        steps.append(FillStep(fill=filled, artifact_mask=remaining,
                              par=area(remaining) / hole_area))
        if not remaining.any():
            terminated = "empty_artifacts"
            break
        current_img = filled
    return IterFillTrace(original_hole=hole, steps=steps, terminated_by=terminated)


def par_curve(traces, max_iters: int) -> list[float]:
    """Mean PAR per iteration over a set of traces.

    Traces that stopped early keep contributing their final PAR (zero
    when the artifacts vanished), so the mean is defined at every
    iteration up to max_iters.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces given")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    curve = []
    for k in range(max_iters):
        vals = [t.pars[min(k, len(t.steps) - 1)] for t in traces]
        curve.append(float(np.mean(vals)))
    return curve


def save_trace(trace: IterFillTrace, out_dir) -> Path:
    """Persist a trace as step PNGs plus a trace.json manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_mask(out_dir / "hole.png", trace.original_hole)
    manifest = {"original_hole": "hole.png", "terminated_by": trace.terminated_by, "steps": []}
    for i, step in enumerate(trace.steps, start=1):
        fill_name = f"step_{i:02d}_fill.png"
        mask_name = f"step_{i:02d}_artifact.png"
        save_image(out_dir / fill_name, step.fill)
        save_mask(out_dir / mask_name, step.artifact_mask)
        manifest["steps"].append(
            {"fill": fill_name, "artifact_mask": mask_name, "par": step.par}
        )
    with open(out_dir / "trace.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return out_dir


def load_trace(trace_dir) -> IterFillTrace:
    trace_dir = Path(trace_dir)
    with open(trace_dir / "trace.json") as f:
        manifest = json.load(f)
    steps = [
        FillStep(
            fill=load_image(trace_dir / s["fill"]),
            artifact_mask=load_mask(trace_dir / s["artifact_mask"]),
            par=float(s["par"]),
        )
        for s in manifest["steps"]
    ]
    return IterFillTrace(
        original_hole=load_mask(trace_dir / manifest["original_hole"]),
        steps=steps,
        terminated_by=manifest["terminated_by"],
    )
