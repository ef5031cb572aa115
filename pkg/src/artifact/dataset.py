"""Sample storage, splits, statistics, and synthetic data generation.

A sample couples an image with its inpainting hole, optionally a filled
result, and optionally a per-pixel artifact label. An *empty* label is
not a missing label: it records a fill judged perfect, and those samples
matter for training, so they survive serialization as explicit files.

On-disk layout: ``<root>/<id>/{image.png, hole.png, fill.png?, label.png?, meta.json}``.
"""
from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from . import masks
from .imaging import as_image, load_image, save_image
from .masks import (
    area,
    as_mask,
    canonicalize_label,
    intersect,
    load_mask,
    sample_background_hole,
    save_mask,
)

REVIEW_STATUSES = ("unreviewed", "cross_checked", "expert_approved")


@dataclasses.dataclass
class Sample:
    id: str
    image: np.ndarray
    hole: np.ndarray
    fill: np.ndarray | None = None
    label: np.ndarray | None = None
    review_status: str = "unreviewed"
    revisions: list[str] = dataclasses.field(default_factory=list)
    provenance: dict = dataclasses.field(default_factory=dict)

    def validate(self) -> None:
        as_image(self.image)
        as_mask(self.hole)
        if self.hole.shape != self.image.shape[:2]:
            raise ValueError(
                f"sample {self.id}: hole shape {self.hole.shape} != image {self.image.shape[:2]}"
            )
        if self.fill is not None and self.fill.shape != self.image.shape:
            raise ValueError(f"sample {self.id}: fill and image shapes differ")
        if self.label is not None:
            if self.label.shape != self.hole.shape:
                raise ValueError(f"sample {self.id}: label and hole shapes differ")
            if (as_mask(self.label) & ~self.hole).any():
                raise ValueError(f"sample {self.id}: label leaks outside the hole")
        if self.review_status not in REVIEW_STATUSES:
            raise ValueError(f"sample {self.id}: bad review_status {self.review_status!r}")

    def same_as(self, other: "Sample") -> bool:
        """Field-for-field equality with bit-exact rasters."""
        if self.id != other.id or self.review_status != other.review_status:
            return False
        if self.revisions != other.revisions or self.provenance != other.provenance:
            return False
        if not np.array_equal(self.image, other.image):
            return False
        if not np.array_equal(self.hole, other.hole):
            return False
        for a, b in ((self.fill, other.fill), (self.label, other.label)):
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return True

    @property
    def training_input(self) -> np.ndarray:
        """Image the segmenter should look at: the fill when present."""
        return self.fill if self.fill is not None else self.image


def persist_sample(sample: Sample, root) -> Path:
    """Write a sample to ``<root>/<id>/``; returns the sample directory."""
    sample.validate()
    d = Path(root) / sample.id
    d.mkdir(parents=True, exist_ok=True)
    save_image(d / "image.png", sample.image)
    save_mask(d / "hole.png", sample.hole)
    if sample.fill is not None:
        save_image(d / "fill.png", sample.fill)
    if sample.label is not None:
        save_mask(d / "label.png", sample.label)
    meta = {
        "id": sample.id,
        "review_status": sample.review_status,
        "revisions": sample.revisions,
        "provenance": sample.provenance,
    }
    with open(d / "meta.json", "w") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")
    return d


def load_sample(root, sample_id: str) -> Sample:
    d = Path(root) / sample_id
    if not d.is_dir():
        raise FileNotFoundError(f"no sample directory {d}")
    for required in ("image.png", "hole.png", "meta.json"):
        if not (d / required).exists():
            raise FileNotFoundError(f"sample {sample_id}: missing {required}")
    with open(d / "meta.json") as f:
        meta = json.load(f)
    sample = Sample(
        id=meta["id"],
        image=load_image(d / "image.png"),
        hole=load_mask(d / "hole.png"),
        fill=load_image(d / "fill.png") if (d / "fill.png").exists() else None,
        label=load_mask(d / "label.png") if (d / "label.png").exists() else None,
        review_status=meta.get("review_status", "unreviewed"),
        revisions=list(meta.get("revisions", [])),
        provenance=dict(meta.get("provenance", {})),
    )
    sample.validate()
    return sample


def list_sample_ids(root) -> list[str]:
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"no dataset directory {root}")
    return sorted(p.name for p in root.iterdir() if (p / "meta.json").exists())


@dataclasses.dataclass(frozen=True)
class SplitSpec:
    train_ids: list[str]
    val_ids: list[str]
    test_ids: list[str]
    seed: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def split_811(ids, seed: int) -> SplitSpec:
    """Random 8:1:1 split: floor(0.8n) train, ceil(0.1n) val, rest test."""
    ids = list(ids)
    n = len(ids)
    if n < 3:
        raise ValueError(f"need at least 3 ids to split, got {n}")
    if len(set(ids)) != n:
        raise ValueError("duplicate ids in split input")
    n_train = math.floor(0.8 * n)
    n_val = math.ceil(0.1 * n)
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [ids[i] for i in order]
    return SplitSpec(
        train_ids=shuffled[:n_train],
        val_ids=shuffled[n_train : n_train + n_val],
        test_ids=shuffled[n_train + n_val :],
        seed=seed,
    )


def save_split(path, split: SplitSpec) -> None:
    with open(path, "w") as f:
        json.dump(split.to_dict(), f, indent=2)
        f.write("\n")


def load_split(path) -> SplitSpec:
    with open(path) as f:
        d = json.load(f)
    return SplitSpec(
        train_ids=list(d["train_ids"]),
        val_ids=list(d["val_ids"]),
        test_ids=list(d["test_ids"]),
        seed=int(d["seed"]),
    )


def dataset_stats(samples) -> dict:
    """Counts and the mean label/hole area ratio over labeled samples.

    Samples with an empty hole or with no label at all are excluded from
    the totals and reported separately. The mean ratio is None when no
    sample has a non-empty label.
    """
    n_total = 0
    n_perfect = 0
    n_empty_hole = 0
    n_unlabeled = 0
    ratios = []
    for s in samples:
        if not s.hole.any():
            n_empty_hole += 1
            continue
        if s.label is None:
            n_unlabeled += 1
            continue
        n_total += 1
        label_area = area(s.label)
        if label_area == 0:
            n_perfect += 1
        else:
            ratios.append(label_area / area(s.hole))
    return {
        "n_total": n_total,
        "n_perfect": n_perfect,
        "mean_label_hole_ratio": float(np.mean(ratios)) if ratios else None,
        "n_excluded_empty_hole": n_empty_hole,
        "n_unlabeled": n_unlabeled,
    }


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

DEFAULT_ARTIFACT_KINDS = ("blob", "line_break", "checker")


def _smooth_field(rng: np.random.Generator, frame: tuple[int, int],
                  slope_range: tuple[float, float] = (80, 170),
                  distractors: bool = True) -> np.ndarray:
    """Smooth RGB field with visible gradient everywhere: a linear ramp in
    a random direction plus gentle wide hills. Nothing in the natural
    field is flat, so flat patches read as foreign. With `distractors`,
    a few small soft bumps are mixed in: borderline content that keeps a
    clean image from being trivially clean."""
    h, w = frame
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    field = np.empty((h, w, 3))
    theta = rng.uniform(0, 2 * np.pi)
    direction = (np.cos(theta) * xx / w + np.sin(theta) * yy / h)
    base = rng.uniform(70, 185, size=3)
    slope = rng.uniform(*slope_range) * rng.choice([-1.0, 1.0])
    for c in range(3):
        field[:, :, c] = base[c] + slope * direction * rng.uniform(0.6, 1.0)
    for _ in range(int(rng.integers(2, 5))):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        sigma = rng.uniform(min(h, w) / 6, min(h, w) / 3)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
        color = rng.uniform(-35, 35, size=3)
        field += bump[:, :, None] * color[None, None, :]
    if distractors:
        for _ in range(int(rng.integers(3, 9))):
            cy, cx = rng.uniform(0, h), rng.uniform(0, w)
            sigma = rng.uniform(2.5, 6.0)
            bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
            color = rng.uniform(-1.0, 1.0, size=3)
            color *= rng.uniform(25, 55) / max(np.abs(color).max(), 1e-6)
            field += bump[:, :, None] * color[None, None, :]
    return np.clip(field, 10, 245)


def _draw_line(img: np.ndarray, line_mask: np.ndarray, rng: np.random.Generator,
               color: np.ndarray, thickness: int) -> None:
    """Random straight line across the frame, painted into img and line_mask."""
    h, w = line_mask.shape
    if rng.random() < 0.5:
        x0, x1 = 0, w - 1
        y0, y1 = rng.uniform(0, h - 1), rng.uniform(0, h - 1)
    else:
        y0, y1 = 0, h - 1
        x0, x1 = rng.uniform(0, w - 1), rng.uniform(0, w - 1)
    n = int(np.hypot(y1 - y0, x1 - x0)) * 2 + 1
    ts = np.linspace(0, 1, n)
    ys = np.clip(np.rint(y0 + (y1 - y0) * ts).astype(int), 0, h - 1)
    xs = np.clip(np.rint(x0 + (x1 - x0) * ts).astype(int), 0, w - 1)
    seg = np.zeros_like(line_mask)
    seg[ys, xs] = True
    if thickness > 1:
        seg = masks.dilate(seg, masks.square_kernel(min(thickness | 1, 3)), iterations=1)
    img[seg] = color
    line_mask |= seg


def _synth_base_image(
    rng: np.random.Generator,
    frame: tuple[int, int],
    noise_sigma: float,
    slope_range: tuple[float, float] = (80, 170),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Procedural scene: smooth color field + a few lines (+ mild noise).

    Returns (image, background-without-lines, line mask).
    """
    field = _smooth_field(rng, frame, slope_range=slope_range)
    background = field.copy()
    img = field.copy()
    line_mask = np.zeros(frame, dtype=bool)
    for _ in range(int(rng.integers(2, 5))):
        color = rng.uniform(0, 255, size=3)
        _draw_line(img, line_mask, rng, color, thickness=int(rng.integers(1, 4)))
    if noise_sigma > 0:
        noise = rng.normal(0, noise_sigma, size=img.shape)
        img = img + noise
        background = background + noise
    img = np.clip(img, 0, 254).astype(np.uint8)  # 254 cap keeps the oracle flag color unique
    background = np.clip(background, 0, 254).astype(np.uint8)
    return img, background, line_mask


def _shape_pixels_disk(rng, hole, radius_range):
    """Candidate disk inside the hole; returns (mask, center)."""
    ys, xs = np.nonzero(hole)
    i = int(rng.integers(ys.size))
    cy, cx = float(ys[i]), float(xs[i])
    r = int(rng.integers(radius_range[0], radius_range[1] + 1))
    shape = np.zeros_like(hole)
    masks._stamp_disk(shape, cy, cx, r)
    return shape & hole, (cy, cx)


def _trim_to_count(shape: np.ndarray, center: tuple[float, float], excess: int) -> np.ndarray:
    """Drop the `excess` pixels of `shape` farthest from its center."""
    if excess <= 0:
        return shape
    ys, xs = np.nonzero(shape)
    d = (ys - center[0]) ** 2 + (xs - center[1]) ** 2
    keep = np.argsort(d, kind="stable")[: ys.size - excess]
    out = np.zeros_like(shape)
    out[ys[keep], xs[keep]] = True
    return out


def _offset_color(rng, local, lo=30, hi=80):
    """Color at a guaranteed per-channel distance from `local`."""
    signs = rng.choice([-1.0, 1.0], size=3)
    return np.clip(local + signs * rng.uniform(lo, hi, size=3), 0, 254)


def _paint_blob(fill, shape, rng, background):
    ys, xs = np.nonzero(shape)
    local = background[ys, xs].mean(axis=0)
    if rng.random() < 0.5:
        color = _offset_color(rng, local, 60, 160)  # strongly mismatched
    else:
        color = _offset_color(rng, local, 45, 100)  # subtler off-color patch
    fill[shape] = color.astype(np.uint8)


def _paint_checker(fill, shape, rng):
    c0 = rng.integers(0, 120, size=3).astype(np.uint8)
    c1 = rng.integers(135, 255, size=3).astype(np.uint8)
    ys, xs = np.nonzero(shape)
    parity = ((ys // 2) + (xs // 2)) % 2
    fill[ys, xs] = np.where(parity[:, None] == 0, c0[None, :], c1[None, :])


def _paint_line_break(fill, shape, rng, background):
    # interrupt the structure: the gap region is the line-free background
    # tinted off-color, so every labeled pixel is visibly wrong
    ys, xs = np.nonzero(shape)
    local = background[ys, xs].mean(axis=0)
    tint = _offset_color(rng, local, 55, 130)
    blended = 0.3 * background[shape].astype(np.float64) + 0.7 * tint[None, :]
    fill[shape] = np.clip(blended, 0, 254).astype(np.uint8)


def _paint_smear(fill, shape, rng):
    # flat patch at the color of the shape's own rim: the look of an
    # unconverged boundary-propagation fill sitting in a gradient
    ring = masks.dilate(shape, masks.square_kernel(3), 1) & ~shape
    source = ring if ring.any() else shape
    mean = fill[source].mean(axis=0)
    jitter = rng.uniform(-20, 20, size=3) if rng.random() < 0.5 else np.zeros(3)
    fill[shape] = np.clip(mean + jitter, 0, 254).astype(np.uint8)


def synth_generate(
    rng_seed: int,
    n: int,
    frame: tuple[int, int] = (128, 128),
    artifact_kinds=DEFAULT_ARTIFACT_KINDS,
    perfect_fraction: float = 0.17,
    label_ratio: float = 0.3,
    hole_ratio_range: tuple[float, float] = (0.08, 0.3),
    noise_sigma: float = 3.0,
) -> list[Sample]:
    """Generate `n` labeled samples with known-by-construction artifact masks.

    Each sample gets a procedural image, a sampled freeform hole, and a
    fill. A `perfect_fraction` share keeps the fill identical to the
    image (empty label); the rest have artifact patterns injected inside
    the hole, sized so label area is `label_ratio` of the hole area, and
    the label is exactly the set of injected pixels. Fixed seed, fixed
    arguments: identical output.
    """
    if n <= 0:
        raise ValueError("n must be > 0")
    if not (0.0 <= perfect_fraction <= 1.0):
        raise ValueError("perfect_fraction must be in [0, 1]")
    if not (0.0 < label_ratio < 1.0):
        raise ValueError("label_ratio must be in (0, 1)")
    kinds = tuple(artifact_kinds)
    unknown = set(kinds) - {"blob", "line_break", "checker", "smear"}
    if unknown:
        raise ValueError(f"unknown artifact kinds: {sorted(unknown)}")
    if not kinds:
        raise ValueError("need at least one artifact kind")

    rng = np.random.default_rng(rng_seed)
    n_perfect = int(round(n * perfect_fraction))
    perfect_idx = set(rng.permutation(n)[:n_perfect].tolist())
    radius_lo = max(min(frame) // 24, 2)
    radius_hi = max(min(frame) // 8, radius_lo + 1)

    samples = []
    for i in range(n):
        img, background, line_mask = _synth_base_image(rng, frame, noise_sigma)
        hole = sample_background_hole(
            int(rng.integers(2**31)), frame, hole_ratio_range
        )
        fill = img.copy()
        if i in perfect_idx:
            label = np.zeros(frame, dtype=bool)
        else:
            target = max(int(round(label_ratio * int(hole.sum()))), 1)
            label = np.zeros(frame, dtype=bool)
            remaining = target
            guard = 0
            while remaining > 0 and guard < 64:
                guard += 1
                kind = kinds[int(rng.integers(len(kinds)))]
                if kind == "line_break" and not (line_mask & hole & ~label).any():
                    kind = "blob"
                if kind == "smear":
                    # smears read best at size: give them room to be flat
                    radii = (max(radius_lo, min(frame) // 12), max(min(frame) // 5, radius_hi))
                else:
                    radii = (radius_lo, radius_hi)
                if kind == "line_break":
                    lys, lxs = np.nonzero(line_mask & hole & ~label)
                    j = int(rng.integers(lys.size))
                    cy, cx = float(lys[j]), float(lxs[j])
                    shape = np.zeros(frame, dtype=bool)
                    masks._stamp_disk(shape, cy, cx, int(rng.integers(radii[0], radii[1] + 1)))
                    shape &= hole
                    center = (cy, cx)
                else:
                    shape, center = _shape_pixels_disk(rng, hole, radii)
                shape &= ~label
                count = int(shape.sum())
                if count == 0:
                    continue
                shape = _trim_to_count(shape, center, count - remaining)
                if kind == "blob":
                    _paint_blob(fill, shape, rng, background)
                elif kind == "checker":
                    _paint_checker(fill, shape, rng)
                elif kind == "smear":
                    _paint_smear(fill, shape, rng)
                else:
                    _paint_line_break(fill, shape, rng, background)
                label |= shape
                remaining = target - int(label.sum())

        samples.append(
            Sample(
                id=f"s{i:05d}",
                image=img,
                hole=hole,
                fill=fill,
                label=label,
                review_status="unreviewed",
                provenance={"source": "synthetic", "seed": int(rng_seed), "index": i},
            )
        )
    return samples


def synth_generate_fills(
    rng_seed: int,
    n: int,
    frame: tuple[int, int] = (128, 128),
    fill_iters_range: tuple[int, int] = (30, 120),
    mismatch_threshold: int = 25,
    min_label_ratio: float = 0.02,
    hole_ratio_range: tuple[float, float] = (0.08, 0.3),
    noise_sigma: float = 3.0,
    slope_range: tuple[float, float] = (130, 240),
) -> list[Sample]:
    """Samples whose fills come from the toy diffusion filler itself.

    The label is the cleaned reference-mismatch footprint: pixels whose
    filled color is off by more than `mismatch_threshold` from the true
    image, opened once to drop speckle and clipped to the hole. Labels
    below `min_label_ratio` of the hole count as perfect fills (empty
    label). This is the generator analog of collecting artifact labels
    on real inpainter outputs, with the truth standing in for the
    annotator. Steeper default gradients than the pattern generator:
    underconvergence is most visible against a strong ramp.
    """
    from scipy import ndimage

    from .inpaint import toy_diffusion_fill

    if n <= 0:
        raise ValueError("n must be > 0")
    a, b = fill_iters_range
    if a < 0 or b < a:
        raise ValueError(f"bad fill_iters_range {fill_iters_range}")

    rng = np.random.default_rng(rng_seed)
    samples = []
    for i in range(n):
        img, _, _ = _synth_base_image(rng, frame, noise_sigma, slope_range=slope_range)
        hole = sample_background_hole(int(rng.integers(2**31)), frame, hole_ratio_range)
        iters = int(rng.integers(a, b + 1))
        fill = toy_diffusion_fill(img, hole, iters=iters)
        mismatch = np.abs(fill.astype(np.int16) - img.astype(np.int16)).max(axis=2)
        label = (mismatch > mismatch_threshold) & hole
        label = ndimage.binary_opening(label, np.ones((3, 3), bool))
        label = ndimage.binary_closing(label, np.ones((3, 3), bool)) & hole
        if label.sum() < min_label_ratio * hole.sum():
            label = np.zeros(frame, dtype=bool)
        samples.append(
            Sample(
                id=f"d{i:05d}",
                image=img,
                hole=hole,
                fill=fill,
                label=label,
                review_status="unreviewed",
                provenance={"source": "synthetic_diffusion_fill", "seed": int(rng_seed),
                            "index": i, "fill_iters": iters},
            )
        )
    return samples


def pseudo_labels(model, samples, dilation_iters_range: tuple[int, int] = (1, 5),
                  rng_seed: int = 0) -> list[Sample]:
    """Predicted artifact masks, randomly grown, as pretraining labels.

    For each input sample the model prediction on its fill (or image) is
    dilated with a 5x5 kernel a uniform-random number of iterations from
    the given range, then clipped to the hole. The result always covers
    the in-hole prediction itself.
    """
    a, b = dilation_iters_range
    if a < 0 or b < a:
        raise ValueError(f"bad dilation range {dilation_iters_range}")
    rng = np.random.default_rng(rng_seed)
    out = []
    for s in samples:
        pred = model.predict(s.training_input)
        u = int(rng.integers(a, b + 1))
        grown = masks.dilate(pred, masks.square_kernel(5), iterations=u)
        label = intersect(grown, s.hole)
        out.append(
            Sample(
                id=s.id,
                image=s.image,
                hole=s.hole,
                fill=s.fill,
                label=label,
                review_status="unreviewed",
                provenance={**s.provenance, "pseudo_label_dilation": u},
            )
        )
    return out
