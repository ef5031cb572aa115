"""Binary mask primitives: morphology, sampling, canonicalization, file IO.

Masks are 2D numpy bool arrays (True = inside the region). Every other
module in the package trades in these arrays: inpainting holes, human
artifact labels, and predicted artifact regions are all plain masks.

Boundary convention for morphology: pixels outside the frame do not
exist (treated as 0), so dilation saturates at the frame and erosion
eats inward from the frame edges.
"""
from __future__ import annotations

import dataclasses

import numpy as np
from PIL import Image
from scipy import ndimage


class HolePlacementError(RuntimeError):
    """Raised when a hole satisfying the constraints cannot be placed."""


def square_kernel(side: int = 5) -> np.ndarray:
    """Square structuring element with an odd side length."""
    if side < 1 or side % 2 != 1:
        raise ValueError(f"kernel side must be odd and >= 1, got {side}")
    return np.ones((side, side), dtype=bool)


def as_mask(m: np.ndarray) -> np.ndarray:
    """Validate and coerce an array to a 2D bool mask."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"mask must be non-degenerate, got shape {m.shape}")
    if m.dtype != np.bool_:
        vals = np.unique(m)
        if not np.isin(vals, (0, 1)).all():
            raise ValueError(f"mask cells must be 0/1, found values {vals[:8]}")
        m = m.astype(bool)
    return m


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"mask shape mismatch: {a.shape} vs {b.shape}")


def dilate(m: np.ndarray, kernel: np.ndarray | None = None, iterations: int = 1) -> np.ndarray:
    """Morphological dilation; iterations=0 returns the mask unchanged."""
    m = as_mask(m)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0:
        return m.copy()
    kernel = square_kernel() if kernel is None else kernel
    return ndimage.binary_dilation(m, structure=kernel, iterations=iterations, border_value=0)


def erode(m: np.ndarray, kernel: np.ndarray | None = None, iterations: int = 1) -> np.ndarray:
    """Morphological erosion; may return an empty mask."""
    m = as_mask(m)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0:
        return m.copy()
    kernel = square_kernel() if kernel is None else kernel
    return ndimage.binary_erosion(m, structure=kernel, iterations=iterations, border_value=0)


def intersect(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pixelwise AND of two same-shaped masks."""
    a, b = as_mask(a), as_mask(b)
    _check_same_shape(a, b)
    return a & b


def area(m: np.ndarray) -> int:
    """Number of 1-pixels."""
    return int(as_mask(m).sum())


def canonicalize_label(raw_label: np.ndarray, hole: np.ndarray) -> np.ndarray:
    """Clip a brushed label to the hole; the result is always a subset of it.

    Brushes may legitimately cross the (hidden) hole boundary, so labels
    are intersected with the hole as a post-process. An all-empty result
    is meaningful: it records a perfect fill.
    """
    return intersect(raw_label, hole)


def object_removal_mask(instance: np.ndarray) -> np.ndarray:
    """Expand an object instance mask for removal: 3 dilations with a 5x5 kernel."""
    instance = as_mask(instance)
    if not instance.any():
        raise ValueError("instance mask is empty")
    return dilate(instance, square_kernel(5), iterations=3)


@dataclasses.dataclass(frozen=True)
class Box:
    """Inclusive pixel rectangle; x runs along columns, y along rows."""

    x0: int
    y0: int
    x1: int
    y1: int

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        return cls(int(d["x0"]), int(d["y0"]), int(d["x1"]), int(d["y1"]))


def display_bbox(hole: np.ndarray, margin: int = 0) -> Box:
    """Tight bounding box of the hole grown by `margin`, clipped to the frame."""
    hole = as_mask(hole)
    if margin < 0:
        raise ValueError("margin must be >= 0")
    ys, xs = np.nonzero(hole)
    if ys.size == 0:
        raise ValueError("hole mask is empty")
    h, w = hole.shape
    return Box(
        x0=max(int(xs.min()) - margin, 0),
        y0=max(int(ys.min()) - margin, 0),
        x1=min(int(xs.max()) + margin, w - 1),
        y1=min(int(ys.max()) + margin, h - 1),
    )


def _stamp_disk(mask: np.ndarray, cy: float, cx: float, radius: int) -> None:
    """Set a filled disk in-place, clipped to the frame."""
    h, w = mask.shape
    y0, y1 = max(int(cy - radius), 0), min(int(cy + radius) + 1, h)
    x0, x1 = max(int(cx - radius), 0), min(int(cx + radius) + 1, w)
    if y0 >= y1 or x0 >= x1:
        return
    yy, xx = np.ogrid[y0:y1, x0:x1]
    mask[y0:y1, x0:x1] |= (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2


def _random_stroke(
    rng: np.random.Generator,
    frame: tuple[int, int],
    radius_range: tuple[int, int],
    vertex_range: tuple[int, int],
) -> np.ndarray:
    """One thick free-form stroke: a random walk stamped with disks."""
    h, w = frame
    stroke = np.zeros(frame, dtype=bool)
    radius = int(rng.integers(radius_range[0], radius_range[1] + 1))
    n_verts = int(rng.integers(vertex_range[0], vertex_range[1] + 1))
    y = rng.uniform(0, h)
    x = rng.uniform(0, w)
    angle = rng.uniform(0, 2 * np.pi)
    _stamp_disk(stroke, y, x, radius)
    for _ in range(n_verts - 1):
        angle += rng.uniform(-np.pi / 2, np.pi / 2)
        step = rng.uniform(radius, 4 * radius)
        ny = np.clip(y + step * np.sin(angle), 0, h - 1)
        nx = np.clip(x + step * np.cos(angle), 0, w - 1)
        # stamp along the segment densely enough that the stroke is solid
        n_sub = max(int(np.hypot(ny - y, nx - x) / max(radius, 1) * 2), 1)
        for t in np.linspace(0, 1, n_sub + 1):
            _stamp_disk(stroke, y + (ny - y) * t, x + (nx - x) * t, radius)
        y, x = ny, nx
    return stroke


def sample_background_hole(
    rng_seed: int,
    frame: tuple[int, int],
    ratio_range: tuple[float, float] = (0.08, 0.3),
    forbidden: list[np.ndarray] | None = None,
    style: str = "freeform",
    instance_bank: list[np.ndarray] | None = None,
    max_attempts: int = 100,
    brush_radius_range: tuple[int, int] | None = None,
    vertex_range: tuple[int, int] = (4, 12),
    forbid_overlap: str = "full",
) -> np.ndarray:
    """Sample a hole mask with area ratio inside `ratio_range`.

    Freeform style draws random thick strokes; instance style drops a
    randomly translated (and possibly flipped) mask from `instance_bank`.
    Overlap with any forbidden mask is rejected outright
    (forbid_overlap="full"); pass "none" to ignore the forbidden list.
    Deterministic for a fixed seed and fixed inputs.
    """
    lo, hi = ratio_range
    if not (0 < lo <= hi < 1):
        raise ValueError(f"ratio_range must satisfy 0 < lo <= hi < 1, got {ratio_range}")
    if style not in ("freeform", "instance"):
        raise ValueError(f"unknown style {style!r}")
    if style == "instance" and not instance_bank:
        raise ValueError("instance style requires a non-empty instance_bank")
    if forbid_overlap not in ("full", "none"):
        raise ValueError(f"unknown forbid_overlap mode {forbid_overlap!r}")

    h, w = frame
    frame_area = h * w
    rng = np.random.default_rng(rng_seed)
    blocked = np.zeros(frame, dtype=bool)
    if forbidden and forbid_overlap == "full":
        for f in forbidden:
            f = as_mask(f)
            if f.shape != tuple(frame):
                raise ValueError(f"forbidden mask shape {f.shape} != frame {tuple(frame)}")
            blocked |= f

    if brush_radius_range is None:
        # defaults follow a 512px frame: radius uniform in [8, 48]
        scale = min(h, w) / 512.0
        brush_radius_range = (max(int(round(8 * scale)), 1), max(int(round(48 * scale)), 2))

    for _ in range(max_attempts):
        if style == "freeform":
            mask = np.zeros(frame, dtype=bool)
            ok = False
            for _ in range(12):
                stroke = _random_stroke(rng, frame, brush_radius_range, vertex_range)
                if (stroke & blocked).any():
                    continue
                mask |= stroke
                ratio = mask.sum() / frame_area
                if ratio > hi:
                    break
                if ratio >= lo:
                    ok = True
                    break
            if ok:
                return mask
        else:
            bank_mask = as_mask(instance_bank[int(rng.integers(len(instance_bank)))])
            ys, xs = np.nonzero(bank_mask)
            if ys.size == 0:
                continue
            patch = bank_mask[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
            if rng.random() < 0.5:
                patch = patch[:, ::-1]
            ph, pw = patch.shape
            if ph > h or pw > w:
                continue
            ratio = patch.sum() / frame_area
            if not (lo <= ratio <= hi):
                continue
            top = int(rng.integers(0, h - ph + 1))
            left = int(rng.integers(0, w - pw + 1))
            mask = np.zeros(frame, dtype=bool)
            mask[top : top + ph, left : left + pw] = patch
            if not (mask & blocked).any():
                return mask

    raise HolePlacementError(
        f"cannot place hole with ratio in {ratio_range} after {max_attempts} attempts"
    )


def save_mask(path, m: np.ndarray) -> None:
    """Write a mask as an 8-bit single-channel PNG (0 outside, 255 inside)."""
    m = as_mask(m)
    Image.fromarray((m * np.uint8(255))).save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    """Read a mask image; values >= 128 count as inside (lossy-tolerant)."""
    img = Image.open(path)
    if img.mode != "L":
        img = img.convert("L")
    return np.asarray(img) >= 128


def mask_to_png_bytes(m: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    Image.fromarray((as_mask(m) * np.uint8(255))).save(buf, format="PNG")
    return buf.getvalue()


def mask_from_png_bytes(data: bytes) -> np.ndarray:
    import io

    img = Image.open(io.BytesIO(data))
    if img.mode != "L":
        img = img.convert("L")
    return np.asarray(img) >= 128
