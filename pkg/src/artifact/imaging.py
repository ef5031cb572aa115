"""Small helpers for 8-bit RGB images stored as (H, W, 3) uint8 arrays."""
from __future__ import annotations

import io

import numpy as np
from PIL import Image


def as_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must be (H, W, 3), got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"image must be uint8, got {img.dtype}")
    return img


def save_image(path, img: np.ndarray) -> None:
    Image.fromarray(as_image(img), mode="RGB").save(path, format="PNG")


def load_image(path) -> np.ndarray:
    img = Image.open(path)
    if img.mode != "RGB":
        img = img.convert("RGB")
    return np.asarray(img).copy()


def image_to_png_bytes(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(as_image(img), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def image_from_png_bytes(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    if img.mode != "RGB":
        img = img.convert("RGB")
    return np.asarray(img).copy()


def jpeg_roundtrip(img: np.ndarray, quality: int) -> np.ndarray:
    """Encode/decode through JPEG at the given quality (augmentation helper)."""
    buf = io.BytesIO()
    Image.fromarray(as_image(img), mode="RGB").save(buf, format="JPEG", quality=int(quality))
    buf.seek(0)
    return np.asarray(Image.open(buf).convert("RGB")).copy()


def resize_image(img: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize to (height, width)."""
    h, w = size
    out = Image.fromarray(as_image(img), mode="RGB").resize((w, h), Image.BILINEAR)
    return np.asarray(out).copy()


def resize_mask_nearest(m: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resize for binary masks to (height, width)."""
    h, w = size
    out = Image.fromarray(m.astype(np.uint8) * 255, mode="L").resize((w, h), Image.NEAREST)
    return np.asarray(out) >= 128
