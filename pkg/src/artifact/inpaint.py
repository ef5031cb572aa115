"""Inpainting adapters behind one compositing-enforcing interface.

Every adapter guarantees the compositing contract: pixels outside the
hole are bit-identical to the input image, no matter what the backend
returns. Real inpainting models are bridged through an external command
and never trusted to preserve context themselves.

The restore-probability oracle and the artifact-color segmenter exist
for testing: together they make refinement behavior exactly predictable.
"""
from __future__ import annotations

import shlex
import subprocess
import tempfile
import threading
from pathlib import Path

import numpy as np

from .imaging import as_image, load_image, save_image
from .masks import as_mask, intersect

# Flag color the oracle paints on non-restored pixels; chosen so a
# trivial exact-color segmenter can detect it.
ARTIFACT_COLOR = (255, 0, 255)


class InpaintBackendError(RuntimeError):
    """External backend failed; carries its stderr for diagnosis."""

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


class InpaintTimeoutError(InpaintBackendError):
    pass


class Inpainter:
    """Base adapter. Subclasses fill hole pixels; compositing is done here."""

    def fill(self, image: np.ndarray, hole: np.ndarray) -> np.ndarray:
        image = as_image(image)
        hole = as_mask(hole)
        if hole.shape != image.shape[:2]:
            raise ValueError(f"hole shape {hole.shape} != image shape {image.shape[:2]}")
        if not hole.any():
            return image.copy()
        raw = as_image(self._fill(image, hole))
        if raw.shape != image.shape:
            raise InpaintBackendError(
                f"backend returned shape {raw.shape}, expected {image.shape}"
            )
        return np.where(hole[:, :, None], raw, image)

    def _fill(self, image: np.ndarray, hole: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def fill(inpainter: Inpainter, image: np.ndarray, hole: np.ndarray) -> np.ndarray:
    """Functional form of Inpainter.fill."""
    return inpainter.fill(image, hole)


def _boundary_pixels(hole: np.ndarray) -> np.ndarray:
    """Outside pixels 4-adjacent to the hole (the Dirichlet boundary)."""
    h, w = hole.shape
    near = np.zeros_like(hole)
    near[1:, :] |= hole[:-1, :]
    near[:-1, :] |= hole[1:, :]
    near[:, 1:] |= hole[:, :-1]
    near[:, :-1] |= hole[:, 1:]
    return near & ~hole


def toy_diffusion_fill(image: np.ndarray, hole: np.ndarray, iters: int = 400) -> np.ndarray:
    """Fill by propagating boundary colors inward (repeated 4-neighbor averaging).

    Hole pixels start at the per-channel mean of the boundary pixels and
    relax toward the discrete harmonic interpolant of the boundary; with
    iters=0 they stay at the boundary mean. Values never leave the
    per-channel [min, max] range of the boundary.
    """
    image = as_image(image)
    hole = as_mask(hole)
    if hole.shape != image.shape[:2]:
        raise ValueError(f"hole shape {hole.shape} != image shape {image.shape[:2]}")
    if iters < 0:
        raise ValueError("iters must be >= 0")
    if not hole.any():
        return image.copy()
    boundary = _boundary_pixels(hole)
    if not boundary.any():
        raise ValueError("hole covers the full frame; no boundary to diffuse from")

    work = image.astype(np.float64)
    work[hole] = work[boundary].mean(axis=0)

    cnt = np.zeros(hole.shape, dtype=np.float64)
    cnt[1:, :] += 1
    cnt[:-1, :] += 1
    cnt[:, 1:] += 1
    cnt[:, :-1] += 1
    for _ in range(iters):
        s = np.zeros_like(work)
        s[1:, :] += work[:-1, :]
        s[:-1, :] += work[1:, :]
        s[:, 1:] += work[:, :-1]
        s[:, :-1] += work[:, 1:]
        work[hole] = (s / cnt[:, :, None])[hole]

    out = image.copy()
    out[hole] = np.clip(np.rint(work[hole]), 0, 255).astype(np.uint8)
    return out


class ToyDiffusionInpainter(Inpainter):
    """Classical boundary-propagation filler; deterministic, model-free."""

    def __init__(self, iters: int = 400):
        if iters < 0:
            raise ValueError("iters must be >= 0")
        self.iters = iters

    def _fill(self, image, hole):
        return toy_diffusion_fill(image, hole, iters=self.iters)


def oracle_fill(
    image: np.ndarray,
    hole: np.ndarray,
    truth_image: np.ndarray,
    restore_fraction: float,
    rng_seed: int,
) -> np.ndarray:
    """Restore each hole pixel to the truth with probability `restore_fraction`,
    otherwise paint it the flag artifact color. Deterministic per seed."""
    return OracleInpainter(truth_image, restore_fraction, rng_seed).fill(image, hole)


class OracleInpainter(Inpainter):
    """Test backend with a dialable success rate.

    Each call consumes the instance RNG, so repeated refills make fresh
    independent restore decisions: exactly the setup the refinement
    properties are stated against.
    """

    def __init__(self, truth_image: np.ndarray, restore_fraction: float, rng_seed: int = 0):
        if not (0.0 <= restore_fraction <= 1.0):
            raise ValueError(f"restore_fraction must be in [0, 1], got {restore_fraction}")
        self.truth = as_image(truth_image)
        self.restore_fraction = restore_fraction
        self.rng = np.random.default_rng(rng_seed)

    def _fill(self, image, hole):
        if self.truth.shape != image.shape:
            raise ValueError(f"truth shape {self.truth.shape} != image shape {image.shape}")
        out = image.copy()
        n = int(hole.sum())
        restored = self.rng.random(n) < self.restore_fraction
        vals = np.where(restored[:, None], self.truth[hole],
                        np.array(ARTIFACT_COLOR, dtype=np.uint8)[None, :])
        out[hole] = vals.astype(np.uint8)
        return out


class ArtifactColorSegmenter:
    """Oracle segmenter: flags pixels that exactly match the flag color."""

    def predict(self, image: np.ndarray, hole: np.ndarray | None = None) -> np.ndarray:
        image = as_image(image)
        mask = (image == np.array(ARTIFACT_COLOR, dtype=np.uint8)).all(axis=2)
        if hole is not None:
            mask = intersect(mask, hole)
        return mask


class ExternalCommandInpainter(Inpainter):
    """Bridge to a real model via `<cmd> --image in.png --mask mask.png --out out.png`.

    Exit code 0 and a readable PNG at --out signal success. Concurrent
    subprocesses are capped by `max_concurrency`.
    """

    def __init__(self, command, timeout: float = 120.0, max_concurrency: int = 2):
        if isinstance(command, str):
            command = shlex.split(command)
        if not command:
            raise ValueError("empty backend command")
        self.command = list(command)
        self.timeout = timeout
        self._pool = threading.BoundedSemaphore(max_concurrency)

    def _fill(self, image, hole):
        from .masks import save_mask

        with tempfile.TemporaryDirectory(prefix="inpaint_") as tmp:
            tmp = Path(tmp)
            in_path, mask_path, out_path = tmp / "in.png", tmp / "mask.png", tmp / "out.png"
            save_image(in_path, image)
            save_mask(mask_path, hole)
            argv = self.command + [
                "--image", str(in_path), "--mask", str(mask_path), "--out", str(out_path),
            ]
            with self._pool:
                try:
                    proc = subprocess.run(
                        argv, capture_output=True, text=True, timeout=self.timeout
                    )
                except subprocess.TimeoutExpired as e:
                    raise InpaintTimeoutError(
                        f"backend timed out after {self.timeout}s: {argv[0]}",
                        stderr=(e.stderr or ""),
                    ) from e
            if proc.returncode != 0:
                raise InpaintBackendError(
                    f"backend exited with code {proc.returncode}: {argv[0]}",
                    stderr=proc.stderr,
                )
            if not out_path.exists():
                raise InpaintBackendError(
                    f"backend produced no output file: {argv[0]}", stderr=proc.stderr
                )
            try:
                out = load_image(out_path)
            except Exception as e:
                raise InpaintBackendError(
                    f"backend output unreadable: {e}", stderr=proc.stderr
                ) from e
            return out
