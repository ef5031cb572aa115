#!/usr/bin/env python3
"""Tour of the binary-mask substrate.

Walks through morphology, hole sampling with forbidden regions, label
canonicalization, and display boxes; writes illustrations to demos/out/.
"""
import numpy as np

from artifact.masks import (
    area,
    canonicalize_label,
    dilate,
    display_bbox,
    erode,
    object_removal_mask,
    sample_background_hole,
    save_mask,
    square_kernel,
)
from pathlib import Path

out = Path(__file__).parent / "out" / "mask_basics"
out.mkdir(parents=True, exist_ok=True)

# A single pixel grows into a 13x13 block after three 5x5 dilations: the
# exact recipe used to widen object masks for removal.
seed_px = np.zeros((32, 32), dtype=bool)
seed_px[16, 16] = True
grown = dilate(seed_px, square_kernel(5), iterations=3)
print("single pixel after 3 dilations:", area(grown), "px (13x13 =", 13 * 13, ")")
save_mask(out / "dilated.png", grown)
assert np.array_equal(grown, object_removal_mask(seed_px))

# Erosion walks the block back down to its center pixel.
shrunk = erode(grown, square_kernel(5), iterations=3)
print("eroded back:", area(shrunk), "px")

# Background hole sampling: stay inside the ratio band, never touch the
# forbidden object region.
forbidden = np.zeros((128, 128), dtype=bool)
forbidden[30:90, 20:70] = True
hole = sample_background_hole(7, (128, 128), (0.08, 0.3), [forbidden])
print("sampled hole ratio:", round(area(hole) / (128 * 128), 3))
print("overlap with forbidden:", area(hole & forbidden))
save_mask(out / "hole.png", hole)
save_mask(out / "forbidden.png", forbidden)

# Brushed labels may cross the hole boundary; canonicalization clips.
brush = np.zeros((128, 128), dtype=bool)
brush[0:60, 0:60] = True
label = canonicalize_label(brush, hole)
print("brushed px:", area(brush), "-> canonical label px:", area(label))

# The annotation UI shows a dilated bounding box, not the hole itself.
box = display_bbox(hole, margin=16)
print("display bbox:", box.to_dict())
