import numpy as np
import pytest

from artifact import masks
from artifact.masks import (
    Box,
    HolePlacementError,
    area,
    canonicalize_label,
    dilate,
    display_bbox,
    erode,
    intersect,
    object_removal_mask,
    sample_background_hole,
    square_kernel,
)

from oracles import brute_count, brute_dilate, brute_erode, random_mask


def block(shape, y0, y1, x0, x1):
    m = np.zeros(shape, dtype=bool)
    m[y0:y1, x0:x1] = True
    return m


class TestKernel:
    def test_default_is_5x5(self):
        assert square_kernel().shape == (5, 5)

    @pytest.mark.parametrize("side", [0, 2, 4, -1])
    def test_rejects_even_or_nonpositive(self, side):
        with pytest.raises(ValueError):
            square_kernel(side)


class TestDilate:
    def test_empty_stays_empty(self):
        m = np.zeros((9, 9), dtype=bool)
        assert not dilate(m, square_kernel(5), 3).any()

    def test_full_saturates(self):
        m = np.ones((6, 7), dtype=bool)
        assert dilate(m, square_kernel(5), 1).all()

    def test_zero_iterations_identity(self):
        rng = np.random.default_rng(0)
        m = random_mask(rng, (10, 10))
        assert np.array_equal(dilate(m, square_kernel(3), 0), m)

    def test_center_pixel_grows_to_13x13(self):
        m = np.zeros((15, 15), dtype=bool)
        m[7, 7] = True
        got = dilate(m, square_kernel(5), 3)
        assert np.array_equal(got, block((15, 15), 1, 14, 1, 14))
        assert np.array_equal(got, brute_dilate(m, 5, 3))

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        m = random_mask(rng, (12, 11), p=0.15)
        side = int(rng.choice([3, 5]))
        iters = int(rng.integers(0, 4))
        assert np.array_equal(dilate(m, square_kernel(side), iters),
                              brute_dilate(m, side, iters))

    def test_monotone(self):
        rng = np.random.default_rng(3)
        a = random_mask(rng, (14, 14), p=0.1)
        b = a | random_mask(rng, (14, 14), p=0.1)
        da, db = dilate(a, iterations=2), dilate(b, iterations=2)
        assert not (da & ~db).any()

    def test_iteration_composition(self):
        rng = np.random.default_rng(4)
        m = random_mask(rng, (16, 16), p=0.08)
        k = square_kernel(3)
        assert np.array_equal(dilate(m, k, 3), dilate(dilate(m, k, 2), k, 1))


class TestErode:
    def test_block_shrinks_to_center_pixel(self):
        m = block((13, 13), 0, 13, 0, 13)
        got = erode(m, square_kernel(5), 3)
        expect = np.zeros((13, 13), dtype=bool)
        expect[6, 6] = True
        assert np.array_equal(got, expect)
        assert np.array_equal(got, brute_erode(m, 5, 3))

    def test_empty_stays_empty(self):
        assert not erode(np.zeros((8, 8), dtype=bool), iterations=2).any()

    def test_small_block_vanishes(self):
        m = block((10, 10), 4, 7, 4, 7)
        assert not erode(m, square_kernel(5), 1).any()
        assert not brute_erode(m, 5, 1).any()

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(100 + seed)
        m = random_mask(rng, (11, 13), p=0.7)
        side = int(rng.choice([3, 5]))
        iters = int(rng.integers(0, 3))
        assert np.array_equal(erode(m, square_kernel(side), iters),
                              brute_erode(m, side, iters))

    def test_opening_closing_containment(self):
        # closing containment only holds away from the frame edge, where
        # the border-is-0 erosion convention cannot bite
        k = square_kernel(3)
        interior = np.zeros((15, 15), dtype=bool)
        interior[1:-1, 1:-1] = True
        for seed in range(10):
            m = random_mask(np.random.default_rng(seed), (15, 15), p=0.4)
            opened = dilate(erode(m, k, 1), k, 1)
            closed = erode(dilate(m, k, 1), k, 1)
            assert np.array_equal(opened, brute_dilate(brute_erode(m, 3, 1), 3, 1))
            assert np.array_equal(closed, brute_erode(brute_dilate(m, 3, 1), 3, 1))
            assert not (opened & ~m).any()  # opening subset of m
            assert not (m & interior & ~closed).any()  # m subset of closing inside


class TestIntersect:
    def test_idempotent(self):
        m = random_mask(np.random.default_rng(0), (6, 6))
        assert np.array_equal(intersect(m, m), m)

    def test_with_empty(self):
        m = random_mask(np.random.default_rng(1), (6, 6))
        assert not intersect(m, np.zeros_like(m)).any()

    def test_enumerated_example(self):
        a = np.zeros((2, 2), dtype=bool)
        a[0, 0] = a[0, 1] = True
        b = np.zeros((2, 2), dtype=bool)
        b[0, 1] = b[1, 1] = True
        got = intersect(a, b)
        expect = np.zeros((2, 2), dtype=bool)
        expect[0, 1] = True
        assert np.array_equal(got, expect)

    def test_commutative_associative(self):
        rng = np.random.default_rng(2)
        a, b, c = (random_mask(rng, (9, 9)) for _ in range(3))
        assert np.array_equal(intersect(a, b), intersect(b, a))
        assert np.array_equal(intersect(intersect(a, b), c), intersect(a, intersect(b, c)))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            intersect(np.zeros((4, 4), dtype=bool), np.zeros((4, 5), dtype=bool))


class TestArea:
    def test_empty_and_full(self):
        assert area(np.zeros((4, 4), dtype=bool)) == 0
        assert area(np.ones((4, 4), dtype=bool)) == 16

    def test_matches_pixel_loop(self):
        m = random_mask(np.random.default_rng(5), (8, 8))
        assert area(m) == brute_count(m)


class TestCanonicalizeLabel:
    def test_inside_unchanged(self):
        hole = block((8, 8), 2, 6, 2, 6)
        label = block((8, 8), 3, 5, 3, 5)
        assert np.array_equal(canonicalize_label(label, hole), label)

    def test_outside_becomes_perfect_fill(self):
        hole = block((8, 8), 0, 3, 0, 3)
        label = block((8, 8), 5, 8, 5, 8)
        assert not canonicalize_label(label, hole).any()

    def test_straddling_keeps_in_hole_pixels(self):
        hole = block((4, 4), 0, 4, 0, 2)
        label = block((4, 4), 1, 3, 1, 3)
        got = canonicalize_label(label, hole)
        assert np.array_equal(got, label & hole)
        assert not (got & ~hole).any()

    def test_never_exceeds_hole_randomized(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            hole = random_mask(rng, (10, 10), p=0.4)
            label = random_mask(rng, (10, 10), p=0.4)
            assert not (canonicalize_label(label, hole) & ~hole).any()


class TestObjectRemovalMask:
    def test_single_pixel_becomes_13x13(self):
        m = np.zeros((32, 32), dtype=bool)
        m[16, 16] = True
        got = object_removal_mask(m)
        assert np.array_equal(got, block((32, 32), 10, 23, 10, 23))

    def test_corner_instance_clipped_but_contained(self):
        m = np.zeros((16, 16), dtype=bool)
        m[0, 0] = True
        got = object_removal_mask(m)
        assert got[0, 0]
        assert not (m & ~got).any()

    def test_20x20_block_on_64_becomes_32x32(self):
        m = block((64, 64), 20, 40, 20, 40)
        got = object_removal_mask(m)
        assert np.array_equal(got, block((64, 64), 14, 46, 14, 46))
        assert np.array_equal(got, brute_dilate(m, 5, 3))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            object_removal_mask(np.zeros((8, 8), dtype=bool))


class TestDisplayBbox:
    def test_single_pixel_zero_margin(self):
        m = np.zeros((12, 12), dtype=bool)
        m[5, 5] = True
        assert display_bbox(m, 0) == Box(5, 5, 5, 5)

    def test_large_margin_clips_to_frame(self):
        m = np.zeros((8, 8), dtype=bool)
        m[5, 5] = True
        assert display_bbox(m, 10) == Box(0, 0, 7, 7)

    def test_two_pixel_min_max(self):
        m = np.zeros((8, 13), dtype=bool)  # height 8, width 13
        m[2, 2] = True
        m[4, 9] = True
        assert display_bbox(m, 3) == Box(0, 0, 12, 7)

    def test_contains_every_hole_pixel(self):
        rng = np.random.default_rng(11)
        m = random_mask(rng, (20, 20), p=0.05)
        if not m.any():
            m[3, 3] = True
        box = display_bbox(m, 2)
        ys, xs = np.nonzero(m)
        assert box.x0 <= xs.min() and xs.max() <= box.x1
        assert box.y0 <= ys.min() and ys.max() <= box.y1

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            display_bbox(np.zeros((5, 5), dtype=bool), 1)


class TestSampleBackgroundHole:
    FRAME = (96, 96)

    def test_ratio_bounds_and_forbidden(self):
        forbidden = [block(self.FRAME, 0, 30, 0, 30)]
        for seed in range(40):
            hole = sample_background_hole(seed, self.FRAME, (0.08, 0.3), forbidden)
            ratio = area(hole) / (self.FRAME[0] * self.FRAME[1])
            assert 0.08 <= ratio <= 0.3
            assert not (hole & forbidden[0]).any()

    def test_deterministic_per_seed(self):
        a = sample_background_hole(7, self.FRAME, (0.08, 0.3))
        b = sample_background_hole(7, self.FRAME, (0.08, 0.3))
        assert np.array_equal(a, b)

    def test_full_forbidden_raises(self):
        full = [np.ones(self.FRAME, dtype=bool)]
        with pytest.raises(HolePlacementError):
            sample_background_hole(0, self.FRAME, (0.08, 0.3), full, max_attempts=10)

    def test_instance_style_places_bank_mask(self):
        bank = [block((64, 64), 0, 20, 0, 25)]  # 500 px on 4096 => ratio .122
        hole = sample_background_hole(3, (64, 64), (0.05, 0.3), style="instance",
                                      instance_bank=bank)
        assert area(hole) == 500

    def test_instance_requires_bank(self):
        with pytest.raises(ValueError, match="instance_bank"):
            sample_background_hole(0, (64, 64), (0.1, 0.2), style="instance")

    def test_forbid_overlap_none_ignores_forbidden(self):
        full = [np.ones(self.FRAME, dtype=bool)]
        hole = sample_background_hole(1, self.FRAME, (0.08, 0.3), full,
                                      forbid_overlap="none")
        assert hole.any()


class TestMaskIO:
    def test_round_trip(self, tmp_path):
        m = random_mask(np.random.default_rng(9), (17, 23))
        p = tmp_path / "m.png"
        masks.save_mask(p, m)
        assert np.array_equal(masks.load_mask(p), m)

    def test_threshold_at_128(self, tmp_path):
        from PIL import Image

        arr = np.array([[0, 127], [128, 255]], dtype=np.uint8)
        p = tmp_path / "gray.png"
        Image.fromarray(arr, mode="L").save(p)
        got = masks.load_mask(p)
        assert got.tolist() == [[False, False], [True, True]]

    def test_png_bytes_round_trip(self):
        m = random_mask(np.random.default_rng(10), (9, 9))
        assert np.array_equal(masks.mask_from_png_bytes(masks.mask_to_png_bytes(m)), m)
