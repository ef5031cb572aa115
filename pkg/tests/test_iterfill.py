import numpy as np
import pytest

from artifact.inpaint import (
    ArtifactColorSegmenter,
    InpaintBackendError,
    Inpainter,
    OracleInpainter,
    ToyDiffusionInpainter,
)
from artifact.iterfill import (
    FillStep,
    IterFillTrace,
    iterative_fill,
    load_trace,
    onion_fill,
    par_curve,
    save_trace,
)
from artifact.masks import erode, square_kernel


def rand_image(rng, shape=(32, 32)):
    return rng.integers(0, 254, size=(*shape, 3), dtype=np.uint8)


def center_hole(shape, k):
    m = np.zeros(shape, dtype=bool)
    cy, cx = shape[0] // 2, shape[1] // 2
    m[cy - k : cy + k, cx - k : cx + k] = True
    return m


class EmptySegmenter:
    def predict(self, image, hole=None):
        return np.zeros(image.shape[:2], dtype=bool)


class FailingInpainter(Inpainter):
    def _fill(self, image, hole):
        raise InpaintBackendError("backend exploded", stderr="boom")


class TestIterativeFill:
    def test_empty_prediction_terminates_after_one_step(self):
        rng = np.random.default_rng(0)
        image = rand_image(rng)
        hole = center_hole((32, 32), 6)
        trace = iterative_fill(image, hole, ToyDiffusionInpainter(iters=20),
                               EmptySegmenter(), max_iters=5)
        assert len(trace.steps) == 1
        assert trace.terminated_by == "empty_artifacts"
        assert trace.steps[0].par == 0.0

    def test_oracle_p1_fill_equals_truth_and_terminates(self):
        rng = np.random.default_rng(1)
        truth = rand_image(rng)
        image = rand_image(rng)
        hole = center_hole((32, 32), 6)
        inp = OracleInpainter(truth, 1.0, rng_seed=0)
        trace = iterative_fill(image, hole, inp, ArtifactColorSegmenter(), max_iters=5)
        assert len(trace.steps) == 1
        assert trace.terminated_by == "empty_artifacts"
        assert np.array_equal(trace.steps[0].fill[hole], truth[hole])

    def test_par_non_increasing_per_seed(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            truth = rand_image(rng, (40, 40))
            image = rand_image(rng, (40, 40))
            hole = center_hole((40, 40), 10)
            inp = OracleInpainter(truth, 0.5, rng_seed=seed)
            trace = iterative_fill(image, hole, inp, ArtifactColorSegmenter(), max_iters=5)
            pars = trace.pars
            assert all(a >= b for a, b in zip(pars, pars[1:]))
            assert all(0.0 <= p <= 1.0 for p in pars)

    def test_hole_monotonicity(self):
        rng = np.random.default_rng(3)
        truth = rand_image(rng, (40, 40))
        image = rand_image(rng, (40, 40))
        hole = center_hole((40, 40), 10)
        inp = OracleInpainter(truth, 0.4, rng_seed=3)
        trace = iterative_fill(image, hole, inp, ArtifactColorSegmenter(), max_iters=5)
        prev = trace.original_hole
        for step in trace.steps:
            assert not (step.artifact_mask & ~prev).any()
            prev = step.artifact_mask

    def test_composition_invariant_every_step(self):
        rng = np.random.default_rng(4)
        truth = rand_image(rng, (40, 40))
        image = rand_image(rng, (40, 40))
        hole = center_hole((40, 40), 9)
        inp = OracleInpainter(truth, 0.5, rng_seed=4)
        trace = iterative_fill(image, hole, inp, ArtifactColorSegmenter(), max_iters=5)
        for step in trace.steps:
            assert np.array_equal(step.fill[~hole], image[~hole])

    def test_mean_step3_entering_par_matches_halving(self):
        # the artifact ratio the step-k fill is asked to repair halves
        # each iteration: 1, 1/2, 1/4, ... so step 3 enters around 0.25
        pars3 = []
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            truth = rand_image(rng, (48, 48))
            image = rand_image(rng, (48, 48))
            hole = center_hole((48, 48), 14)
            inp = OracleInpainter(truth, 0.5, rng_seed=seed)
            trace = iterative_fill(image, hole, inp, ArtifactColorSegmenter(), max_iters=3)
            pars3.append(trace.pars[min(1, len(trace.steps) - 1)])
        assert 0.17 <= float(np.mean(pars3)) <= 0.33  # around 0.25

    def test_empty_hole_rejected(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError, match="empty"):
            iterative_fill(rand_image(rng), np.zeros((32, 32), dtype=bool),
                           ToyDiffusionInpainter(), EmptySegmenter())

    def test_backend_failure_carries_step_index(self):
        rng = np.random.default_rng(6)
        with pytest.raises(InpaintBackendError, match="step 1"):
            iterative_fill(rand_image(rng), center_hole((32, 32), 5),
                           FailingInpainter(), EmptySegmenter())


class TestOnionFill:
    def test_single_step_equals_plain_fill(self):
        rng = np.random.default_rng(7)
        image = rand_image(rng)
        hole = center_hole((32, 32), 8)
        inp = ToyDiffusionInpainter(iters=30)
        trace = onion_fill(image, hole, inp, n_steps=1)
        assert len(trace.steps) == 1
        assert np.array_equal(trace.steps[0].fill, inp.fill(image, hole))

    def test_erosion_to_empty_stops_early(self):
        rng = np.random.default_rng(8)
        image = rand_image(rng)
        hole = np.zeros((32, 32), dtype=bool)
        hole[8:21, 8:21] = True  # 13x13: erode^3 -> 1px, erode^6 -> empty
        assert erode(hole, square_kernel(5), 3).sum() == 1
        assert not erode(hole, square_kernel(5), 6).any()
        trace = onion_fill(image, hole, ToyDiffusionInpainter(iters=10), n_steps=5,
                           erode_iters_per_step=3)
        assert len(trace.steps) == 2
        assert trace.terminated_by == "empty_artifacts"

    def test_outside_original_hole_unchanged_every_step(self):
        rng = np.random.default_rng(9)
        image = rand_image(rng, (48, 48))
        hole = center_hole((48, 48), 14)
        trace = onion_fill(image, hole, ToyDiffusionInpainter(iters=15), n_steps=4)
        for step in trace.steps:
            assert np.array_equal(step.fill[~hole], image[~hole])

    def test_recorded_masks_are_shrinking_erosions(self):
        rng = np.random.default_rng(10)
        image = rand_image(rng, (48, 48))
        hole = center_hole((48, 48), 16)
        trace = onion_fill(image, hole, ToyDiffusionInpainter(iters=10), n_steps=3,
                           erode_iters_per_step=2)
        for k, step in enumerate(trace.steps, start=1):
            expect = erode(hole, square_kernel(5), k * 2)
            assert np.array_equal(step.artifact_mask, expect)

    def test_empty_hole_rejected(self):
        rng = np.random.default_rng(11)
        with pytest.raises(ValueError, match="empty"):
            onion_fill(rand_image(rng), np.zeros((32, 32), dtype=bool),
                       ToyDiffusionInpainter())


class TestParCurve:
    def fake_trace(self, pars, terminated="max_iters"):
        hole = np.ones((4, 4), dtype=bool)
        hole[0, 0] = False
        img = np.zeros((4, 4, 3), dtype=np.uint8)
        steps = [FillStep(fill=img, artifact_mask=hole, par=p) for p in pars]
        return IterFillTrace(original_hole=hole, steps=steps, terminated_by=terminated)

    def test_all_zero_traces(self):
        traces = [self.fake_trace([0.0], "empty_artifacts") for _ in range(3)]
        assert par_curve(traces, 4) == [0.0, 0.0, 0.0, 0.0]

    def test_mean_of_two(self):
        traces = [self.fake_trace([0.4]), self.fake_trace([0.2])]
        assert par_curve(traces, 1)[0] == pytest.approx(0.3)

    def test_early_termination_carries_final_par(self):
        traces = [self.fake_trace([0.5, 0.0], "empty_artifacts"),
                  self.fake_trace([0.6, 0.4, 0.3])]
        curve = par_curve(traces, 4)
        assert curve == pytest.approx([0.55, 0.2, 0.15, 0.15])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            par_curve([], 3)


class TestTracePersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(12)
        truth = rand_image(rng, (40, 40))
        image = rand_image(rng, (40, 40))
        hole = center_hole((40, 40), 10)
        inp = OracleInpainter(truth, 0.5, rng_seed=12)
        trace = iterative_fill(image, hole, inp, ArtifactColorSegmenter(), max_iters=3)
        save_trace(trace, tmp_path / "trace")
        back = load_trace(tmp_path / "trace")
        assert back.terminated_by == trace.terminated_by
        assert np.array_equal(back.original_hole, trace.original_hole)
        assert len(back.steps) == len(trace.steps)
        for a, b in zip(back.steps, trace.steps):
            assert np.array_equal(a.fill, b.fill)
            assert np.array_equal(a.artifact_mask, b.artifact_mask)
            assert a.par == pytest.approx(b.par)
