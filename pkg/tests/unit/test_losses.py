import numpy as np
import pytest

from src.core.exceptions import DimensionMismatchException, ValidationException
from src.diffcore import Tensor, upsample_nearest
from src.domain.models import DownsampleKernel, FeatureProvenance, LossWeights, PyramidSpec
from src.losses import (
    FixedFeatureExtractor,
    downsample_array,
    final_loss,
    pyramid_loss,
    rec_loss,
    removal_loss,
    sr_loss,
    variation_loss,
)
from src.losses.downsample import area_matrix, bicubic_matrix
from src.services.degrade import make_lowres

pytestmark = pytest.mark.unit


@pytest.fixture
def video(rng) -> np.ndarray:
    return rng.uniform(size=(3, 3, 16, 16)).astype(np.float32)


class TestIdentities:
    def test_rec_loss_of_identical_frames_is_zero(self, video, extractor):
        assert float(rec_loss(video, video).data) == 0.0
        assert float(rec_loss(video, video, extractor).data) == 0.0

    def test_pyramid_loss_of_identical_frames_is_zero(self, video):
        for kernel in DownsampleKernel:
            spec = PyramidSpec(factors=(2, 4, 8), kernel=kernel)
            assert float(pyramid_loss(video, video, spec).data) == 0.0

    def test_variation_loss_of_constant_is_zero(self):
        assert float(variation_loss(np.full((2, 3, 8, 8), 0.3, dtype=np.float32)).data) == 0.0

    def test_removal_with_empty_mask_and_no_variation_is_zero(self, video, rng, extractor):
        masks = np.zeros((3, 1, 16, 16), dtype=np.float32)
        pred = rng.uniform(size=video.shape).astype(np.float32)
        weights = LossWeights(rec=1.0, spl=0.01, var=0.0)
        terms = removal_loss(video, masks, pred, weights, extractor, PyramidSpec(factors=(2, 4)))
        assert abs(float(terms.total.data)) <= 1e-7


class TestClosedForms:
    def test_rec_loss_sums_frame_means(self):
        target = np.zeros((2, 1, 4, 4), dtype=np.float32)
        pred = np.full((2, 1, 4, 4), 0.25, dtype=np.float32)
        assert float(rec_loss(target, pred).data) == pytest.approx(0.5)

    def test_variation_loss_normalized_by_frame_size(self):
        frame = np.array([[[0.0, 1.0], [0.0, 1.0]]], dtype=np.float32)
        # só o par horizontal (1,1)-(1,0) contribui: 1 / (C·H·W)
        assert float(variation_loss(frame).data) == pytest.approx(0.25)

    def test_final_loss_is_weighted_sum(self, video, rng):
        pred = rng.uniform(size=video.shape).astype(np.float32)
        spec = PyramidSpec(factors=(2, 4))
        weights = LossWeights(rec=1.0, spl=0.5, var=0.25)
        expected = (
            float(rec_loss(video, pred).data)
            + 0.5 * float(pyramid_loss(video, pred, spec).data)
            + 0.25 * float(variation_loss(pred).data)
        )
        assert float(final_loss(video, pred, weights, None, spec).data) == pytest.approx(
            expected, rel=1e-5
        )

    def test_zero_weight_terms_are_skipped(self, video, rng):
        pred = rng.uniform(size=video.shape).astype(np.float32)
        weights = LossWeights(rec=1.0, spl=0.0, var=0.0)
        # com λ_spl = 0 a pirâmide não é avaliada, então fatores indivisíveis não importam
        total = final_loss(video, pred, weights, None, PyramidSpec(factors=(3,)))
        assert float(total.data) == pytest.approx(float(rec_loss(video, pred).data))


class TestErrors:
    def test_length_mismatch_names_time_axis(self, video):
        with pytest.raises(DimensionMismatchException) as exc_info:
            final_loss(video, video[:2], LossWeights())
        assert exc_info.value.details["axis"] == "time"

    def test_indivisible_pyramid_factor(self):
        frames = np.zeros((1, 1, 12, 12), dtype=np.float32)
        with pytest.raises(ValidationException):
            pyramid_loss(frames, frames, PyramidSpec(factors=(8,)))

    def test_non_binary_mask(self, video):
        masks = np.full((3, 1, 16, 16), 0.5, dtype=np.float32)
        with pytest.raises(ValidationException):
            removal_loss(video, masks, video, LossWeights())


class TestTaskObjectives:
    def test_removal_ignores_hole_pixels(self, video, rng, extractor):
        masks = np.ones((3, 1, 16, 16), dtype=np.float32)
        masks[:, :, 4:10, 5:11] = 0.0
        pred = rng.uniform(size=video.shape).astype(np.float32)
        perturbed = video.copy()
        perturbed[:, :, 4:10, 5:11] = rng.uniform(size=(3, 3, 6, 6))
        weights = LossWeights(rec=1.0, spl=0.01, var=1e-4)
        spec = PyramidSpec(factors=(2, 4))

        original = removal_loss(video, masks, pred, weights, extractor, spec).as_floats()
        changed = removal_loss(perturbed, masks, pred, weights, extractor, spec).as_floats()
        assert original == changed

    def test_sr_loss_zero_for_consistent_upsample(self, rng):
        low = rng.uniform(size=(2, 3, 8, 8)).astype(np.float32)
        high = upsample_nearest(Tensor(low), 2).data
        weights = LossWeights(rec=1.0, spl=0.01, var=0.0)
        terms = sr_loss(low, high, 2, weights, None, PyramidSpec(factors=(2, 4)))
        assert float(terms.total.data) == 0.0

    def test_sr_loss_rejects_wrong_scale(self, rng):
        low = rng.uniform(size=(1, 3, 8, 8)).astype(np.float32)
        high = rng.uniform(size=(1, 3, 16, 16)).astype(np.float32)
        with pytest.raises(DimensionMismatchException):
            sr_loss(low, high, 4, LossWeights(), None, PyramidSpec(factors=(2,)))


class TestDownsample:
    def test_area_average(self):
        frame = np.arange(16, dtype=np.float32).reshape(1, 4, 4)
        np.testing.assert_allclose(
            downsample_array(frame, 2)[0], [[2.5, 4.5], [10.5, 12.5]]
        )

    @pytest.mark.parametrize("factor", [2, 4, 8])
    def test_rows_sum_to_one(self, factor):
        np.testing.assert_allclose(area_matrix(32, factor).sum(axis=1), 1.0)
        np.testing.assert_allclose(bicubic_matrix(32, factor).sum(axis=1), 1.0)

    def test_bicubic_preserves_constants(self):
        frame = np.full((1, 16, 16), 0.4, dtype=np.float32)
        np.testing.assert_allclose(
            downsample_array(frame, 4, DownsampleKernel.BICUBIC), 0.4, atol=1e-6
        )

    def test_matches_lowres_generation(self, square_video):
        lowres = make_lowres(square_video, 4)
        np.testing.assert_array_equal(lowres.frames, downsample_array(square_video.frames, 4))
        assert lowres.frame_shape == (3, 4, 4)


class TestFeatureExtractor:
    def test_seeded_weights_are_reproducible(self, rng):
        frames = Tensor(rng.uniform(size=(1, 3, 16, 16)).astype(np.float32))
        first = FixedFeatureExtractor(channels=3).features(frames)
        second = FixedFeatureExtractor(channels=3).features(frames)
        assert [tap.shape for tap in first] == [(1, 8, 8, 8), (1, 16, 4, 4), (1, 32, 2, 2)]
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.data, b.data)

    def test_export_and_import(self, tmp_path, rng):
        source = FixedFeatureExtractor(channels=1, widths=(4, 6), seed=9)
        source.export(tmp_path / "phi")
        imported = FixedFeatureExtractor.from_checkpoint(tmp_path / "phi")

        assert source.provenance is FeatureProvenance.RANDOM_SEEDED
        assert imported.provenance is FeatureProvenance.IMPORTED
        assert imported.channels == 1
        assert imported.tap_count == 2

        frames = Tensor(rng.uniform(size=(2, 1, 8, 8)).astype(np.float32))
        for a, b in zip(source.features(frames), imported.features(frames)):
            np.testing.assert_array_equal(a.data, b.data)
