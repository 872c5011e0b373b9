import numpy as np
import pytest

from src.core.exceptions import ValidationException
from src.domain.models import InterpolationRequest, MaskSequence, TaskKind
from src.services.synthetic import center_hole_mask
from src.services.tasks import TaskService, interpolated_length, synthesized_indices

pytestmark = pytest.mark.unit


class TestInterpolationLayout:
    def test_factor_four(self):
        request = InterpolationRequest.from_factor(4)
        assert request.alphas == (0.25, 0.5, 0.75)
        assert interpolated_length(3, request) == 9
        assert synthesized_indices(3, request) == [1, 2, 3, 5, 6, 7]

    def test_explicit_alphas(self):
        request = InterpolationRequest(alphas=(0.3, 0.6))
        assert interpolated_length(2, request) == 4
        assert synthesized_indices(2, request) == [1, 2]


class TestTaskService:
    def test_denoise_returns_reconstruction(self, tiny_task, square_video):
        result = TaskService().denoise(square_video, tiny_task)
        assert result.video.length == 3
        np.testing.assert_array_equal(result.video.frames, np.clip(result.fit.frames, 0, 1))
        assert result.held_out == []

    def test_early_stop_returns_plateau_snapshot(self, tiny_task, square_video):
        cfg = tiny_task.updated(epochs=40, early_stop=True, plateau_window=2, plateau_tol=1.0)
        result = TaskService().denoise(square_video, cfg)
        np.testing.assert_array_equal(result.video.frames, result.fit.plateau_snapshot)

    def test_interpolation_keeps_endpoints(self, tiny_task, square_video):
        cfg = tiny_task.updated(
            kind=TaskKind.INTERPOLATE, interpolation=InterpolationRequest.from_factor(2)
        )
        result = TaskService().interpolate(square_video, cfg)
        assert result.video.length == 5
        assert result.held_out == [1, 3]
        # quadros originais saem nas posições pares, decodificados com as estatísticas congeladas
        np.testing.assert_allclose(result.video.frames[::2], result.fit.frames, atol=1e-5)

    def test_interpolation_requires_alphas(self, tiny_task, square_video):
        with pytest.raises(ValidationException):
            TaskService().interpolate(square_video, tiny_task.updated(kind=TaskKind.INTERPOLATE))

    def test_superresolution_output_shape(self, tiny_task, square_video):
        lowres = square_video.with_frames(square_video.frames[:, :, ::2, ::2])
        result = TaskService().superresolve(lowres, tiny_task.updated(kind=TaskKind.SUPERRES), 2)
        assert result.video.frames.shape == (3, 3, 16, 16)
        assert result.fit.epochs_run == tiny_task.epochs

    def test_superresolution_rejects_scale(self, tiny_task, square_video):
        with pytest.raises(ValidationException):
            TaskService().superresolve(square_video, tiny_task, 3)

    def test_removal_ignores_hole_content(self, tiny_task, square_video, rng):
        cfg = tiny_task.updated(kind=TaskKind.REMOVAL)
        mask = center_hole_mask(16, 16)
        perturbed_frames = square_video.frames.copy()
        perturbed_frames[:, :, 6:10, 6:10] = rng.uniform(size=(3, 3, 4, 4))
        perturbed = square_video.with_frames(perturbed_frames)

        original = TaskService().remove_object(square_video, cfg, mask)
        changed = TaskService().remove_object(perturbed, cfg, mask)
        assert original.fit.curves.total == changed.fit.curves.total
        np.testing.assert_array_equal(original.video.frames, changed.video.frames)

    def test_removal_mask_count(self, tiny_task, square_video):
        masks = MaskSequence(masks=np.ones((2, 1, 16, 16), dtype=np.float32))
        with pytest.raises(ValidationException):
            TaskService().remove_object(square_video, tiny_task, masks)

    def test_run_requires_masks_for_removal(self, tiny_task, square_video):
        with pytest.raises(ValidationException):
            TaskService().run(square_video, tiny_task.updated(kind=TaskKind.REMOVAL))
