"""
Ajustes completos em vídeos sintéticos pequenos (segundos a poucos minutos cada).
"""
import numpy as np
import pytest

from src.domain.models import (
    InterpolationRequest,
    LossWeights,
    ModelConfig,
    PyramidSpec,
    TaskConfig,
    TaskKind,
)
from src.losses.downsample import downsample_array
from src.metrics.quality import psnr
from src.services.degrade import add_gaussian, make_lowres
from src.services.experiment import ConvergenceExperiment
from src.services.fitting import FittingService
from src.services.synthetic import moving_square_video
from src.services.tasks import TaskService

pytestmark = [pytest.mark.integration, pytest.mark.slow]


@pytest.fixture
def desk_task() -> TaskConfig:
    return TaskConfig(
        weights=LossWeights(rec=1.0, spl=1e-4, var=1e-4),
        epochs=2000,
        learning_rate=0.002,
        model=ModelConfig(
            latent_dim=64,
            hidden_size=128,
            lstm_layers=2,
            decoder_blocks=2,
            base_channels=16,
            min_channels=4,
            height=16,
            width=16,
        ),
        pyramid=PyramidSpec(factors=(2, 4)),
        perceptual=False,
        plateau_window=50,
    )


def mean_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean(np.abs(np.asarray(a, np.float64) - np.asarray(b, np.float64))))


def test_overfits_short_clean_video(desk_task, square_video):
    result = FittingService().fit(square_video, desk_task)
    assert mean_abs(result.frames, square_video.frames) < 0.02


def test_interpolation_factor_four(desk_task, square_video):
    cfg = desk_task.updated(
        kind=TaskKind.INTERPOLATE, epochs=600, interpolation=InterpolationRequest.from_factor(4)
    )
    result = TaskService().interpolate(square_video, cfg)
    assert result.video.length == 9
    assert result.held_out == [1, 2, 3, 5, 6, 7]
    np.testing.assert_allclose(result.video.frames[::4], result.fit.frames, atol=1e-5)


def test_superresolution_is_cycle_consistent(desk_task):
    clean = moving_square_video(length=3, height=112, width=64)
    lowres = make_lowres(clean, 4)
    assert lowres.frame_shape == (3, 28, 16)

    cfg = desk_task.updated(kind=TaskKind.SUPERRES, epochs=800, sr_scale=4)
    result = TaskService().superresolve(lowres, cfg)
    assert result.video.frame_shape == (3, 112, 64)
    assert mean_abs(downsample_array(result.video.frames, 4), lowres.frames) <= 0.03


def test_denoising_improves_psnr(desk_task):
    clean = moving_square_video(length=15, height=48, width=48)
    noisy = add_gaussian(clean, 20.0, seed=3)
    cfg = desk_task.updated(epochs=400, model=desk_task.model.updated(height=48, width=48))
    result = TaskService().denoise(noisy, cfg)

    before = np.mean([psnr(n, c) for n, c in zip(noisy.frames, clean.frames)])
    after = np.mean([psnr(r, c) for r, c in zip(result.video.frames, clean.frames)])
    assert after > before


async def test_convergence_ordering_and_plateau_snapshot(desk_task):
    clean = moving_square_video(length=3, height=32, width=32)
    cfg = desk_task.updated(
        epochs=1500,
        plateau_window=50,
        plateau_tol=0.02,
        model=desk_task.model.updated(height=32, width=32),
    )
    experiment = ConvergenceExperiment(cfg, jobs=5)
    outcome = await experiment.run(clean, seeds=[0, 1, 2, 3, 4], threshold=1e-2)
    report = outcome.report
    medians = [s.median_epochs_to_threshold for s in report.settings]

    assert report.corrupted_frame == 1
    assert medians[0] <= cfg.epochs
    assert report.ordering_holds, medians

    # o snapshot no platô da perda completa ainda não memorizou o quadro de ruído
    full = report.settings[-1]
    assert full.snapshot_psnr is not None
    assert full.snapshot_psnr > report.noisy_psnr
