"""
Fixtures compartilhadas: vídeos sintéticos, configurações mínimas e isolamento das factories.
"""
from pathlib import Path

import numpy as np
import pytest

from src.cli.dependencies import cleanup_dependencies
from src.domain.models import LossWeights, ModelConfig, PyramidSpec, TaskConfig, VideoSequence
from src.losses.features import FixedFeatureExtractor
from src.providers.png.frame_store import PngFrameStore
from src.services.synthetic import moving_square_video


@pytest.fixture(autouse=True)
def _fresh_dependencies():
    """Cada teste começa com as factories da CLI vazias."""
    cleanup_dependencies()
    yield
    cleanup_dependencies()


@pytest.fixture
def tiny_model() -> ModelConfig:
    """Modelo pequeno o bastante para ajustar em segundos (1 LSTM, 2 blocos)."""
    return ModelConfig(
        latent_dim=8,
        hidden_size=8,
        lstm_layers=1,
        decoder_blocks=2,
        base_channels=4,
        min_channels=2,
        height=16,
        width=16,
    )


@pytest.fixture
def tiny_task(tiny_model: ModelConfig) -> TaskConfig:
    return TaskConfig(
        weights=LossWeights(rec=1.0, spl=1e-4, var=1e-4),
        epochs=5,
        learning_rate=0.01,
        model=tiny_model,
        pyramid=PyramidSpec(factors=(2, 4)),
        perceptual=False,
        plateau_window=3,
    )


@pytest.fixture
def square_video() -> VideoSequence:
    """3 quadros 16×16 RGB."""
    return moving_square_video(length=3, height=16, width=16)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture
def extractor() -> FixedFeatureExtractor:
    return FixedFeatureExtractor(channels=3)


@pytest.fixture
def frame_dir(tmp_path: Path, square_video: VideoSequence) -> Path:
    """Diretório frame_%05d.png com o vídeo sintético."""
    directory = tmp_path / "frames"
    PngFrameStore(workers=2).save_frames(square_video, directory)
    return directory
