"""
Harness de degradação: ruído gaussiano, ruído de Poisson aditivo centrado,
substituição de quadro por ruído e geração de baixa resolução.

Todas as saídas ficam em [0, 1] e são reprodutíveis a partir de (NoiseSpec, seed).
"""
from typing import Optional, Sequence

import numpy as np

from src.core.exceptions import ValidationException
from src.core.logger import get_logger
from src.domain.models import DownsampleKernel, NoiseKind, NoiseSpec, VideoSequence
from src.losses.downsample import downsample_array

logger = get_logger(__name__)

PIXEL_RANGE = 255.0


def _frame_indices(video: VideoSequence, frames: Optional[Sequence[int]]) -> list[int]:
    if frames is None:
        return list(range(video.length))
    indices = sorted(set(int(i) for i in frames))
    for index in indices:
        if not 0 <= index < video.length:
            raise ValidationException(
                f"índice de quadro {index} fora de [0, {video.length})",
                field="frames",
                details={"index": index, "length": video.length},
            )
    return indices


def add_gaussian(
    video: VideoSequence, sigma: float, seed: int = 0, frames: Optional[Sequence[int]] = None
) -> VideoSequence:
    """
    y = clip(x + n/255), n ~ N(0, σ²) i.i.d. por pixel.

    Args:
        video: Sequência limpa
        sigma: Desvio padrão em unidades de [0, 255]
        seed: Semente do gerador
        frames: Quadros afetados (None = todos)
    """
    if sigma <= 0:
        raise ValidationException("sigma deve ser > 0", field="sigma")
    indices = _frame_indices(video, frames)
    rng = np.random.default_rng(seed)
    noisy = video.frames.astype(np.float64)
    noise = rng.normal(0.0, sigma, size=(len(indices),) + noisy.shape[1:])
    noisy[indices] = noisy[indices] + noise / PIXEL_RANGE
    return video.with_frames(np.clip(noisy, 0.0, 1.0).astype(np.float32))


def add_poisson(
    video: VideoSequence, rate: float, seed: int = 0, frames: Optional[Sequence[int]] = None
) -> VideoSequence:
    """
    y = clip(x + (P(λ) − λ)/255), modelo aditivo centrado.

    Maior λ significa mais ruído (variância λ/255² antes do clip).
    """
    if rate <= 0:
        raise ValidationException("rate (λ) deve ser > 0", field="rate")
    indices = _frame_indices(video, frames)
    rng = np.random.default_rng(seed)
    noisy = video.frames.astype(np.float64)
    draws = rng.poisson(rate, size=(len(indices),) + noisy.shape[1:]).astype(np.float64)
    noisy[indices] = noisy[indices] + (draws - rate) / PIXEL_RANGE
    return video.with_frames(np.clip(noisy, 0.0, 1.0).astype(np.float32))


def replace_frame_with_noise(video: VideoSequence, index: int, seed: int = 0) -> VideoSequence:
    """
    Substitui o quadro `index` por pixels uniformes em (0, 1); os demais ficam intactos.

    Raises:
        ValidationException: Índice fora do intervalo
    """
    _frame_indices(video, [index])
    rng = np.random.default_rng(seed)
    frames = video.frames.copy()
    frames[index] = rng.uniform(0.0, 1.0, size=frames.shape[1:]).astype(np.float32)
    return video.with_frames(frames)


def make_lowres(
    video: VideoSequence, scale: int, kernel: DownsampleKernel = DownsampleKernel.AREA
) -> VideoSequence:
    """Downscale de cada quadro com o mesmo downsampler da perda de SR."""
    if scale == 1:
        return video.with_frames(video.frames.copy())
    return video.with_frames(downsample_array(video.frames, scale, kernel))


def apply_noise_spec(video: VideoSequence, spec: NoiseSpec) -> VideoSequence:
    """Aplica uma NoiseSpec."""
    logger.info("Aplicando degradação", extra={"noise": spec.model_dump(mode="json")})
    if spec.kind is NoiseKind.GAUSSIAN:
        return add_gaussian(video, spec.sigma or 0.0, spec.seed, spec.frames)
    if spec.kind is NoiseKind.POISSON:
        return add_poisson(video, spec.rate or 0.0, spec.seed, spec.frames)
    if spec.kind is NoiseKind.FRAME_REPLACE:
        degraded = video
        for offset, index in enumerate(spec.frames or ()):
            degraded = replace_frame_with_noise(degraded, index, spec.seed + offset)
        return degraded
    return make_lowres(video, spec.scale or 1)


def apply_noise_specs(video: VideoSequence, specs: Sequence[NoiseSpec]) -> VideoSequence:
    """Compõe degradações na ordem dada (ex: baixa resolução e depois ruído gaussiano)."""
    for spec in specs:
        video = apply_noise_spec(video, spec)
    return video
