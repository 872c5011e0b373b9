"""
Sequências sintéticas para execuções de bancada e testes.
"""
from typing import Optional

import numpy as np

from src.domain.models import MaskSequence, VideoSequence


def moving_square_video(
    length: int = 3,
    height: int = 32,
    width: int = 32,
    channels: int = 3,
    square: Optional[int] = None,
    step: int = 2,
    seed: int = 0,
) -> VideoSequence:
    """
    Quadrado colorido deslizando sobre um fundo em gradiente suave.

    Args:
        length: Número de quadros T
        height: Altura H
        width: Largura W
        channels: 1 (cinza) ou 3 (RGB)
        square: Lado do quadrado (padrão: H/4)
        step: Deslocamento horizontal por quadro, em pixels
        seed: Semente da cor do quadrado
    """
    rng = np.random.default_rng(seed)
    side = square or max(height // 4, 2)
    rows = np.linspace(0.2, 0.5, height, dtype=np.float32)[:, None]
    cols = np.linspace(0.1, 0.4, width, dtype=np.float32)[None, :]
    background = np.stack([rows + cols * (c + 1) / channels for c in range(channels)]) / 1.5
    color = rng.uniform(0.6, 0.95, size=(channels, 1, 1)).astype(np.float32)

    frames = np.empty((length, channels, height, width), dtype=np.float32)
    top = (height - side) // 2
    for t in range(length):
        left = (t * step) % max(width - side, 1)
        frame = background.copy()
        frame[:, top : top + side, left : left + side] = color
        frames[t] = frame
    return VideoSequence(frames=np.clip(frames, 0.0, 1.0), source="synthetic")


def center_hole_mask(height: int, width: int, hole: Optional[int] = None) -> MaskSequence:
    """Máscara estacionária com um buraco quadrado central (0 = buraco)."""
    side = hole or max(min(height, width) // 4, 1)
    mask = np.ones((1, 1, height, width), dtype=np.float32)
    top, left = (height - side) // 2, (width - side) // 2
    mask[:, :, top : top + side, left : left + side] = 0.0
    return MaskSequence(masks=mask, stationary=True)
