"""
Downsamplers fixos (não treináveis) usados pela perda de pirâmide e pela SR.

Ambos são separáveis: y = R · x · Cᵀ, com matrizes que dependem apenas do
tamanho, do fator e do núcleo.
"""
from functools import lru_cache

import numpy as np

from src.core.exceptions import ValidationException
from src.diffcore.ops import resample2d
from src.diffcore.tensor import Tensor
from src.domain.models import DownsampleKernel

# Keys (a = −0.5), mesmo núcleo do bicúbico "clássico".
CUBIC_A = -0.5


def _cubic(x: np.ndarray) -> np.ndarray:
    x = np.abs(x)
    near = (CUBIC_A + 2.0) * x**3 - (CUBIC_A + 3.0) * x**2 + 1.0
    far = CUBIC_A * x**3 - 5.0 * CUBIC_A * x**2 + 8.0 * CUBIC_A * x - 4.0 * CUBIC_A
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


@lru_cache(maxsize=64)
def area_matrix(size: int, factor: int) -> np.ndarray:
    """Matriz [size/factor, size] de média por blocos."""
    out = size // factor
    matrix = np.zeros((out, size), dtype=np.float64)
    for row in range(out):
        matrix[row, row * factor : (row + 1) * factor] = 1.0 / factor
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=64)
def bicubic_matrix(size: int, factor: int) -> np.ndarray:
    """
    Matriz [size/factor, size] do bicúbico com antialiasing.

    O núcleo é esticado pelo fator, as bordas são replicadas e cada linha soma 1.
    """
    out = size // factor
    matrix = np.zeros((out, size), dtype=np.float64)
    support = 2.0 * factor
    for row in range(out):
        center = (row + 0.5) * factor - 0.5
        taps = np.arange(int(np.floor(center - support)), int(np.ceil(center + support)) + 1)
        weights = _cubic((taps - center) / factor)
        for tap, weight in zip(np.clip(taps, 0, size - 1), weights):
            matrix[row, tap] += weight
        matrix[row] /= matrix[row].sum()
    matrix.setflags(write=False)
    return matrix


def _matrix(size: int, factor: int, kernel: DownsampleKernel) -> np.ndarray:
    if kernel is DownsampleKernel.BICUBIC:
        return bicubic_matrix(size, factor)
    return area_matrix(size, factor)


def check_divisible(height: int, width: int, factor: int) -> None:
    """
    Raises:
        ValidationException: Se H ou W não for múltiplo do fator
    """
    if factor < 1:
        raise ValidationException(f"fator de downsample inválido: {factor}", field="factor")
    if height % factor or width % factor:
        raise ValidationException(
            f"dimensões {height}×{width} não são divisíveis por {factor}; "
            f"aplique padding até um múltiplo de {factor}",
            field="factor",
            details={"height": height, "width": width, "factor": factor},
        )


def downsample(
    x: Tensor, factor: int, kernel: DownsampleKernel = DownsampleKernel.AREA
) -> Tensor:
    """
    Reduz os dois últimos eixos por `factor`.

    Args:
        x: Quadro(s) [..., H, W]
        factor: Fator inteiro (1 = identidade)
        kernel: area (média por blocos) ou bicubic

    Returns:
        Tensor: [..., H/factor, W/factor]
    """
    height, width = x.shape[-2], x.shape[-1]
    check_divisible(height, width, factor)
    if factor == 1:
        return x
    kernel = DownsampleKernel(kernel)
    return resample2d(x, _matrix(height, factor, kernel), _matrix(width, factor, kernel))


def downsample_array(
    x: np.ndarray, factor: int, kernel: DownsampleKernel = DownsampleKernel.AREA
) -> np.ndarray:
    """Versão sem grafo de `downsample`, no dtype de entrada."""
    return downsample(Tensor(x), factor, kernel).data
