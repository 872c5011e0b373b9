"""
Métricas de qualidade: PSNR, SSIM e informação mútua normalizada.

Quadros são arrays [C, H, W] (ou [H, W]) com valores em [0, 1].
"""
from functools import lru_cache
from typing import Any, Optional, Sequence

import numpy as np
from scipy.signal import correlate2d

from src.core.exceptions import DimensionMismatchException, ValidationException
from src.schemas.report import FitSummary, FrameMetrics, MetricsAggregate, MetricsReport

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
NMI_BINS = 64


def _same_shape(operation: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchException(operation, "shape", a.shape, b.shape)


def _channels(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    return frame[None] if frame.ndim == 2 else frame


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """
    10·log10(peak² / MSE), limitado a 99 dB quando MSE = 0.

    Raises:
        DimensionMismatchException: Formas diferentes
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _same_shape("psnr", a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(peak * peak / mse), PSNR_CAP))


@lru_cache(maxsize=4)
def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Janela gaussiana 2D normalizada (soma 1)."""
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    profile = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    window = np.outer(profile, profile)
    window /= window.sum()
    window.setflags(write=False)
    return window


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """
    SSIM médio sobre a região válida, média entre canais.

    Janela gaussiana 11×11 (σ = 1.5), C1 = (0.01·peak)², C2 = (0.03·peak)².

    Raises:
        DimensionMismatchException: Formas diferentes
        ValidationException: Quadro menor que a janela
    """
    x, y = _channels(a), _channels(b)
    _same_shape("ssim", x, y)
    if x.shape[-2] < SSIM_WINDOW or x.shape[-1] < SSIM_WINDOW:
        raise ValidationException(
            f"quadro {x.shape[-2]}×{x.shape[-1]} menor que a janela SSIM "
            f"{SSIM_WINDOW}×{SSIM_WINDOW}",
            field="frame",
        )
    window = gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    def blur(image: np.ndarray) -> np.ndarray:
        return correlate2d(image, window, mode="valid")

    scores = []
    for channel_x, channel_y in zip(x, y):
        mu_x, mu_y = blur(channel_x), blur(channel_y)
        var_x = blur(channel_x * channel_x) - mu_x * mu_x
        var_y = blur(channel_y * channel_y) - mu_y * mu_y
        cov = blur(channel_x * channel_y) - mu_x * mu_y
        numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
        denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
        scores.append(float(np.mean(numerator / denominator)))
    return float(np.clip(np.mean(scores), -1.0, 1.0))


def _entropy(probabilities: np.ndarray) -> float:
    nonzero = probabilities[probabilities > 0]
    return float(-np.sum(nonzero * np.log(nonzero)))


def nmi(a: np.ndarray, b: np.ndarray, bins: int = NMI_BINS) -> float:
    """
    Informação mútua normalizada 2·I(A;B) / (H(A) + H(B)) por histograma em [0, 1].

    Dois quadros constantes (H(A) + H(B) = 0) retornam 1.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionMismatchException("nmi", "shape", a.shape, b.shape)
    joint, _, _ = np.histogram2d(a, b, bins=bins, range=[[0.0, 1.0], [0.0, 1.0]])
    joint /= joint.sum()
    p_a = joint.sum(axis=1)
    p_b = joint.sum(axis=0)
    h_a, h_b = _entropy(p_a), _entropy(p_b)
    if h_a + h_b == 0.0:
        return 1.0
    mutual = h_a + h_b - _entropy(joint)
    return float(np.clip(2.0 * mutual / (h_a + h_b), 0.0, 1.0))


def nmi_matrix(frames: np.ndarray, bins: int = NMI_BINS) -> list[list[float]]:
    """NMI entre todos os pares de quadros [T, ...]."""
    count = len(frames)
    matrix = [[1.0] * count for _ in range(count)]
    for i in range(count):
        for j in range(i + 1, count):
            value = nmi(frames[i], frames[j], bins)
            matrix[i][j] = matrix[j][i] = value
    return matrix


def _ssim_or_none(a: np.ndarray, b: np.ndarray) -> Optional[float]:
    if min(a.shape[-2:]) < SSIM_WINDOW:
        return None
    return ssim(a, b)


def frame_metrics(
    restored: np.ndarray, reference: np.ndarray, indices: Optional[Sequence[int]] = None
) -> list[FrameMetrics]:
    """
    PSNR/SSIM por quadro; SSIM é omitido para quadros menores que a janela.

    Raises:
        ValidationException: Contagens de quadros diferentes
    """
    if len(restored) != len(reference):
        raise ValidationException(
            f"{len(restored)} quadros restaurados para {len(reference)} de referência",
            field="frames",
        )
    selected = list(indices) if indices is not None else list(range(len(restored)))
    return [
        FrameMetrics(
            index=i,
            psnr=psnr(restored[i], reference[i]),
            ssim=_ssim_or_none(restored[i], reference[i]),
        )
        for i in selected
    ]


def aggregate(metrics: Sequence[FrameMetrics]) -> MetricsAggregate:
    ssims = [m.ssim for m in metrics if m.ssim is not None]
    return MetricsAggregate(
        mean_psnr=float(np.mean([m.psnr for m in metrics])) if metrics else 0.0,
        mean_ssim=float(np.mean(ssims)) if ssims else None,
        frame_count=len(metrics),
    )


def build_metrics_report(
    command: str,
    restored: np.ndarray,
    reference: Optional[np.ndarray] = None,
    indices: Optional[Sequence[int]] = None,
    degraded: Optional[np.ndarray] = None,
    fit: Optional[FitSummary] = None,
    config: Optional[dict[str, Any]] = None,
    noise: Optional[list[dict[str, Any]]] = None,
    include_nmi: bool = False,
) -> MetricsReport:
    """
    Monta o MetricsReport de uma execução.

    Args:
        command: Subcomando
        restored: Quadros produzidos [T, C, H, W]
        reference: Quadros de referência (sem referência, só o resumo do ajuste)
        indices: Quadros avaliados (ex: apenas os intermediários sintetizados)
        degraded: Entrada degradada, para a linha de base contra a referência
        fit: Resumo do ajuste
        config: Eco da configuração
        noise: Degradações aplicadas
        include_nmi: Calcula a matriz NMI dos quadros restaurados
    """
    frames: list[FrameMetrics] = []
    summary: Optional[MetricsAggregate] = None
    baseline: Optional[MetricsAggregate] = None
    if reference is not None:
        frames = frame_metrics(restored, reference, indices)
        summary = aggregate(frames)
        if degraded is not None and len(degraded) == len(reference):
            if degraded.shape == reference.shape:
                baseline = aggregate(frame_metrics(degraded, reference, indices))
    return MetricsReport(
        command=command,
        frames=frames,
        aggregate=summary,
        baseline=baseline,
        nmi=nmi_matrix(restored) if include_nmi else None,
        fit=fit,
        config=config or {},
        noise=noise or [],
    )
