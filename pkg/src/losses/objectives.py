"""
Perdas de reconstrução, pirâmide espacial e variação, e os objetivos por tarefa.

Convenções:
    - entradas em lote [T, C, H, W] (um quadro [C, H, W] é tratado como T = 1);
    - cada termo é a média por elemento de cada quadro, somada no tempo;
    - termos com peso zero não são avaliados.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.core.exceptions import DimensionMismatchException, ValidationException
from src.core.logger import get_logger
from src.diffcore.ops import absolute
from src.diffcore.tensor import Tensor, as_tensor
from src.domain.interfaces import IFeatureExtractor
from src.domain.models import LossWeights, PyramidSpec
from src.losses.downsample import check_divisible, downsample

logger = get_logger(__name__)

Target = np.ndarray | Tensor


@dataclass
class LossTerms:
    """Termos ponderáveis e o total Σ λ·termo."""

    rec: Tensor
    spl: Tensor
    var: Tensor
    total: Tensor

    def as_floats(self) -> dict[str, float]:
        return {
            "total": float(self.total.data),
            "rec": float(self.rec.data),
            "spl": float(self.spl.data),
            "var": float(self.var.data),
        }


def _batched(x: Target) -> Tensor:
    tensor = as_tensor(x)
    if tensor.ndim == 3:
        return tensor.reshape(1, *tensor.shape)
    if tensor.ndim != 4:
        raise DimensionMismatchException("loss", "ndim", "3 or 4", tensor.ndim)
    return tensor


def _check_same(operation: str, a: Tensor, b: Tensor) -> None:
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchException(operation, "time", a.shape[0], b.shape[0])
    if a.shape != b.shape:
        raise DimensionMismatchException(operation, "frame", a.shape[1:], b.shape[1:])


def _zero(like: Tensor) -> Tensor:
    return Tensor(np.zeros((), dtype=like.dtype))


def framewise_l1(target: Tensor, pred: Tensor) -> Tensor:
    """Σ_t mean|X_t − X̂_t|."""
    return absolute(pred - target).mean(axis=(1, 2, 3)).sum()


def _perceptual(
    target_taps: list[np.ndarray], pred: Tensor, extractor: IFeatureExtractor
) -> Tensor:
    total: Optional[Tensor] = None
    for target_tap, pred_tap in zip(target_taps, extractor.features(pred)):
        term = framewise_l1(Tensor(target_tap), pred_tap)
        total = term if total is None else total + term
    return total if total is not None else _zero(pred)


def _pyramid(levels: dict[int, np.ndarray], pred: Tensor, spec: PyramidSpec) -> Tensor:
    total: Optional[Tensor] = None
    for factor in spec.factors:
        term = framewise_l1(Tensor(levels[factor]), downsample(pred, factor, spec.kernel))
        total = term if total is None else total + term
    return total if total is not None else _zero(pred)


def _pyramid_levels(target: Tensor, spec: PyramidSpec) -> dict[int, np.ndarray]:
    check_divisible(target.shape[-2], target.shape[-1], spec.max_factor)
    return {factor: downsample(target, factor, spec.kernel).data for factor in spec.factors}


# === Perdas individuais ===


def rec_loss(target: Target, pred: Target, extractor: Optional[IFeatureExtractor] = None) -> Tensor:
    """
    L1 médio + Σ_taps L1 médio entre φ(X) e φ(X̂).

    Args:
        target: X (constante)
        pred: X̂ (diferenciável)
        extractor: φ; None desliga o termo perceptual

    Raises:
        DimensionMismatchException: Se as formas divergirem
    """
    x, x_hat = _batched(target), _batched(pred)
    _check_same("rec_loss", x, x_hat)
    loss = framewise_l1(x, x_hat)
    if extractor is not None:
        target_taps = [tap.data for tap in extractor.features(Tensor(x.data))]
        loss = loss + _perceptual(target_taps, x_hat, extractor)
    return loss


def pyramid_loss(target: Target, pred: Target, spec: Optional[PyramidSpec] = None) -> Tensor:
    """
    Σ_{k ∈ fatores} L1 médio entre d_k(X) e d_k(X̂).

    Raises:
        ValidationException: Se H ou W não for múltiplo do maior fator
    """
    spec = spec or PyramidSpec()
    x, x_hat = _batched(target), _batched(pred)
    _check_same("pyramid_loss", x, x_hat)
    return _pyramid(_pyramid_levels(x, spec), x_hat, spec)


def variation_loss(pred: Target) -> Tensor:
    """
    Variação total anisotrópica L1 sobre i = 1..H−1, j = 1..W−1, normalizada por C·H·W.
    """
    x = _batched(pred)
    _, channels, height, width = x.shape
    corner = x[:, :, 1:, 1:]
    vertical = absolute(corner - x[:, :, :-1, 1:])
    horizontal = absolute(corner - x[:, :, 1:, :-1])
    per_frame = vertical.sum(axis=(1, 2, 3)) + horizontal.sum(axis=(1, 2, 3))
    return (per_frame * (1.0 / (channels * height * width))).sum()


# === Objetivos compostos ===


def _combine(
    weights: LossWeights,
    rec: Callable[[], Tensor],
    spl: Callable[[], Tensor],
    var: Callable[[], Tensor],
    like: Tensor,
) -> LossTerms:
    rec_term = rec() if weights.rec > 0 else _zero(like)
    spl_term = spl() if weights.spl > 0 else _zero(like)
    var_term = var() if weights.var > 0 else _zero(like)
    total = rec_term * weights.rec + spl_term * weights.spl + var_term * weights.var
    return LossTerms(rec=rec_term, spl=spl_term, var=var_term, total=total)


class FinalObjective:
    """
    Objetivo Σ_t λ_rec·L_rec + λ_spl·L_spl + λ_var·L_var com alvo fixo.

    As características e os níveis da pirâmide do alvo são calculados uma vez.
    `observe` transforma a predição antes dos termos de reconstrução e pirâmide
    (downsample na SR, máscara na remoção); o termo de variação sempre usa X̂.
    """

    def __init__(
        self,
        target: Target,
        weights: LossWeights,
        extractor: Optional[IFeatureExtractor] = None,
        spec: Optional[PyramidSpec] = None,
        observe: Optional[Callable[[Tensor], Tensor]] = None,
    ) -> None:
        self.target = _batched(target).detach()
        self.weights = weights
        self.extractor = extractor
        self.spec = spec or PyramidSpec()
        self.observe = observe or (lambda pred: pred)
        self._target_taps = (
            [tap.data for tap in extractor.features(self.target)]
            if extractor is not None and weights.rec > 0
            else []
        )
        self._levels = _pyramid_levels(self.target, self.spec) if weights.spl > 0 else {}

    def __call__(self, pred: Tensor) -> LossTerms:
        x_hat = _batched(pred)
        observed = self.observe(x_hat)
        _check_same("final_loss", self.target, observed)

        def rec() -> Tensor:
            loss = framewise_l1(self.target, observed)
            if self.extractor is not None:
                loss = loss + _perceptual(self._target_taps, observed, self.extractor)
            return loss

        return _combine(
            self.weights,
            rec,
            lambda: _pyramid(self._levels, observed, self.spec),
            lambda: variation_loss(x_hat),
            x_hat,
        )


def final_loss_terms(
    video: Target,
    frames: Target,
    weights: LossWeights,
    extractor: Optional[IFeatureExtractor] = None,
    spec: Optional[PyramidSpec] = None,
) -> LossTerms:
    return FinalObjective(video, weights, extractor, spec)(_batched(frames))


def final_loss(
    video: Target,
    frames: Target,
    weights: LossWeights,
    extractor: Optional[IFeatureExtractor] = None,
    spec: Optional[PyramidSpec] = None,
) -> Tensor:
    """
    Perda final somada no tempo.

    Raises:
        DimensionMismatchException: Se os comprimentos divergirem (eixo 'time')
    """
    return final_loss_terms(video, frames, weights, extractor, spec).total


def sr_objective(
    video_lr: Target,
    scale: int,
    weights: LossWeights,
    extractor: Optional[IFeatureExtractor] = None,
    spec: Optional[PyramidSpec] = None,
) -> FinalObjective:
    """
    Objetivo de super-resolução: rec/spl comparam X_lr com d_sc(X̂_hr).

    Fatores da pirâmide que não dividem a resolução baixa são descartados.
    """
    spec = spec or PyramidSpec()
    target = _batched(video_lr)
    height, width = target.shape[-2], target.shape[-1]
    usable = tuple(f for f in spec.factors if height % f == 0 and width % f == 0)
    if usable != spec.factors:
        logger.warning(
            "Fatores da pirâmide descartados na SR",
            extra={"requested": list(spec.factors), "kept": list(usable)},
        )
    if usable:
        spec = spec.model_copy(update={"factors": usable})
    elif weights.spl > 0:
        weights = LossWeights(rec=weights.rec, spl=0.0, var=weights.var)

    def observe(pred: Tensor) -> Tensor:
        reduced = downsample(pred, scale, spec.kernel)
        if reduced.shape[-2:] != target.shape[-2:]:
            raise DimensionMismatchException(
                "sr_loss", "scale", target.shape[-2:], reduced.shape[-2:], details={"scale": scale}
            )
        return reduced

    return FinalObjective(target, weights, extractor, spec, observe=observe)


def sr_loss(
    video_lr: Target,
    pred_hr: Target,
    scale: int,
    weights: LossWeights,
    extractor: Optional[IFeatureExtractor] = None,
    spec: Optional[PyramidSpec] = None,
) -> LossTerms:
    """rec e spl em d_sc(X̂_hr) contra X_lr; var em X̂_hr na resolução alta."""
    return sr_objective(video_lr, scale, weights, extractor, spec)(_batched(pred_hr))


def validate_mask(masks: np.ndarray, target: Tensor) -> np.ndarray:
    """
    Raises:
        ValidationException: Máscara não binária ou com forma incompatível
    """
    masks = np.asarray(masks)
    if masks.ndim == 3:
        masks = masks[None]
    if not np.all((masks == 0) | (masks == 1)):
        raise ValidationException("a máscara deve ser binária {0, 1}", field="mask")
    if masks.shape[0] != target.shape[0] or masks.shape[-2:] != target.shape[-2:]:
        raise DimensionMismatchException("removal_loss", "mask", target.shape, masks.shape)
    return masks.astype(target.dtype)


def removal_objective(
    video: Target,
    masks: np.ndarray,
    weights: LossWeights,
    extractor: Optional[IFeatureExtractor] = None,
    spec: Optional[PyramidSpec] = None,
) -> FinalObjective:
    """
    Objetivo de remoção: rec/spl em m⊙X contra m⊙X̂; var em X̂ inteiro.

    O alvo é montado com `np.where`, então pixels com m = 0 nunca são lidos.
    """
    target = _batched(video)
    mask = validate_mask(masks, target)
    observed_target = np.where(mask > 0, target.data, 0.0).astype(target.dtype)
    mask_tensor = Tensor(mask)
    return FinalObjective(
        observed_target, weights, extractor, spec, observe=lambda pred: pred * mask_tensor
    )


def removal_loss(
    video: Target,
    masks: np.ndarray,
    pred: Target,
    weights: LossWeights,
    extractor: Optional[IFeatureExtractor] = None,
    spec: Optional[PyramidSpec] = None,
) -> LossTerms:
    return removal_objective(video, masks, weights, extractor, spec)(_batched(pred))
