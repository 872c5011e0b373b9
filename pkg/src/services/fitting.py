import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from src.core.config import settings
from src.core.exceptions import (
    FitDivergedException,
    NonFiniteValueException,
    ResourceEstimateException,
    ValidationException,
)
from src.core.logger import get_logger, log_epoch, log_fit_end, log_fit_start
from src.diffcore.optim import AdamState, adam_step, zero_grads
from src.diffcore.tensor import Tensor
from src.domain.interfaces import IFeatureExtractor
from src.domain.models import (
    FitResult,
    LossCurves,
    ModelConfig,
    SkipMode,
    TaskConfig,
    TaskKind,
    VideoSequence,
)
from src.losses.objectives import FinalObjective
from src.model.checkpoint import save_checkpoint
from src.model.fdnet import block_widths
from src.model.vdp import VideoDynamicsPrior

logger = get_logger(__name__)

SINGLE_FRAME_NORM_WARNING = "batch_norm_single_frame"

EpochCallback = Callable[[int, dict[str, float], np.ndarray], None]

_BYTES_PER_FLOAT = 4
# dados, gradiente e dois momentos do Adam
_OPTIMIZER_COPIES = 4


def estimate_fit_bytes(config: ModelConfig, length: int) -> int:
    """
    Estimativa grosseira da memória de pico de um ajuste (parâmetros + fita de uma época).

    Args:
        config: Configuração do modelo (formato de saída já ajustado)
        length: Número de quadros decodificados por época
    """
    latent, hidden = config.latent_dim, config.hidden_size
    lfp = 2 * latent * hidden + hidden + latent
    lfp += config.lstm_layers * (8 * hidden * hidden + 4 * hidden)

    grid = config.base_channels * config.grid_height * config.grid_width
    fd = latent * grid + grid
    activations = grid
    height, width = config.grid_height, config.grid_width
    feature = config.base_channels
    for c_in, c_out in block_widths(config):
        height, width = height * 2, width * 2
        pixels = height * width
        fd += c_out * c_in * 9 + 3 * c_out
        # upsample + janelas da convolução + conv/norm/ativação + atalho
        activations += c_in * pixels * 10 + c_out * pixels * 3 + (c_in + c_out) * pixels
        feature = c_in if config.skip_mode is SkipMode.ADD else c_in + c_out
    pixels = config.height * config.width
    fd += config.channels * feature * 9 + config.channels
    activations += feature * pixels * 9 + 2 * config.channels * pixels

    per_step_lstm = config.lstm_layers * 12 * hidden + 2 * latent
    total_floats = (lfp + fd) * _OPTIMIZER_COPIES + length * (activations + per_step_lstm)
    return int(total_floats * _BYTES_PER_FLOAT)


def check_resource_estimate(
    config: ModelConfig, length: int, limit_bytes: Optional[int] = None
) -> int:
    """
    Raises:
        ResourceEstimateException: Se a estimativa exceder o limite configurado
    """
    limit = limit_bytes or settings.max_fit_bytes
    estimated = estimate_fit_bytes(config, length)
    if estimated > limit:
        raise ResourceEstimateException(estimated_bytes=estimated, limit_bytes=limit)
    return estimated


def _plateau_reached(best: Sequence[float], index: int, window: int, tol: float) -> bool:
    if index < window:
        return False
    previous = best[index - window]
    if previous == 0.0:
        return True
    return (previous - best[index]) / abs(previous) < tol


def detect_plateau(loss_curve: Sequence[float], window: int, tol: float) -> Optional[int]:
    """
    Primeira época (1-based) em que a melhora relativa do mínimo acumulado, medida
    contra `window` épocas antes, fica abaixo de `tol`.

    Args:
        loss_curve: Perda por época
        window: Tamanho da janela (>= 2)
        tol: Tolerância relativa

    Returns:
        Optional[int]: Época do platô, ou None se nunca ocorrer
    """
    if window < 2:
        raise ValidationException("window deve ser >= 2", field="plateau_window")
    best = np.minimum.accumulate(np.asarray(loss_curve, dtype=np.float64)) if loss_curve else []
    for index in range(len(best)):
        if _plateau_reached(best, index, window, tol):
            return index + 1
    return None


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.mean(diff * diff))


@dataclass
class FitOutcome:
    """Modelo ajustado e o resultado serializável."""

    model: VideoDynamicsPrior
    result: FitResult


class FittingService:
    """
    Motor de otimização por vídeo.
    Cada chamada cria um modelo, um estado de Adam e uma fita próprios.
    """

    def __init__(self, extractor: Optional[IFeatureExtractor] = None) -> None:
        """
        Args:
            extractor: φ compartilhado (somente leitura) para o termo perceptual
        """
        self.extractor = extractor

    def objective_for(self, video: VideoSequence, cfg: TaskConfig) -> FinalObjective:
        """Objetivo padrão: perda final contra os próprios quadros de entrada."""
        return FinalObjective(
            video.frames,
            cfg.effective_weights,
            self.extractor if cfg.perceptual else None,
            cfg.pyramid,
        )

    def fit_model(
        self,
        video: VideoSequence,
        cfg: TaskConfig,
        objective: Optional[FinalObjective] = None,
        frame_shape: Optional[tuple[int, int, int]] = None,
        clean: Optional[np.ndarray] = None,
        callback: Optional[EpochCallback] = None,
        checkpoint_dir: Optional[Path] = None,
    ) -> FitOutcome:
        """
        Ajusta o modelo à sequência.

        Cada época: zera gradientes → rollout a partir de z_0 → objetivo → backward → Adam.

        Args:
            video: Sequência observada (define T)
            cfg: Configuração da tarefa
            objective: Objetivo da tarefa (padrão: perda final contra `video`)
            frame_shape: (C, H, W) da saída do decodificador (padrão: o do vídeo)
            clean: Quadros limpos para a curva MSE-ao-limpo (opcional)
            callback: Chamado ao fim de cada época com (época, termos, quadros)
            checkpoint_dir: Onde gravar o último checkpoint válido se o ajuste divergir

        Returns:
            FitOutcome: Modelo treinado e FitResult

        Raises:
            ValidationException: Sequência curta demais
            ResourceEstimateException: Configuração grande demais
            FitDivergedException: Perda ou gradiente não finito
        """
        length = video.length
        minimum = 3 if cfg.kind is TaskKind.INTERPOLATE else 1
        if length < minimum:
            raise ValidationException(
                f"a tarefa '{cfg.kind.value}' exige ao menos {minimum} quadros", field="frames"
            )

        channels, height, width = frame_shape or video.frame_shape
        model_config = cfg.seeded_model().with_frame_shape(channels, height, width)
        estimated = check_resource_estimate(model_config, length)

        objective = objective or self.objective_for(video, cfg)
        model = VideoDynamicsPrior(model_config)
        leaves = model.parameters()
        state = AdamState(learning_rate=cfg.learning_rate)

        log_fit_start(
            logger,
            task=cfg.kind.value,
            frames=length,
            parameters=model.parameter_count,
            epochs=cfg.epochs,
            estimated_bytes=estimated,
        )

        curves = LossCurves()
        epoch_seconds: list[float] = []
        best: list[float] = []
        plateau_epoch: Optional[int] = None
        early_stop_epoch: Optional[int] = None
        snapshot: Optional[np.ndarray] = None
        last_good: Optional[dict[str, np.ndarray]] = None
        start_time = time.perf_counter()

        for epoch in range(1, cfg.epochs + 1):
            epoch_start = time.perf_counter()
            zero_grads(leaves)
            try:
                frames, _ = model.reconstruct(length)
            except NonFiniteValueException as e:
                raise self._diverged(epoch, e.message, last_good, checkpoint_dir) from e
            terms = objective(frames)
            values = terms.as_floats()

            if not np.isfinite(values["total"]):
                raise self._diverged(epoch, "perda não finita", last_good, checkpoint_dir)

            observed = objective.observe(Tensor(frames.data)).data
            curves.append(
                values["total"],
                values["rec"],
                values["spl"],
                values["var"],
                _mse(observed, objective.target.data),
            )
            if clean is not None:
                curves.mse_to_clean.append(_mse(frames.data, clean))

            best.append(min(values["total"], best[-1]) if best else values["total"])
            if plateau_epoch is None and _plateau_reached(
                best, epoch - 1, cfg.plateau_window, cfg.plateau_tol
            ):
                plateau_epoch = epoch
                if cfg.capture_plateau_snapshot or cfg.early_stop:
                    snapshot = frames.data.copy()
                logger.info("Platô detectado", extra={"epoch": epoch, "loss": values["total"]})

            level = logging.INFO if epoch % settings.log_every_n_epochs == 0 else logging.DEBUG
            log_epoch(logger, epoch, values["total"], level=level, rec=values["rec"])

            if callback is not None:
                callback(epoch, values, frames.data)

            if cfg.early_stop and plateau_epoch is not None:
                early_stop_epoch = epoch
                epoch_seconds.append(time.perf_counter() - epoch_start)
                break

            if epoch == 1 or epoch % settings.log_every_n_epochs == 0:
                last_good = {name: array.copy() for name, array in model.state_dict().items()}

            terms.total.backward()
            try:
                adam_step(leaves, state)
            except NonFiniteValueException as e:
                raise self._diverged(epoch, e.message, last_good, checkpoint_dir) from e
            epoch_seconds.append(time.perf_counter() - epoch_start)

        final_frames, final_latents = model.reconstruct(length)
        warnings: list[str] = []
        if model.norm_fallback:
            warnings.append(SINGLE_FRAME_NORM_WARNING)
            logger.warning(
                "Normalização em lote com um único quadro: usando estatísticas por instância",
                extra={"event_type": "fit_warning", "warning": SINGLE_FRAME_NORM_WARNING},
            )
        result = FitResult(
            parameters={name: array.copy() for name, array in model.state_dict().items()},
            curves=curves,
            frames=final_frames.data.copy(),
            latents=np.stack([z.data for z in final_latents]).astype(np.float32),
            epoch_seconds=epoch_seconds,
            epochs_run=len(curves.total),
            early_stop_epoch=early_stop_epoch,
            plateau_epoch=plateau_epoch,
            plateau_snapshot=snapshot,
            warnings=warnings,
        )

        log_fit_end(
            logger,
            epochs_run=result.epochs_run,
            final_loss=result.final_loss,
            duration_ms=(time.perf_counter() - start_time) * 1000,
            plateau_epoch=plateau_epoch,
        )
        return FitOutcome(model=model, result=result)

    def fit(self, video: VideoSequence, cfg: TaskConfig, **kwargs) -> FitResult:
        """Ajusta e devolve apenas o FitResult."""
        return self.fit_model(video, cfg, **kwargs).result

    @staticmethod
    def _diverged(
        epoch: int,
        reason: str,
        last_good: Optional[dict[str, np.ndarray]],
        checkpoint_dir: Optional[Path],
    ) -> FitDivergedException:
        checkpoint_path: Optional[str] = None
        if last_good is not None and checkpoint_dir is not None:
            checkpoint_path = str(save_checkpoint(last_good, Path(checkpoint_dir) / "last-good"))
        logger.error(
            "Ajuste divergiu",
            extra={"epoch": epoch, "reason": reason, "checkpoint": checkpoint_path},
        )
        return FitDivergedException(epoch=epoch, checkpoint_path=checkpoint_path, reason=reason)


def fit(
    video: VideoSequence, cfg: TaskConfig, extractor: Optional[IFeatureExtractor] = None
) -> FitResult:
    """Atalho funcional para `FittingService(extractor).fit`."""
    return FittingService(extractor).fit(video, cfg)
