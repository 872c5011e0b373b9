from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from src.core.exceptions import ValidationException
from src.core.logger import get_logger
from src.domain.interfaces import IFeatureExtractor
from src.domain.models import (
    SR_SCALES,
    FitResult,
    InterpolationRequest,
    MaskSequence,
    TaskConfig,
    TaskKind,
    VideoSequence,
)
from src.losses.objectives import removal_objective, sr_objective
from src.model.vdp import VideoDynamicsPrior
from src.services.fitting import FittingService

logger = get_logger(__name__)


@dataclass
class TaskResult:
    """Vídeo produzido por uma tarefa e o ajuste que o gerou."""

    video: VideoSequence
    fit: FitResult
    held_out: list[int] = field(default_factory=list)


def interpolated_length(length: int, request: InterpolationRequest) -> int:
    """(T − 1)·(n_α + 1) + 1."""
    return (length - 1) * (len(request.alphas) + 1) + 1


def synthesized_indices(length: int, request: InterpolationRequest) -> list[int]:
    """Posições dos quadros intermediários na saída interpolada."""
    step = len(request.alphas) + 1
    return [i for i in range(interpolated_length(length, request)) if i % step]


def decode_interpolated(
    model: VideoDynamicsPrior, latents: np.ndarray, request: InterpolationRequest
) -> np.ndarray:
    """
    Decodifica X̂_t, os latentes interpolados em α crescente e X̂_{t+1} para cada par.

    Apenas z é interpolado; extremidades compartilhadas aparecem uma vez.

    Args:
        model: Modelo ajustado (com estatísticas de normalização congeladas)
        latents: [T, D] latentes alinhados aos quadros
        request: Valores de α

    Returns:
        np.ndarray: [(T−1)(n+1)+1, C, H, W]
    """
    latents = np.asarray(latents, dtype=np.float64)
    mixed: list[np.ndarray] = []
    for t in range(latents.shape[0] - 1):
        z_a, z_b = latents[t], latents[t + 1]
        mixed.append(z_a)
        mixed.extend((1.0 - alpha) * z_a + alpha * z_b for alpha in request.alphas)
    mixed.append(latents[-1])
    return model.decode(np.stack(mixed).astype(np.float32))


class TaskService:
    """
    Front-ends das quatro tarefas sobre o FittingService.
    """

    def __init__(self, fitting: Optional[FittingService] = None) -> None:
        self.fitting = fitting or FittingService()

    @property
    def extractor(self) -> Optional[IFeatureExtractor]:
        return self.fitting.extractor

    def _extractor_for(self, cfg: TaskConfig) -> Optional[IFeatureExtractor]:
        return self.extractor if cfg.perceptual else None

    @staticmethod
    def _restored(result: FitResult, cfg: TaskConfig) -> np.ndarray:
        if cfg.early_stop and result.plateau_snapshot is not None:
            return result.plateau_snapshot
        return result.frames

    def denoise(
        self,
        video: VideoSequence,
        cfg: TaskConfig,
        clean: Optional[np.ndarray] = None,
        checkpoint_dir: Optional[Path] = None,
    ) -> TaskResult:
        """
        Ajusta com a perda final e devolve os quadros reconstruídos.

        Com `early_stop`, a saída é o snapshot do primeiro platô.
        """
        result = self.fitting.fit(video, cfg, clean=clean, checkpoint_dir=checkpoint_dir)
        frames = np.clip(self._restored(result, cfg), 0.0, 1.0)
        return TaskResult(video=video.with_frames(frames), fit=result)

    def interpolate(
        self,
        video: VideoSequence,
        cfg: TaskConfig,
        request: Optional[InterpolationRequest] = None,
        checkpoint_dir: Optional[Path] = None,
    ) -> TaskResult:
        """
        Ajusta e decodifica latentes interpolados entre quadros vizinhos.

        Raises:
            ValidationException: Sem α configurado ou sequência com menos de 3 quadros
        """
        request = request or cfg.interpolation
        if request is None:
            raise ValidationException(
                "interpolação exige um fator ou lista de α", field="factor"
            )

        outcome = self.fitting.fit_model(video, cfg, checkpoint_dir=checkpoint_dir)
        frames = decode_interpolated(outcome.model, outcome.result.latents, request)
        logger.info(
            "Interpolação concluída",
            extra={"input_frames": video.length, "output_frames": frames.shape[0]},
        )
        return TaskResult(
            video=video.with_frames(np.clip(frames, 0.0, 1.0)),
            fit=outcome.result,
            held_out=synthesized_indices(video.length, request),
        )

    def superresolve(
        self,
        video_lr: VideoSequence,
        cfg: TaskConfig,
        scale: Optional[int] = None,
        checkpoint_dir: Optional[Path] = None,
    ) -> TaskResult:
        """
        Ajusta um decodificador em resolução alta supervisionado por d_sc(X̂).

        Raises:
            ValidationException: Fator fora de {1, 2, 4, 8}
        """
        scale = scale or cfg.sr_scale
        if scale not in SR_SCALES:
            raise ValidationException(f"scale deve estar em {SR_SCALES}", field="scale")
        channels, height, width = video_lr.frame_shape
        objective = sr_objective(
            video_lr.frames,
            scale,
            cfg.effective_weights,
            self._extractor_for(cfg),
            cfg.pyramid,
        )
        result = self.fitting.fit(
            video_lr,
            cfg,
            objective=objective,
            frame_shape=(channels, height * scale, width * scale),
            checkpoint_dir=checkpoint_dir,
        )
        frames = np.clip(self._restored(result, cfg), 0.0, 1.0)
        return TaskResult(video=VideoSequence(frames=frames, source=video_lr.source), fit=result)

    def remove_object(
        self,
        video: VideoSequence,
        cfg: TaskConfig,
        masks: MaskSequence,
        checkpoint_dir: Optional[Path] = None,
    ) -> TaskResult:
        """
        Ajusta apenas nos pixels observados (m = 1) e sintetiza os buracos.

        Uma máscara única é replicada para todos os quadros (máscara estacionária).

        Raises:
            ValidationException: Contagem de máscaras diferente de 1 e de T
        """
        if masks.length == 1 and video.length > 1:
            masks = MaskSequence(
                masks=np.repeat(masks.masks, video.length, axis=0), stationary=True
            )
        if masks.length != video.length:
            raise ValidationException(
                f"{masks.length} máscaras para {video.length} quadros",
                field="mask",
                details={"masks": masks.length, "frames": video.length},
            )
        objective = removal_objective(
            video.frames, masks.masks, cfg.effective_weights, self._extractor_for(cfg), cfg.pyramid
        )
        result = self.fitting.fit(video, cfg, objective=objective, checkpoint_dir=checkpoint_dir)
        frames = np.clip(self._restored(result, cfg), 0.0, 1.0)
        return TaskResult(video=video.with_frames(frames), fit=result)

    def run(
        self,
        video: VideoSequence,
        cfg: TaskConfig,
        masks: Optional[MaskSequence] = None,
        clean: Optional[np.ndarray] = None,
        checkpoint_dir: Optional[Path] = None,
    ) -> TaskResult:
        """Despacha para a tarefa de `cfg.kind`."""
        if cfg.kind is TaskKind.DENOISE:
            return self.denoise(video, cfg, clean=clean, checkpoint_dir=checkpoint_dir)
        if cfg.kind is TaskKind.INTERPOLATE:
            return self.interpolate(video, cfg, checkpoint_dir=checkpoint_dir)
        if cfg.kind is TaskKind.SUPERRES:
            return self.superresolve(video, cfg, checkpoint_dir=checkpoint_dir)
        if masks is None:
            raise ValidationException("remoção de objeto exige máscaras", field="mask")
        return self.remove_object(video, cfg, masks, checkpoint_dir=checkpoint_dir)
