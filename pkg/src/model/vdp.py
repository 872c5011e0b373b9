"""
Par LFPNet + FDNet com o rollout X̂_{t+1} = f(g(z_t)).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.exceptions import CheckpointException
from src.core.logger import get_logger
from src.diffcore.ops import ChannelMoments, stack
from src.diffcore.optim import ParamLeaf
from src.diffcore.tensor import Tensor
from src.domain.models import ModelConfig
from src.model.fdnet import FDNet
from src.model.lfpnet import LFPNet, sample_initial_latent

logger = get_logger(__name__)

MOMENT_PREFIX = "buffer.fdnet.block"


@dataclass
class Rollout:
    """Latentes [z_1..z_T], quadros [X̂_1..X̂_T] e, se pedido, X̂_0 = f(z_0)."""

    latents: list[Tensor]
    frames: Tensor
    initial_frame: Optional[Tensor] = None


class VideoDynamicsPrior:
    """
    Modelo completo ajustado por vídeo.

    z_0 é amostrado uma vez e congelado (a menos que `train_initial_latent`);
    os estados LSTM voltam a zero em cada rollout.
    """

    def __init__(self, config: ModelConfig) -> None:
        self.config = config
        rng = np.random.default_rng(config.init_seed)
        self.lfpnet = LFPNet(config, rng)
        self.fdnet = FDNet(config, rng)

        z0 = sample_initial_latent(config.latent_seed, config.latent_dim)
        self.z0: Tensor = (
            ParamLeaf(z0, name="latent.z0") if config.train_initial_latent else Tensor(z0)
        )
        self.moments: Optional[list[ChannelMoments]] = None

        logger.debug(
            "Modelo construído",
            extra={"parameter_count": self.parameter_count, "config": config.model_dump(mode="json")},
        )

    def parameters(self) -> list[ParamLeaf]:
        leaves = self.lfpnet.parameters() + self.fdnet.parameters()
        if isinstance(self.z0, ParamLeaf):
            leaves.append(self.z0)
        return leaves

    @property
    def parameter_count(self) -> int:
        return sum(leaf.size for leaf in self.parameters())

    @property
    def norm_fallback(self) -> bool:
        """True se algum forward de treino normalizou um lote de um só quadro."""
        return self.fdnet.norm_fallback

    # === Forward ===

    def rollout(self, steps: int, include_initial: bool = False) -> Rollout:
        """
        Desenrola `steps` passos a partir de z_0 e decodifica todos os latentes em lote.

        Args:
            steps: Número de passos T (>= 1, ou 0 com include_initial)
            include_initial: Decodifica também f(z_0)

        Returns:
            Rollout: Latentes e quadros; as estatísticas de normalização ficam em `moments`
        """
        if steps < 0 or (steps == 0 and not include_initial):
            raise ValueError("steps deve ser >= 1")
        latents = self.lfpnet.unroll(self.z0, steps, self.config.bptt_window)
        sequence = ([self.z0] if include_initial else []) + latents
        frames, self.moments = self.fdnet.decode(stack(sequence, axis=0))
        if include_initial:
            return Rollout(latents=latents, frames=frames[1:], initial_frame=frames[0])
        return Rollout(latents=latents, frames=frames)

    def reconstruct(self, length: int) -> tuple[Tensor, list[Tensor]]:
        """
        Quadros alinhados ao vídeo de entrada de `length` quadros.

        Com `auxiliary_first_frame`, f(z_0) supervisiona o quadro 0 e o rollout cobre
        os quadros 1..T−1; caso contrário z_{t+1} corresponde ao quadro t.

        Returns:
            tuple[Tensor, list[Tensor]]: Quadros [T, C, H, W] e os latentes de cada quadro
        """
        if self.config.auxiliary_first_frame:
            latents = [self.z0] + self.lfpnet.unroll(self.z0, length - 1, self.config.bptt_window)
        else:
            latents = self.lfpnet.unroll(self.z0, length, self.config.bptt_window)
        frames, self.moments = self.fdnet.decode(stack(latents, axis=0))
        return frames, latents

    def decode(self, latent: np.ndarray | Tensor) -> np.ndarray:
        """
        Decodifica um latente em modo inferência (estatísticas congeladas).

        Raises:
            CheckpointException: Se o modelo ainda não fez nenhum forward de treino
        """
        if self.moments is None and self.fdnet.blocks:
            raise CheckpointException("<memória>", "estatísticas de normalização ausentes")
        z = latent if isinstance(latent, Tensor) else Tensor(np.asarray(latent, dtype=np.float32))
        frames, _ = self.fdnet.decode(z, self.moments or [])
        return frames.data

    def decode_lerp(self, z_a: np.ndarray, z_b: np.ndarray, alpha: float) -> np.ndarray:
        """f(α·z_b + (1−α)·z_a); α = 0 e α = 1 reproduzem as extremidades."""
        mixed = (1.0 - alpha) * np.asarray(z_a, dtype=np.float64) + alpha * np.asarray(
            z_b, dtype=np.float64
        )
        return self.decode(mixed.astype(np.float32))

    # === Estado ===

    def state_dict(self) -> dict[str, np.ndarray]:
        """Parâmetros, z_0 e estatísticas de normalização por nome."""
        state = {leaf.name: leaf.data for leaf in self.parameters() if leaf.name}
        if not isinstance(self.z0, ParamLeaf):
            state["buffer.latent.z0"] = self.z0.data
        for index, moments in enumerate(self.moments or []):
            state[f"{MOMENT_PREFIX}{index}.mean"] = moments.mean
            state[f"{MOMENT_PREFIX}{index}.var"] = moments.var
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """
        Restaura pesos e buffers a partir de `state_dict`.

        Raises:
            CheckpointException: Se faltar algum parâmetro ou a forma divergir
        """
        for leaf in self.parameters():
            if leaf.name not in state:
                raise CheckpointException("<state>", f"parâmetro ausente: {leaf.name}")
            value = np.asarray(state[leaf.name])
            if value.shape != leaf.shape:
                raise CheckpointException(
                    "<state>", f"forma divergente em {leaf.name}: {value.shape} != {leaf.shape}"
                )
            leaf.data = value.astype(leaf.dtype).copy()

        if "buffer.latent.z0" in state and not isinstance(self.z0, ParamLeaf):
            self.z0 = Tensor(np.asarray(state["buffer.latent.z0"], dtype=np.float32))

        moments: list[ChannelMoments] = []
        for index in range(len(self.fdnet.blocks)):
            mean = state.get(f"{MOMENT_PREFIX}{index}.mean")
            var = state.get(f"{MOMENT_PREFIX}{index}.var")
            if mean is None or var is None:
                break
            moments.append(
                ChannelMoments(mean=np.asarray(mean, np.float64), var=np.asarray(var, np.float64))
            )
        self.moments = moments if len(moments) == len(self.fdnet.blocks) else None
