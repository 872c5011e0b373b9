"""
Extrator de características fixo φ(·) para o termo perceptual.
"""
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from src.core.exceptions import CheckpointException
from src.core.logger import get_logger
from src.diffcore.ops import conv2d, leaky_relu
from src.diffcore.tensor import Tensor
from src.domain.interfaces import IFeatureExtractor
from src.domain.models import FeatureProvenance
from src.model.checkpoint import load_checkpoint, save_checkpoint

logger = get_logger(__name__)

DEFAULT_WIDTHS = (8, 16, 32)
DEFAULT_SEED = 1234
_PREFIX = "features.block"


class FixedFeatureExtractor(IFeatureExtractor):
    """
    Rede convolucional de 3 blocos (conv 3×3 stride 2 → LeakyReLU), um tap por bloco.

    Os pesos são constantes: nenhum tensor aqui exige gradiente, mas o gradiente
    flui através da rede até a entrada.
    """

    def __init__(
        self,
        channels: int = 3,
        widths: Sequence[int] = DEFAULT_WIDTHS,
        seed: int = DEFAULT_SEED,
        weights: Optional[list[tuple[np.ndarray, np.ndarray]]] = None,
    ) -> None:
        self._provenance = (
            FeatureProvenance.IMPORTED if weights else FeatureProvenance.RANDOM_SEEDED
        )
        if weights is None:
            rng = np.random.default_rng(seed)
            weights = []
            c_in = channels
            for width in widths:
                fan_in = c_in * 9
                kernel = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(width, c_in, 3, 3))
                weights.append((kernel.astype(np.float32), np.zeros(width, dtype=np.float32)))
                c_in = width
        self._layers = [(Tensor(w), Tensor(b)) for w, b in weights]
        self.channels = self._layers[0][0].shape[1]
        self.seed = seed

    @property
    def provenance(self) -> FeatureProvenance:
        return self._provenance

    @property
    def tap_count(self) -> int:
        return len(self._layers)

    def features(self, frames: Tensor) -> list[Tensor]:
        taps: list[Tensor] = []
        h = frames
        for weight, bias in self._layers:
            h = leaky_relu(conv2d(h, weight, bias, stride=2, padding=1))
            taps.append(h)
        return taps

    def state_dict(self) -> dict[str, np.ndarray]:
        state: dict[str, np.ndarray] = {}
        for index, (weight, bias) in enumerate(self._layers):
            state[f"{_PREFIX}{index}.weight"] = weight.data
            state[f"{_PREFIX}{index}.bias"] = bias.data
        return state

    def export(self, path: Path | str) -> Path:
        """Grava os pesos no formato de checkpoint do modelo."""
        return save_checkpoint(self.state_dict(), path)

    @classmethod
    def from_checkpoint(cls, path: Path | str) -> "FixedFeatureExtractor":
        """
        Importa pesos exportados de outra rede de características.

        Espera folhas `features.block{i}.weight` [C_out, C_in, 3, 3] e `.bias` [C_out].

        Raises:
            CheckpointException: Se não houver blocos ou as formas forem incoerentes
        """
        state = load_checkpoint(path)
        weights: list[tuple[np.ndarray, np.ndarray]] = []
        index = 0
        while f"{_PREFIX}{index}.weight" in state:
            weight = state[f"{_PREFIX}{index}.weight"]
            bias = state.get(f"{_PREFIX}{index}.bias", np.zeros(weight.shape[0], np.float32))
            if weight.ndim != 4 or bias.shape != (weight.shape[0],):
                raise CheckpointException(str(path), f"bloco {index} com formas inválidas")
            if weights and weights[-1][0].shape[0] != weight.shape[1]:
                raise CheckpointException(str(path), f"canais incoerentes no bloco {index}")
            weights.append((weight, bias))
            index += 1
        if not weights:
            raise CheckpointException(str(path), "nenhum bloco de características encontrado")

        logger.info(
            "Extrator de características importado",
            extra={"path": str(path), "blocks": len(weights)},
        )
        return cls(weights=weights)
