from abc import ABC, abstractmethod
from pathlib import Path

from src.diffcore.tensor import Tensor
from src.domain.models import FeatureProvenance, MaskSequence, TaskConfig, TaskKind, VideoSequence


class IFeatureExtractor(ABC):
    """
    Mapa de características fixo φ(·) usado pelo termo perceptual.
    Os pesos não participam da otimização.
    """

    @abstractmethod
    def features(self, frames: Tensor) -> list[Tensor]:
        """
        Extrai as ativações de cada camada de saída.

        Args:
            frames: Lote de quadros [T, C, H, W]

        Returns:
            list[Tensor]: Uma ativação por tap, na ordem das camadas
        """
        pass

    @property
    @abstractmethod
    def provenance(self) -> FeatureProvenance:
        """Origem dos pesos (semente aleatória ou importados)."""
        pass


class IFrameStore(ABC):
    """
    Interface para leitura e escrita de sequências de quadros.
    Abstrai o formato em disco (diretório de PNGs, etc.).
    """

    @abstractmethod
    def load_frames(self, directory: Path | str) -> VideoSequence:
        """
        Carrega todos os quadros do diretório em ordem de índice.

        Raises:
            FrameIOException: Se faltar índice, formatos divergirem ou a leitura falhar
        """
        pass

    @abstractmethod
    def save_frames(self, video: VideoSequence, directory: Path | str) -> list[Path]:
        """
        Grava os quadros quantizados em 8 bits.

        Returns:
            list[Path]: Arquivos escritos, em ordem

        Raises:
            ValidationException: Se algum valor estiver fora de [0, 1]
            FrameIOException: Em falhas de escrita
        """
        pass

    @abstractmethod
    def load_masks(self, directory: Path | str, length: int) -> MaskSequence:
        """
        Carrega uma máscara por quadro ou uma máscara estacionária replicada.

        Raises:
            ValidationException: Se a contagem não for 1 nem `length`
        """
        pass


class IPresetManager(ABC):
    """
    Interface para o catálogo de presets de tarefas.
    """

    @abstractmethod
    async def load_presets(self) -> dict[str, TaskConfig]:
        """
        Carrega os presets do repositório.

        Raises:
            PresetLoadException: Se o arquivo for inválido
        """
        pass

    @abstractmethod
    async def get_preset(self, name: str) -> TaskConfig:
        """
        Retorna o preset pelo nome (ex: 'paper-denoise').

        Raises:
            ConfigurationException: Se o preset não existir
        """
        pass

    @abstractmethod
    def default_preset_name(self, task: TaskKind | str, desk: bool = False) -> str:
        """Nome do preset padrão para a tarefa."""
        pass
