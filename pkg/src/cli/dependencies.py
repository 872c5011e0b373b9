from functools import lru_cache
from typing import Optional

from src.core.config import settings
from src.core.exceptions import ValidationException
from src.core.logger import get_logger
from src.domain.interfaces import IFeatureExtractor, IFrameStore, IPresetManager
from src.losses.features import FixedFeatureExtractor
from src.providers.png.frame_store import PngFrameStore
from src.services.fitting import FittingService
from src.services.preset_manager import PresetManager
from src.services.tasks import TaskService

logger = get_logger(__name__)


# === Provider Dependencies ===


@lru_cache
def get_frame_store() -> IFrameStore:
    """
    Factory para o armazenamento de quadros.
    Retorna instância singleton do PngFrameStore.
    """
    logger.info("Inicializando Frame Store (PngFrameStore)")
    return PngFrameStore(workers=settings.io_workers)


@lru_cache
def get_preset_manager() -> IPresetManager:
    """
    Factory para o catálogo de presets.
    Retorna instância singleton do PresetManager.
    """
    logger.info("Inicializando Preset Manager")
    return PresetManager(presets_file_path=settings.presets_file_path)


@lru_cache
def get_feature_extractor(channels: int, features_path: Optional[str] = None) -> IFeatureExtractor:
    """
    Factory para o extrator φ do termo perceptual.
    Um extrator por (canais, checkpoint): os pesos são somente leitura e compartilhados.

    Args:
        channels: Canais dos quadros de entrada
        features_path: Checkpoint importado (None = pesos com semente fixa)
    """
    if features_path:
        logger.info(f"Importando extrator de características: {features_path}")
        imported = FixedFeatureExtractor.from_checkpoint(features_path)
        if imported.channels != channels:
            raise ValidationException(
                f"extrator importado espera {imported.channels} canais, vídeo tem {channels}",
                field="features_path",
            )
        return imported
    logger.info(f"Inicializando extrator de características (canais={channels})")
    return FixedFeatureExtractor(channels=channels)


# === Service Dependencies ===


@lru_cache
def get_task_service(channels: int, features_path: Optional[str] = None) -> TaskService:
    """
    Factory para o serviço de tarefas.
    Retorna uma instância por extrator.
    """
    extractor = get_feature_extractor(channels, features_path)
    return TaskService(fitting=FittingService(extractor))


# === Cleanup Functions ===


def cleanup_dependencies() -> None:
    """Limpa os caches das factories (usado entre execuções e nos testes)."""
    logger.info("Limpando dependências...")

    get_frame_store.cache_clear()
    get_preset_manager.cache_clear()
    get_feature_extractor.cache_clear()
    get_task_service.cache_clear()

    logger.info("Dependências limpas com sucesso")
