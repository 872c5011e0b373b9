import json
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from src.core.config import settings
from src.core.exceptions import ConfigurationException, PresetLoadException
from src.core.logger import get_logger
from src.domain.interfaces import IPresetManager
from src.domain.models import TaskConfig, TaskKind

logger = get_logger(__name__)


class PresetManager(IPresetManager):
    """
    Catálogo de presets de tarefas (paper-<tarefa>, desk-<tarefa>).
    Carrega o arquivo JSON uma vez e valida cada entrada como TaskConfig.
    """

    def __init__(self, presets_file_path: Optional[str] = None) -> None:
        """
        Args:
            presets_file_path: Caminho para o arquivo de presets (usa settings se None)
        """
        self.presets_file_path = presets_file_path or settings.presets_file_path
        self._presets_cache: Optional[dict[str, TaskConfig]] = None

        logger.info(f"PresetManager inicializado: file={self.presets_file_path}")

    async def load_presets(self) -> dict[str, TaskConfig]:
        """
        Carrega e valida os presets do arquivo JSON.
        Utiliza cache para evitar recarregar múltiplas vezes.

        Returns:
            dict[str, TaskConfig]: Presets por nome

        Raises:
            PresetLoadException: Arquivo ausente, JSON inválido ou preset inválido
        """
        if self._presets_cache is not None:
            logger.debug(f"Retornando {len(self._presets_cache)} presets do cache")
            return self._presets_cache

        file_path = Path(self.presets_file_path)
        if not file_path.is_file():
            raise PresetLoadException(file_path=str(file_path), reason="Arquivo não encontrado")

        try:
            with open(file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise PresetLoadException(
                file_path=str(file_path), reason=f"Erro ao decodificar JSON: {str(e)}"
            ) from e

        if not isinstance(data, dict) or not isinstance(data.get("presets"), dict):
            raise PresetLoadException(
                file_path=str(file_path),
                reason="Estrutura JSON inválida. Esperado: {'presets': {nome: {...}}}",
            )

        presets: dict[str, TaskConfig] = {}
        for name, item in data["presets"].items():
            try:
                presets[name] = TaskConfig.model_validate(item)
            except ValidationError as e:
                # um preset inválido invalida o catálogo: execuções não podem cair em outro
                reason = f"Preset '{name}' inválido: {e.errors()[0]['msg']}"
                raise PresetLoadException(file_path=str(file_path), reason=reason) from e

        if not presets:
            raise PresetLoadException(file_path=str(file_path), reason="Nenhum preset definido")

        self._presets_cache = presets
        logger.info(f"Carregados {len(presets)} presets com sucesso")
        return presets

    async def get_preset(self, name: str) -> TaskConfig:
        """
        Raises:
            ConfigurationException: Preset inexistente
        """
        presets = await self.load_presets()
        if name not in presets:
            raise ConfigurationException(
                config_key="preset",
                reason=f"preset '{name}' não existe (disponíveis: {', '.join(sorted(presets))})",
            )
        return presets[name]

    def default_preset_name(self, task: TaskKind | str, desk: bool = False) -> str:
        """'paper-denoise', 'desk-removal', etc."""
        kind = task if isinstance(task, TaskKind) else TaskKind.from_string(task)
        return f"{'desk' if desk else 'paper'}-{kind.value}"

    def clear_cache(self) -> None:
        """Limpa o cache de presets carregados."""
        self._presets_cache = None
        logger.info("Cache de presets limpo")

    def get_presets_count(self) -> int:
        return 0 if self._presets_cache is None else len(self._presets_cache)
