"""
Configurações centralizadas do processo.
Gerencia variáveis de ambiente e settings usando Pydantic V2.
"""
from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_PACKAGE_ROOT = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    """
    Configurações do processo com validação via Pydantic V2.
    Todas as configs podem ser sobrescritas via variáveis de ambiente (prefixo VDP_).
    """

    # Application
    app_name: str = Field(default="Video Dynamics Prior", description="Nome da aplicação")
    app_version: str = Field(default="1.0.0", description="Versão do pacote")
    debug: bool = Field(default=False, description="Modo debug")
    environment: Literal["development", "staging", "production"] = Field(
        default="development", description="Ambiente de execução"
    )

    # Presets
    presets_file_path: str = Field(
        default=str(_PACKAGE_ROOT / "data" / "presets.json"),
        description="Caminho para o arquivo de presets de tarefas",
    )

    # Execution
    default_seed: int = Field(default=0, ge=0, description="Semente padrão quando nenhuma é dada")
    io_workers: int = Field(
        default=4, ge=1, le=64, description="Threads para decodificação paralela de PNG"
    )
    max_jobs: int = Field(
        default=4, ge=1, le=64, description="Máximo de ajustes (fits) em paralelo"
    )
    max_fit_bytes: int = Field(
        default=8 * 1024**3,
        ge=1024**2,
        description="Estimativa máxima de memória aceita para um ajuste (bytes)",
    )
    log_every_n_epochs: int = Field(
        default=100, ge=1, description="Intervalo de épocas para logs em nível INFO"
    )

    # Logging Configuration
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO", description="Nível de log"
    )
    log_format: str = Field(default="json", description="Formato do log (json ou text)")
    log_stream: Literal["stdout", "stderr"] = Field(
        default="stderr", description="Destino dos logs (stdout fica livre para relatórios)"
    )

    model_config = SettingsConfigDict(
        env_prefix="VDP_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        """Valida o formato de log."""
        v = v.strip().lower()
        if v not in ("json", "text"):
            raise ValueError(f"Formato de log '{v}' não suportado. Use 'json' ou 'text'")
        return v

    @field_validator("environment", mode="before")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Normaliza o nome do ambiente."""
        return str(v).lower()


@lru_cache
def get_settings() -> Settings:
    """
    Retorna instância singleton das configurações.
    Usa cache para evitar recarregar .env múltiplas vezes.

    Returns:
        Settings: Instância das configurações do processo
    """
    return Settings()


# Instância global para facilitar imports
settings = get_settings()
