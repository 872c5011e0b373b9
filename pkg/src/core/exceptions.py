from typing import Any, Optional


class AppBaseException(Exception):
    """
    Exceção base da aplicação.
    Todas as exceções customizadas devem herdar desta classe.
    """

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        self.message = message
        self.error_code = error_code or self.__class__.__name__
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> dict[str, Any]:
        """Serializa a exceção para dict (útil para relatórios e logs)."""
        return {"error_code": self.error_code, "message": self.message, "details": self.details}


# === Domain Exceptions ===


class DomainException(AppBaseException):
    """Exceções relacionadas à lógica de domínio (tensores, modelo, perdas)."""

    pass


class DimensionMismatchException(DomainException):
    """Formas incompatíveis entre tensores; nomeia o eixo problemático."""

    def __init__(
        self,
        operation: str,
        axis: str,
        expected: Any,
        actual: Any,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        error_details = {
            "operation": operation,
            "axis": axis,
            "expected": expected,
            "actual": actual,
            **(details or {}),
        }
        super().__init__(
            message=(
                f"Dimensão incompatível em {operation}: "
                f"eixo '{axis}' esperado {expected}, recebido {actual}"
            ),
            error_code="DIMENSION_MISMATCH",
            details=error_details,
        )


class NonFiniteValueException(DomainException):
    """Valor NaN/Inf encontrado em gradiente, estado ou perda."""

    def __init__(self, where: str, details: Optional[dict[str, Any]] = None) -> None:
        super().__init__(
            message=f"Valor não finito detectado em {where}",
            error_code="NON_FINITE_VALUE",
            details={"where": where, **(details or {})},
        )


class FitDivergedException(DomainException):
    """O ajuste produziu uma perda não finita e foi abortado."""

    def __init__(
        self, epoch: int, checkpoint_path: Optional[str] = None, reason: Optional[str] = None
    ) -> None:
        details: dict[str, Any] = {"epoch": epoch}
        if checkpoint_path:
            details["last_good_checkpoint"] = checkpoint_path
        if reason:
            details["reason"] = reason
        super().__init__(
            message=f"Ajuste divergiu na época {epoch}",
            error_code="FIT_DIVERGED",
            details=details,
        )


# === Service Exceptions ===


class ServiceException(AppBaseException):
    """Exceções relacionadas à camada de serviço."""

    pass


class PresetLoadException(ServiceException):
    """Erro ao carregar presets de tarefas do arquivo."""

    def __init__(self, file_path: str, reason: str) -> None:
        super().__init__(
            message=f"Erro ao carregar presets de '{file_path}': {reason}",
            error_code="PRESET_LOAD_ERROR",
            details={"file_path": file_path, "reason": reason},
        )


class ResourceEstimateException(ServiceException):
    """Configuração rejeitada pela estimativa de memória antes do ajuste."""

    def __init__(self, estimated_bytes: int, limit_bytes: int) -> None:
        super().__init__(
            message=(
                f"Estimativa de memória do ajuste ({estimated_bytes / 1024**2:.1f} MiB) "
                f"excede o limite ({limit_bytes / 1024**2:.1f} MiB)"
            ),
            error_code="RESOURCE_ESTIMATE_EXCEEDED",
            details={"estimated_bytes": estimated_bytes, "limit_bytes": limit_bytes},
        )


# === Infrastructure Exceptions ===


class InfrastructureException(AppBaseException):
    """Exceções relacionadas à infraestrutura (arquivos, checkpoints)."""

    pass


class FrameIOException(InfrastructureException):
    """Erro ao ler ou gravar quadros/máscaras PNG."""

    def __init__(self, path: str, reason: str, details: Optional[dict[str, Any]] = None) -> None:
        super().__init__(
            message=f"Erro de E/S de quadros em '{path}': {reason}",
            error_code="FRAME_IO_ERROR",
            details={"path": path, "reason": reason, **(details or {})},
        )


class CheckpointException(InfrastructureException):
    """Erro ao ler ou gravar um checkpoint de parâmetros."""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(
            message=f"Erro de checkpoint em '{path}': {reason}",
            error_code="CHECKPOINT_ERROR",
            details={"path": path, "reason": reason},
        )


class ConfigurationException(InfrastructureException):
    """Erro de configuração da execução."""

    def __init__(self, config_key: str, reason: str) -> None:
        super().__init__(
            message=f"Erro de configuração '{config_key}': {reason}",
            error_code="CONFIGURATION_ERROR",
            details={"config_key": config_key, "reason": reason},
        )


class FileNotFoundException(InfrastructureException):
    """Arquivo ou diretório não encontrado."""

    def __init__(self, file_path: str) -> None:
        super().__init__(
            message=f"Arquivo não encontrado: '{file_path}'",
            error_code="FILE_NOT_FOUND",
            details={"file_path": file_path},
        )


# === Validation Exceptions ===


class ValidationException(AppBaseException):
    """Exceções de validação de entrada."""

    def __init__(
        self, message: str, field: Optional[str] = None, details: Optional[dict[str, Any]] = None
    ) -> None:
        error_details = details or {}
        if field:
            error_details["field"] = field

        super().__init__(message=message, error_code="VALIDATION_ERROR", details=error_details)
