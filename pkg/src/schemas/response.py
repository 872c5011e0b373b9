from datetime import datetime, timezone
from typing import Any, Optional

from pydantic import BaseModel, Field


class ErrorResponse(BaseModel):
    """
    Diagnóstico de erro emitido pela CLI em stderr.
    Usado por todos os subcomandos quando a execução falha.
    """

    error_code: str = Field(..., description="Código identificador do erro")

    message: str = Field(..., description="Mensagem descritiva do erro")

    details: Optional[dict[str, Any]] = Field(
        default=None, description="Detalhes adicionais sobre o erro"
    )

    exit_code: int = Field(..., ge=1, le=2, description="Código de saída do processo")

    timestamp: datetime = Field(
        default_factory=lambda: datetime.now(timezone.utc), description="Timestamp do erro (UTC)"
    )

    run_id: Optional[str] = Field(default=None, description="ID da execução para rastreamento")

    command: Optional[str] = Field(default=None, description="Subcomando que gerou o erro")

    model_config = {
        "json_schema_extra": {
            "example": {
                "error_code": "VALIDATION_ERROR",
                "message": "40 quadros restaurados para 41 de referência",
                "details": {"field": "frames"},
                "exit_code": 2,
                "timestamp": "2026-01-22T18:26:00.000000",
                "run_id": "3f2b9c0e5d7a4e8f9a1b2c3d4e5f6a7b",
                "command": "metrics",
            }
        }
    }
