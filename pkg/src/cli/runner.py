"""
Execução de um subcomando: run_id, tempo, logging e mapeamento de erros para códigos de saída.
"""
import argparse
import sys
import time
import uuid
from pathlib import Path
from typing import Any, Callable, Optional

from src.cli.resolve import resolve_run_config
from src.core.config import settings
from src.core.exceptions import AppBaseException
from src.core.logger import (
    get_logger,
    get_run_logger,
    log_command_end,
    log_command_start,
    log_error,
)
from src.schemas.response import ErrorResponse
from src.schemas.run_config import RunConfig

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# erros de uso/configuração saem com 2; falhas de cálculo e E/S com 1
EXIT_CODE_MAP = {
    "VALIDATION_ERROR": EXIT_USAGE,
    "CONFIGURATION_ERROR": EXIT_USAGE,
    "FILE_NOT_FOUND": EXIT_USAGE,
    "PRESET_LOAD_ERROR": EXIT_USAGE,
    "DIMENSION_MISMATCH": EXIT_USAGE,
    "RESOURCE_ESTIMATE_EXCEEDED": EXIT_USAGE,
    "FRAME_IO_ERROR": EXIT_FAILURE,
    "CHECKPOINT_ERROR": EXIT_FAILURE,
    "NON_FINITE_VALUE": EXIT_FAILURE,
    "FIT_DIVERGED": EXIT_FAILURE,
}

CommandHandler = Callable[[RunConfig], list[Path]]


def exit_code_for(error_code: str) -> int:
    return EXIT_CODE_MAP.get(error_code, EXIT_FAILURE)


def emit_error(
    error_code: str,
    message: str,
    exit_code: int,
    details: Optional[dict[str, Any]] = None,
    run_id: Optional[str] = None,
    command: Optional[str] = None,
) -> None:
    """Escreve o diagnóstico (ErrorResponse em JSON) em stderr."""
    response = ErrorResponse(
        error_code=error_code,
        message=message,
        details=details,
        exit_code=exit_code,
        run_id=run_id,
        command=command,
    )
    sys.stderr.write(response.model_dump_json() + "\n")


def run_command(command: str, args: argparse.Namespace, handler: CommandHandler) -> int:
    """
    Resolve a configuração, executa o handler e converte exceções em código de saída.

    Args:
        command: Nome do subcomando
        args: Argumentos já interpretados pelo parser
        handler: Função que executa o subcomando e devolve os arquivos gravados

    Returns:
        int: 0 sucesso, 1 falha de cálculo, 2 erro de uso/configuração
    """
    run_id = uuid.uuid4().hex
    run_logger = get_run_logger(run_id)
    start_time = time.perf_counter()
    log_command_start(logger, command, run_id)

    exit_code = EXIT_OK
    files: list[Path] = []
    try:
        config = resolve_run_config(command, args)
        run_logger.info(
            "Configuração resolvida",
            extra={"preset": config.run.preset, "task": config.task.kind.value},
        )
        files = handler(config)

    except AppBaseException as exc:
        exit_code = exit_code_for(exc.error_code)
        log_error(logger, exc, context=command, run_id=run_id, error_code=exc.error_code)
        emit_error(exc.error_code, exc.message, exit_code, exc.details, run_id, command)

    except Exception as exc:
        exit_code = EXIT_FAILURE
        log_error(logger, exc, context=command, run_id=run_id)

        # Em produção, não expõe detalhes internos
        if settings.environment == "production":
            message, details = "Erro interno", None
        else:
            message, details = str(exc), {"error_type": type(exc).__name__}
        emit_error("INTERNAL_ERROR", message, exit_code, details, run_id, command)

    finally:
        log_command_end(
            logger,
            command,
            exit_code,
            run_id,
            (time.perf_counter() - start_time) * 1000,
            files=[str(path) for path in files],
        )

    return exit_code
