import logging
import sys
from typing import Any, Optional, TextIO

from pythonjsonlogger import jsonlogger

from src.core.config import settings

# Campos de contexto copiados do LogRecord para o JSON quando presentes
CONTEXT_FIELDS = ("run_id", "command", "task", "epoch", "seed", "setting")


class CustomJsonFormatter(jsonlogger.JsonFormatter):
    """
    Formatter JSON das execuções.

    Cada linha traz nível, logger, horário, o nome da aplicação e, quando o
    registro carrega, o contexto da execução (run_id, subcomando, tarefa, época).
    """

    def add_fields(
        self, log_record: dict[str, Any], record: logging.LogRecord, message_dict: dict[str, Any]
    ) -> None:
        super().add_fields(log_record, record, message_dict)

        log_record["level"] = record.levelname
        log_record["logger"] = record.name
        log_record["timestamp"] = self.formatTime(record, self.datefmt)
        log_record["app_name"] = settings.app_name
        log_record["environment"] = settings.environment

        for field in CONTEXT_FIELDS:
            value = getattr(record, field, None)
            if value is not None:
                log_record[field] = value

        if record.exc_info:
            log_record["exception"] = self.formatException(record.exc_info)


def _log_stream() -> TextIO:
    # stdout fica livre para relatórios (`vdp metrics` sem --out)
    return sys.stdout if settings.log_stream == "stdout" else sys.stderr


def _build_formatter() -> logging.Formatter:
    if settings.log_format == "json":
        return CustomJsonFormatter(
            fmt="%(timestamp)s %(level)s %(name)s %(message)s", datefmt="%Y-%m-%dT%H:%M:%S"
        )
    return logging.Formatter(
        fmt="%(asctime)s [%(levelname)s] %(name)s: %(message)s", datefmt="%H:%M:%S"
    )


def setup_logger(name: str = __name__) -> logging.Logger:
    """
    Configura um logger com um único handler no stream de diagnóstico.

    Chamadas repetidas com o mesmo nome devolvem o logger já configurado.
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    level = getattr(logging, settings.log_level)
    logger.setLevel(level)
    logger.propagate = False

    handler = logging.StreamHandler(_log_stream())
    handler.setLevel(level)
    handler.setFormatter(_build_formatter())
    logger.addHandler(handler)
    return logger


def get_logger(name: str = __name__) -> logging.Logger:
    """Obtém o logger configurado do módulo (use __name__)."""
    return setup_logger(name)


app_logger = get_logger("video_dynamics_prior")


class RunLoggerAdapter(logging.LoggerAdapter):
    """Anexa o contexto fixo de uma execução a todas as mensagens."""

    def process(self, msg: str, kwargs: dict[str, Any]) -> tuple[str, dict[str, Any]]:
        kwargs["extra"] = {**self.extra, **kwargs.get("extra", {})}
        return msg, kwargs


def get_run_logger(run_id: str, logger: Optional[logging.Logger] = None) -> RunLoggerAdapter:
    """
    Cria um logger com o run_id da execução.

    Args:
        run_id: ID único da execução
        logger: Logger base (usa app_logger por padrão)
    """
    return RunLoggerAdapter(logger or app_logger, {"run_id": run_id})


def _log_event(
    logger: logging.Logger, level: int, event_type: str, message: str, **fields: Any
) -> None:
    logger.log(level, message, extra={"event_type": event_type, **fields})


# Eventos estruturados


def log_command_start(logger: logging.Logger, command: str, run_id: str, **extra: Any) -> None:
    """Loga início de um subcomando da CLI."""
    _log_event(
        logger,
        logging.INFO,
        "command_start",
        f"Command start: {command}",
        run_id=run_id,
        command=command,
        **extra,
    )


def log_command_end(
    logger: logging.Logger,
    command: str,
    exit_code: int,
    run_id: str,
    duration_ms: float,
    **extra: Any,
) -> None:
    """Loga término de um subcomando com o código de saída."""
    _log_event(
        logger,
        logging.INFO if exit_code == 0 else logging.WARNING,
        "command_end",
        f"Command end: {command} - exit {exit_code} ({duration_ms:.2f}ms)",
        run_id=run_id,
        command=command,
        exit_code=exit_code,
        duration_ms=duration_ms,
        **extra,
    )


def log_fit_start(
    logger: logging.Logger, task: str, frames: int, parameters: int, epochs: int, **extra: Any
) -> None:
    _log_event(
        logger,
        logging.INFO,
        "fit_start",
        f"Fit start: task={task} frames={frames} params={parameters} epochs={epochs}",
        task=task,
        frames=frames,
        parameters=parameters,
        epochs=epochs,
        **extra,
    )


def log_epoch(
    logger: logging.Logger, epoch: int, total: float, level: int = logging.DEBUG, **extra: Any
) -> None:
    if not logger.isEnabledFor(level):
        return
    message = f"Epoch {epoch}: loss={total:.6f}"
    _log_event(logger, level, "epoch", message, epoch=epoch, loss=total, **extra)


def log_fit_end(
    logger: logging.Logger, epochs_run: int, final_loss: float, duration_ms: float, **extra: Any
) -> None:
    _log_event(
        logger,
        logging.INFO,
        "fit_end",
        f"Fit end: epochs={epochs_run} loss={final_loss:.6f} ({duration_ms:.2f}ms)",
        epochs_run=epochs_run,
        final_loss=final_loss,
        duration_ms=duration_ms,
        **extra,
    )


def log_error(
    logger: logging.Logger,
    error: Exception,
    context: str,
    run_id: Optional[str] = None,
    **extra: Any,
) -> None:
    """Loga erro com tipo, mensagem e traceback."""
    fields: dict[str, Any] = {
        "error_type": type(error).__name__,
        "error_message": str(error),
        "context": context,
        **extra,
    }
    if run_id:
        fields["run_id"] = run_id

    logger.error(
        f"Error in {context}: {type(error).__name__} - {error}",
        exc_info=True,
        extra={"event_type": "error", **fields},
    )
