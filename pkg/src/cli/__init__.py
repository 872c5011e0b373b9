from src.cli.commands import (
    COMMAND_HANDLERS,
    cmd_analyze,
    cmd_degrade,
    cmd_denoise,
    cmd_interpolate,
    cmd_metrics,
    cmd_remove,
    cmd_superres,
    dispatch,
)
from src.cli.parser import build_parser
from src.cli.runner import EXIT_FAILURE, EXIT_OK, EXIT_USAGE

__all__ = [
    "COMMAND_HANDLERS",
    "EXIT_FAILURE",
    "EXIT_OK",
    "EXIT_USAGE",
    "build_parser",
    "cmd_analyze",
    "cmd_degrade",
    "cmd_denoise",
    "cmd_interpolate",
    "cmd_metrics",
    "cmd_remove",
    "cmd_superres",
    "dispatch",
]
