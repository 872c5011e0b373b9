import sys
from typing import Optional, Sequence

from src.cli.commands import dispatch
from src.cli.parser import build_parser
from src.cli.runner import EXIT_USAGE
from src.core.config import settings
from src.core.logger import get_logger

logger = get_logger(__name__)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Ponto de entrada da CLI `vdp`.

    Args:
        argv: Argumentos (sem o nome do programa); None usa sys.argv

    Returns:
        int: Código de saída (0 sucesso, 1 falha de cálculo, 2 erro de uso)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse já imprimiu o uso; --help e --version saem com 0
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logger.debug(f"{settings.app_name} v{settings.app_version}: {args.command}")
    return dispatch(args)


# === Entry Point ===

if __name__ == "__main__":
    sys.exit(main())
