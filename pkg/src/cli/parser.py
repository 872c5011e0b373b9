"""
Parser de argumentos da CLI `vdp`.
"""
import argparse

from src.core.config import settings
from src.domain.models import SR_SCALES, AblationMode

TASK_COMMANDS = ("denoise", "interpolate", "superres", "remove")
COMMANDS = (*TASK_COMMANDS, "degrade", "analyze", "metrics")


def _io_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--in", dest="input_dir", metavar="DIR", help="Diretório frame_%%05d.png")
    parser.add_argument("--out", dest="output_dir", metavar="DIR", help="Diretório de saída")
    parser.add_argument(
        "--config", metavar="FILE", help="Arquivo de configuração (ex: run-config.echo)"
    )


def _fit_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("ajuste")
    group.add_argument("--preset", help="Preset base (paper-<tarefa> ou desk-<tarefa>)")
    group.add_argument("--seed", type=int, help="Semente de inicialização")
    group.add_argument("--epochs", type=int, help="Épocas de otimização")
    group.add_argument("--lr", type=float, help="Taxa de aprendizado do Adam")
    group.add_argument("--lambda-rec", dest="lambda_rec", type=float, help="λ_rec")
    group.add_argument("--lambda-spl", dest="lambda_spl", type=float, help="λ_spl")
    group.add_argument("--lambda-var", dest="lambda_var", type=float, help="λ_var")
    group.add_argument(
        "--ablate",
        choices=[mode.value for mode in AblationMode],
        help="Subconjunto de perdas do estudo de ablação",
    )
    group.add_argument(
        "--early-stop",
        dest="early_stop",
        action="store_const",
        const=True,
        help="Para no primeiro platô e devolve o snapshot",
    )
    group.add_argument(
        "--features", dest="features_path", metavar="FILE", help="Checkpoint do extrator φ"
    )


def _noise_flags(parser: argparse.ArgumentParser, seed_flag: str = "--noise-seed") -> None:
    group = parser.add_argument_group("degradação")
    group.add_argument("--gaussian", type=float, metavar="SIGMA", help="Ruído gaussiano σ (0-255)")
    group.add_argument("--poisson", type=float, metavar="LAMBDA", help="Ruído de Poisson λ (0-255)")
    group.add_argument(
        "--replace-frame", dest="replace_frame", type=int, metavar="I", help="Quadro a substituir"
    )
    group.add_argument(
        "--frames", type=int, nargs="+", metavar="I", help="Quadros afetados pelo ruído"
    )
    group.add_argument(seed_flag, dest="noise_seed", type=int, help="Semente da degradação")


def build_parser() -> argparse.ArgumentParser:
    """
    Monta o parser com os subcomandos denoise, interpolate, superres, remove,
    degrade, analyze e metrics.
    """
    parser = argparse.ArgumentParser(
        prog="vdp",
        description="Prior de dinâmica de vídeo ajustado por vídeo (restauração sem dados externos)",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    for name, summary in (
        ("denoise", "Remove ruído de uma sequência"),
        ("interpolate", "Sintetiza quadros intermediários por interpolação latente"),
        ("superres", "Super-resolução espacial"),
        ("remove", "Remove objetos mascarados e preenche os buracos"),
    ):
        command = subparsers.add_parser(name, help=summary, description=summary)
        _io_flags(command)
        _fit_flags(command)
        _noise_flags(command)
        command.add_argument(
            "--ref", dest="reference_dir", metavar="DIR", help="Quadros de referência para métricas"
        )
        command.add_argument(
            "--checkpoint",
            dest="save_checkpoint",
            action="store_const",
            const=True,
            help="Grava os parâmetros ajustados em <out>/model",
        )
        if name == "interpolate":
            factor = command.add_mutually_exclusive_group()
            factor.add_argument("--factor", type=int, help="Fator n: α = k/n, k = 1..n−1")
            factor.add_argument("--alphas", type=float, nargs="+", help="Lista explícita de α")
        elif name == "superres":
            command.add_argument("--scale", type=int, choices=SR_SCALES[1:], help="Fator de SR")
        elif name == "remove":
            command.add_argument(
                "--mask", dest="mask_path", metavar="PATH", help="mask.png ou diretório de máscaras"
            )

    degrade = subparsers.add_parser(
        "degrade", help="Aplica degradações sintéticas", description="Aplica degradações sintéticas"
    )
    _io_flags(degrade)
    _noise_flags(degrade, seed_flag="--seed")
    degrade.add_argument("--scale", type=int, help="Downscale antes do ruído")

    analyze = subparsers.add_parser(
        "analyze",
        help="Experimento de convergência com quadro ruidoso",
        description="Cinco configurações de perda × sementes; medianas de épocas até MSE < τ",
    )
    _io_flags(analyze)
    _fit_flags(analyze)
    analyze.add_argument("--seeds", type=int, metavar="N", help="Número de sementes")
    analyze.add_argument("--jobs", type=int, metavar="N", help="Ajustes em paralelo")
    analyze.add_argument("--tau", type=float, help="Limiar de MSE-à-entrada")
    analyze.add_argument(
        "--replace-frame", dest="replace_frame", type=int, metavar="I", help="Quadro corrompido"
    )
    analyze.add_argument("--noise-seed", dest="noise_seed", type=int, help="Semente do ruído")

    metrics = subparsers.add_parser(
        "metrics", help="Compara dois diretórios de quadros", description="PSNR/SSIM por quadro"
    )
    _io_flags(metrics)
    metrics.add_argument("--ref", dest="reference_dir", metavar="DIR", help="Quadros de referência")
    metrics.add_argument(
        "--frames", dest="eval_frames", type=int, nargs="+", metavar="I", help="Quadros avaliados"
    )
    metrics.add_argument(
        "--nmi", dest="include_nmi", action="store_const", const=True, help="Inclui a matriz NMI"
    )

    return parser
