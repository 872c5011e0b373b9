"""
Subcomandos da CLI.

Cada `cmd_*` recebe os argumentos interpretados e devolve o código de saída; o trabalho
em si fica nas funções `_run_*`, que recebem o RunConfig resolvido e devolvem os arquivos
gravados.
"""
import argparse
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np

from src.cli.dependencies import get_feature_extractor, get_frame_store, get_task_service
from src.cli.runner import run_command
from src.core.exceptions import FrameIOException, ValidationException
from src.core.logger import get_logger
from src.domain.models import TaskKind, VideoSequence
from src.metrics.quality import build_metrics_report
from src.model.checkpoint import save_checkpoint
from src.schemas.report import (
    FitSummary,
    TimingReport,
    dump_json,
    write_curves_csv,
    write_json,
    write_matrix_csv,
    write_setting_curves_csv,
)
from src.schemas.run_config import RunConfig
from src.services.degrade import apply_noise_specs
from src.services.experiment import convergence_experiment
from src.services.tasks import TaskResult

logger = get_logger(__name__)

METRICS_FILE = "metrics.json"
CURVES_FILE = "curves.csv"
TIMING_FILE = "timing.json"
ECHO_FILE = "run-config.echo"
NMI_FILE = "nmi.csv"
CHECKPOINT_STEM = "model"


def _required(value: Optional[str], field: str, flag: str) -> str:
    if not value:
        raise ValidationException(f"{flag} é obrigatório", field=field)
    return value


def _output_dir(config: RunConfig) -> Path:
    root = Path(_required(config.run.output_dir, "output_dir", "--out"))
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FrameIOException(str(root), f"falha ao criar diretório: {e}") from e
    return root


def _report_config(config: RunConfig) -> dict[str, Any]:
    """Parte da configuração que determina o resultado (sem caminhos de E/S)."""
    return {
        "preset": config.run.preset,
        "task": config.task.model_dump(mode="json", exclude={"mask_path"}),
        "noise": config.noise.model_dump(mode="json"),
    }


def _evaluation_pairs(
    result: TaskResult, observed: VideoSequence, reference: VideoSequence, config: RunConfig
) -> tuple[np.ndarray, np.ndarray, Optional[list[int]], Optional[np.ndarray]]:
    """
    Alinha saída e referência: (restaurado, referência, índices, entrada degradada).

    Na interpolação, uma referência com a taxa de saída avalia só os quadros sintetizados;
    uma referência com a taxa de entrada avalia os quadros nas posições originais.
    """
    restored = result.video.frames
    ref = reference.frames
    degraded = observed.frames

    if config.task.kind is TaskKind.INTERPOLATE and config.task.interpolation is not None:
        step = config.task.interpolation.factor
        if ref.shape[0] == restored.shape[0]:
            return restored, ref, result.held_out, None
        if ref.shape[0] == observed.length:
            return restored[::step], ref, None, degraded if degraded.shape == ref.shape else None
        raise ValidationException(
            f"referência com {ref.shape[0]} quadros não corresponde à entrada "
            f"({observed.length}) nem à saída ({restored.shape[0]})",
            field="reference_dir",
        )

    if ref.shape[0] != restored.shape[0]:
        raise ValidationException(
            f"{restored.shape[0]} quadros restaurados para {ref.shape[0]} de referência",
            field="reference_dir",
        )
    return restored, ref, None, degraded if degraded.shape == ref.shape else None


def _run_task(config: RunConfig) -> list[Path]:
    """
    denoise / interpolate / superres / remove.

    Com degradações na linha de comando, a entrada é tratada como limpa: é degradada,
    restaurada e comparada com ela mesma.
    """
    store = get_frame_store()
    out = _output_dir(config)
    cfg = config.task

    observed = store.load_frames(_required(config.run.input_dir, "input_dir", "--in"))
    specs = config.noise.specs()
    reference: Optional[VideoSequence] = None
    if specs:
        reference = observed
        observed = apply_noise_specs(observed, specs)
    if config.run.reference_dir:
        reference = store.load_frames(config.run.reference_dir)

    masks = None
    if cfg.kind is TaskKind.REMOVAL:
        masks = store.load_masks(_required(cfg.mask_path, "mask_path", "--mask"), observed.length)

    clean = None
    if reference is not None and reference.frames.shape == observed.frames.shape:
        clean = reference.frames

    service = get_task_service(observed.frame_shape[0], config.run.features_path)
    result = service.run(observed, cfg, masks=masks, clean=clean, checkpoint_dir=out)

    files = store.save_frames(result.video, out)

    fit = FitSummary(
        epochs_run=result.fit.epochs_run,
        final_loss=result.fit.final_loss,
        plateau_epoch=result.fit.plateau_epoch,
        early_stop_epoch=result.fit.early_stop_epoch,
        warnings=result.fit.warnings,
    )
    noise = [spec.model_dump(mode="json") for spec in specs]
    if reference is not None:
        restored, ref, indices, degraded = _evaluation_pairs(result, observed, reference, config)
        report = build_metrics_report(
            config.run.command,
            restored,
            ref,
            indices=indices,
            degraded=degraded,
            fit=fit,
            config=_report_config(config),
            noise=noise,
        )
    else:
        report = build_metrics_report(
            config.run.command,
            result.video.frames,
            fit=fit,
            config=_report_config(config),
            noise=noise,
        )

    files.append(write_json(report, out / METRICS_FILE))
    files.append(write_curves_csv(result.fit.curves, out / CURVES_FILE))
    files.append(write_json(TimingReport.from_epochs(result.fit.epoch_seconds), out / TIMING_FILE))
    if config.run.save_checkpoint:
        files.append(save_checkpoint(result.fit.parameters, out / CHECKPOINT_STEM))
    files.append(config.write_echo(out / ECHO_FILE))

    if report.aggregate is not None:
        logger.info(
            "Métricas contra a referência",
            extra={
                "mean_psnr": report.aggregate.mean_psnr,
                "mean_ssim": report.aggregate.mean_ssim,
                "baseline_psnr": report.baseline.mean_psnr if report.baseline else None,
            },
        )
    return files


def _run_degrade(config: RunConfig) -> list[Path]:
    specs = config.noise.specs()
    if not specs:
        raise ValidationException(
            "nenhuma degradação pedida (use --gaussian, --poisson, --replace-frame ou --scale)",
            field="noise",
        )
    store = get_frame_store()
    out = _output_dir(config)
    video = store.load_frames(_required(config.run.input_dir, "input_dir", "--in"))
    degraded = apply_noise_specs(video, specs)

    files = store.save_frames(degraded, out)
    same_shape = degraded.frames.shape == video.frames.shape
    report = build_metrics_report(
        "degrade",
        degraded.frames,
        video.frames if same_shape else None,
        config={"noise": config.noise.model_dump(mode="json")},
        noise=[spec.model_dump(mode="json") for spec in specs],
    )
    files.append(write_json(report, out / METRICS_FILE))
    files.append(config.write_echo(out / ECHO_FILE))
    return files


def _run_analyze(config: RunConfig) -> list[Path]:
    store = get_frame_store()
    out = _output_dir(config)
    clean = store.load_frames(_required(config.run.input_dir, "input_dir", "--in"))
    extractor = get_feature_extractor(clean.frame_shape[0], config.run.features_path)

    outcome = convergence_experiment(
        clean,
        config.task,
        seeds=config.run.seeds,
        threshold=config.run.threshold,
        extractor=extractor,
        jobs=config.run.jobs,
        corrupted_frame=config.noise.replace_frame,
        noise_seed=config.noise.seed,
    )

    names = [summary.name for summary in outcome.report.settings]
    files = [
        write_json(outcome.report, out / METRICS_FILE),
        write_setting_curves_csv(
            names, [outcome.median_curves[name] for name in names], out / CURVES_FILE
        ),
        write_matrix_csv(outcome.report.nmi, out / NMI_FILE),
    ]
    if outcome.corrupted is not None:
        files.extend(store.save_frames(outcome.corrupted, out / "corrupted"))
    for name, snapshot in outcome.snapshots.items():
        if snapshot is not None:
            frames = np.clip(snapshot, 0.0, 1.0)
            files.extend(store.save_frames(clean.with_frames(frames), out / "snapshots" / name))
    files.append(config.write_echo(out / ECHO_FILE))

    logger.info(
        "Experimento de convergência gravado",
        extra={
            "ordering_holds": outcome.report.ordering_holds,
            "medians": [s.median_epochs_to_threshold for s in outcome.report.settings],
        },
    )
    return files


def _run_metrics(config: RunConfig) -> list[Path]:
    store = get_frame_store()
    restored = store.load_frames(_required(config.run.input_dir, "input_dir", "--in"))
    reference = store.load_frames(_required(config.run.reference_dir, "reference_dir", "--ref"))
    if restored.length != reference.length:
        raise ValidationException(
            f"{restored.length} quadros em --in para {reference.length} em --ref",
            field="frames",
            details={"input": restored.length, "reference": reference.length},
        )
    indices = config.run.eval_frames
    if indices is not None and any(i >= restored.length for i in indices):
        raise ValidationException(
            f"--frames fora do intervalo [0, {restored.length - 1}]", field="eval_frames"
        )

    report = build_metrics_report(
        "metrics",
        restored.frames,
        reference.frames,
        indices=indices,
        include_nmi=config.run.include_nmi,
    )
    if not config.run.output_dir:
        sys.stdout.write(dump_json(report))
        return []
    out = _output_dir(config)
    return [write_json(report, out / METRICS_FILE), config.write_echo(out / ECHO_FILE)]


# === Entradas da CLI ===


def cmd_denoise(args: argparse.Namespace) -> int:
    return run_command("denoise", args, _run_task)


def cmd_interpolate(args: argparse.Namespace) -> int:
    return run_command("interpolate", args, _run_task)


def cmd_superres(args: argparse.Namespace) -> int:
    return run_command("superres", args, _run_task)


def cmd_remove(args: argparse.Namespace) -> int:
    return run_command("remove", args, _run_task)


def cmd_degrade(args: argparse.Namespace) -> int:
    return run_command("degrade", args, _run_degrade)


def cmd_analyze(args: argparse.Namespace) -> int:
    return run_command("analyze", args, _run_analyze)


def cmd_metrics(args: argparse.Namespace) -> int:
    return run_command("metrics", args, _run_metrics)


COMMAND_HANDLERS = {
    "denoise": cmd_denoise,
    "interpolate": cmd_interpolate,
    "superres": cmd_superres,
    "remove": cmd_remove,
    "degrade": cmd_degrade,
    "analyze": cmd_analyze,
    "metrics": cmd_metrics,
}


def dispatch(args: argparse.Namespace) -> int:
    """Encaminha para o `cmd_*` do subcomando escolhido."""
    return COMMAND_HANDLERS[args.command](args)
