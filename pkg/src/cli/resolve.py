"""
Resolução do RunConfig: preset ← arquivo --config ← flags da linha de comando.
"""
import argparse
import asyncio
from typing import Any, Optional

from src.cli.dependencies import get_preset_manager
from src.cli.parser import TASK_COMMANDS
from src.core.exceptions import ValidationException
from src.domain.models import TaskConfig, TaskKind
from src.schemas.run_config import (
    RunConfig,
    build_run_config,
    format_value,
    merge_sections,
    read_config_file,
)

# comandos que ajustam o modelo e portanto partem de um preset
_FIT_COMMANDS = (*TASK_COMMANDS, "analyze")


def _text(value: Any) -> Optional[str]:
    if value is None:
        return None
    return format_value(tuple(value) if isinstance(value, list) else value)


def flag_sections(command: str, args: argparse.Namespace) -> dict[str, dict[str, Optional[str]]]:
    """Flags presentes na linha de comando, no formato das seções do arquivo."""

    def get(name: str) -> Any:
        return getattr(args, name, None)

    seeds: Optional[tuple[int, ...]] = None
    if get("seeds") is not None:
        if get("seeds") < 1:
            raise ValidationException("--seeds deve ser >= 1", field="seeds")
        first = get("seed") or 0
        seeds = tuple(range(first, first + get("seeds")))

    run = {
        "command": command,
        "input_dir": get("input_dir"),
        "output_dir": get("output_dir"),
        "preset": get("preset"),
        "reference_dir": get("reference_dir"),
        "features_path": get("features_path"),
        "seeds": seeds,
        "jobs": get("jobs"),
        "threshold": get("tau"),
        "save_checkpoint": get("save_checkpoint"),
        "eval_frames": get("eval_frames"),
        "include_nmi": get("include_nmi"),
    }
    task = {
        "epochs": get("epochs"),
        "learning_rate": get("lr"),
        "lambda_rec": get("lambda_rec"),
        "lambda_spl": get("lambda_spl"),
        "lambda_var": get("lambda_var"),
        "ablation": get("ablate"),
        "early_stop": get("early_stop"),
        "factor": get("factor"),
        "alphas": get("alphas"),
        "mask_path": get("mask_path"),
    }
    noise = {
        "gaussian": get("gaussian"),
        "poisson": get("poisson"),
        "replace_frame": get("replace_frame"),
        "frames": get("frames"),
        "seed": get("noise_seed"),
    }

    if command == "degrade":
        noise["scale"] = get("scale")
    else:
        task["seed"] = get("seed")
    if command == "superres":
        task["sr_scale"] = get("scale")
    if command in TASK_COMMANDS:
        task["kind"] = TaskKind.from_string(command).value

    return {
        "run": {key: _text(value) for key, value in run.items()},
        "task": {key: _text(value) for key, value in task.items()},
        "noise": {key: _text(value) for key, value in noise.items()},
    }


def _base_task(command: str, preset: Optional[str]) -> tuple[Optional[str], TaskConfig]:
    if command not in _FIT_COMMANDS and preset is None:
        return None, TaskConfig()
    manager = get_preset_manager()
    if preset is None:
        if command == "analyze":
            preset = manager.default_preset_name(TaskKind.DENOISE, desk=True)
        else:
            preset = manager.default_preset_name(TaskKind.from_string(command))
    return preset, asyncio.run(manager.get_preset(preset))


def resolve_run_config(command: str, args: argparse.Namespace) -> RunConfig:
    """
    Monta o RunConfig totalmente resolvido antes de qualquer cálculo.

    Raises:
        FileNotFoundException: --config inexistente
        ConfigurationException: Preset ou chave desconhecidos
        ValidationException: Valores inválidos
    """
    file_sections = read_config_file(args.config) if getattr(args, "config", None) else {}
    flags = flag_sections(command, args)

    preset = flags["run"].get("preset") or file_sections.get("run", {}).get("preset") or None
    preset, base = _base_task(command, preset)

    merged = merge_sections(file_sections, flags, {"run": {"command": command, "preset": preset}})
    return build_run_config(merged, base)
