"""
Configuração de execução (RunConfig) e o eco `run-config.echo`.

Formato em disco: texto `chave = valor` com seções [run], [task], [model] e [noise].
O eco é gravado no mesmo formato, de modo que `--config run-config.echo` reproduz a execução.
"""
import configparser
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.core.exceptions import ConfigurationException, FileNotFoundException, ValidationException
from src.domain.models import InterpolationRequest, ModelConfig, NoiseKind, NoiseSpec, TaskConfig

SECTIONS = ("run", "task", "model", "noise")

Sections = dict[str, dict[str, str]]

# chave do arquivo -> caminho no TaskConfig
_TASK_PATHS: dict[str, tuple[str, ...]] = {
    "kind": ("kind",),
    "epochs": ("epochs",),
    "learning_rate": ("learning_rate",),
    "seed": ("seed",),
    "lambda_rec": ("weights", "rec"),
    "lambda_spl": ("weights", "spl"),
    "lambda_var": ("weights", "var"),
    "perceptual": ("perceptual",),
    "ablation": ("ablation",),
    "alphas": ("interpolation", "alphas"),
    "sr_scale": ("sr_scale",),
    "mask_path": ("mask_path",),
    "early_stop": ("early_stop",),
    "plateau_window": ("plateau_window",),
    "plateau_tol": ("plateau_tol",),
    "capture_plateau_snapshot": ("capture_plateau_snapshot",),
    "pyramid_factors": ("pyramid", "factors"),
    "pyramid_kernel": ("pyramid", "kernel"),
}
_TUPLE_KEYS = {"alphas", "pyramid_factors", "seeds", "frames", "eval_frames"}


class RunSection(BaseModel):
    """Parâmetros globais da execução."""

    command: str = Field(..., description="Subcomando")
    input_dir: Optional[str] = Field(default=None, description="Diretório de quadros de entrada")
    output_dir: Optional[str] = Field(default=None, description="Diretório de saída")
    preset: Optional[str] = Field(default=None, description="Preset base")
    reference_dir: Optional[str] = Field(default=None, description="Quadros de referência")
    features_path: Optional[str] = Field(
        default=None, description="Checkpoint do extrator de características (importado)"
    )
    seeds: tuple[int, ...] = Field(default=(0,), min_length=1)
    jobs: Optional[int] = Field(default=None, ge=1, le=64)
    threshold: float = Field(default=1e-2, gt=0.0, description="τ do experimento de convergência")
    save_checkpoint: bool = Field(default=False, description="Grava os parâmetros ajustados")
    eval_frames: Optional[tuple[int, ...]] = Field(default=None, description="Quadros avaliados")
    include_nmi: bool = Field(default=False, description="Inclui a matriz NMI no relatório")

    model_config = ConfigDict(frozen=True)


class NoiseSettings(BaseModel):
    """Degradações pedidas na linha de comando, compostas em ordem fixa."""

    scale: Optional[int] = Field(default=None, ge=1, description="Fator de downscale")
    gaussian: Optional[float] = Field(default=None, gt=0.0, description="σ em [0, 255]")
    poisson: Optional[float] = Field(default=None, gt=0.0, description="λ em [0, 255]")
    replace_frame: Optional[int] = Field(default=None, ge=0)
    frames: Optional[tuple[int, ...]] = Field(default=None, description="Subconjunto de quadros")
    seed: int = Field(default=0, ge=0)

    model_config = ConfigDict(frozen=True)

    @property
    def is_empty(self) -> bool:
        return not self.specs()

    def specs(self) -> list[NoiseSpec]:
        """downscale → gaussiano → Poisson → substituição de quadro."""
        specs: list[NoiseSpec] = []
        if self.scale is not None and self.scale > 1:
            specs.append(NoiseSpec(kind=NoiseKind.DOWNSCALE, scale=self.scale, seed=self.seed))
        if self.gaussian is not None:
            specs.append(
                NoiseSpec(
                    kind=NoiseKind.GAUSSIAN, sigma=self.gaussian, frames=self.frames, seed=self.seed
                )
            )
        if self.poisson is not None:
            specs.append(
                NoiseSpec(
                    kind=NoiseKind.POISSON, rate=self.poisson, frames=self.frames, seed=self.seed
                )
            )
        if self.replace_frame is not None:
            specs.append(
                NoiseSpec(
                    kind=NoiseKind.FRAME_REPLACE, frames=(self.replace_frame,), seed=self.seed
                )
            )
        return specs


class RunConfig(BaseModel):
    """
    Configuração totalmente resolvida: preset ← arquivo ← flags.
    Nenhum cálculo começa antes desta validação.
    """

    run: RunSection
    task: TaskConfig
    noise: NoiseSettings = Field(default_factory=NoiseSettings)

    model_config = ConfigDict(frozen=True)

    def to_sections(self) -> Sections:
        """Representação textual completa (sementes incluídas)."""
        run = {name: format_value(getattr(self.run, name)) for name in RunSection.model_fields}
        task: dict[str, str] = {}
        dumped = self.task.model_dump()
        for key, path in _TASK_PATHS.items():
            task[key] = format_value(_lookup(dumped, path))
        model = {
            name: format_value(getattr(self.task.model, name)) for name in ModelConfig.model_fields
        }
        noise = {
            name: format_value(getattr(self.noise, name)) for name in NoiseSettings.model_fields
        }
        return {"run": run, "task": task, "model": model, "noise": noise}

    def render_echo(self) -> str:
        sections = self.to_sections()
        lines: list[str] = []
        for section in SECTIONS:
            lines.append(f"[{section}]")
            lines.extend(f"{key} = {value}".rstrip() for key, value in sections[section].items())
            lines.append("")
        return "\n".join(lines)

    def write_echo(self, path: Path | str) -> Path:
        target = Path(path)
        target.write_text(self.render_echo(), encoding="utf-8")
        return target


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    return parser


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(item) for item in value)
    if isinstance(value, dict):
        raise TypeError("valores aninhados não são serializáveis no eco")
    return str(value)


def _lookup(data: Mapping[str, Any], path: tuple[str, ...]) -> Any:
    current: Any = data
    for key in path:
        if current is None:
            return None
        current = current[key]
    return current


def _parse(key: str, raw: str) -> Any:
    value = raw.strip()
    if value == "":
        return None
    if key in _TUPLE_KEYS:
        return tuple(item.strip() for item in value.split(",") if item.strip())
    return value


def read_config_file(path: Path | str) -> Sections:
    """
    Lê um arquivo `chave = valor` com seções [run], [task], [model], [noise].

    Raises:
        FileNotFoundException: Arquivo inexistente
        ConfigurationException: Sintaxe inválida ou seção desconhecida
    """
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundException(str(source))
    parser = _new_parser()
    try:
        with open(source, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except configparser.Error as e:
        raise ConfigurationException(
            config_key=str(source), reason=f"sintaxe inválida: {e}"
        ) from e

    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ConfigurationException(
            config_key=str(source), reason=f"seções desconhecidas: {', '.join(unknown)}"
        )
    return {name: dict(parser[name]) for name in parser.sections()}


def merge_sections(*layers: Mapping[str, Mapping[str, Optional[str]]]) -> Sections:
    """Camadas posteriores sobrescrevem as anteriores; valores None são ignorados."""
    merged: Sections = {}
    for layer in layers:
        for section, values in layer.items():
            target = merged.setdefault(section, {})
            for key, value in values.items():
                if value is not None:
                    target[key] = value
    return merged


def _check_keys(section: str, values: Mapping[str, str], allowed: set[str]) -> None:
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigurationException(
            config_key=f"[{section}]", reason=f"chaves desconhecidas: {', '.join(unknown)}"
        )


def _task_data(
    base: TaskConfig, task_values: Mapping[str, str], model_values: Mapping[str, str]
) -> dict[str, Any]:
    _check_keys("task", task_values, set(_TASK_PATHS) | {"factor"})
    _check_keys("model", model_values, set(ModelConfig.model_fields))

    data = base.model_dump()
    for key, raw in task_values.items():
        if key == "factor":
            continue
        value = _parse(key, raw)
        path = _TASK_PATHS[key]
        if key == "alphas":
            data["interpolation"] = None if value is None else {"alphas": value}
            continue
        if len(path) == 1:
            data[path[0]] = value
        else:
            parent, child = path
            data[parent] = {**(data.get(parent) or {}), child: value}

    factor = _parse("factor", task_values.get("factor", ""))
    if factor is not None:
        try:
            request = InterpolationRequest.from_factor(int(factor))
        except ValueError as e:
            raise ValidationException(str(e), field="factor") from e
        data["interpolation"] = request.model_dump()

    data["model"] = {
        **data["model"],
        **{key: _parse(key, raw) for key, raw in model_values.items()},
    }
    # campos obrigatórios não aceitam vazio: mantém o valor do preset
    for key in ("kind", "epochs", "learning_rate", "seed"):
        if data.get(key) is None:
            data[key] = getattr(base, key)
    return data


def _present(values: Mapping[str, str]) -> dict[str, Any]:
    parsed = {key: _parse(key, raw) for key, raw in values.items()}
    return {key: value for key, value in parsed.items() if value is not None}


def _validation_error(e: ValidationError, prefix: str) -> ValidationException:
    errors = e.errors()
    field = ".".join(str(part) for part in errors[0].get("loc", ())) or prefix
    return ValidationException(
        f"valor inválido em [{prefix}] {field}: {errors[0]['msg']}",
        field=field,
        details={"errors": [f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in errors]},
    )


def build_run_config(
    sections: Mapping[str, Mapping[str, str]], base_task: TaskConfig
) -> RunConfig:
    """
    Resolve as seções sobre o TaskConfig base (preset).

    Raises:
        ConfigurationException: Chave desconhecida
        ValidationException: Valor fora do domínio
    """
    run_values = dict(sections.get("run", {}))
    noise_values = dict(sections.get("noise", {}))
    _check_keys("run", run_values, set(RunSection.model_fields))
    _check_keys("noise", noise_values, set(NoiseSettings.model_fields))

    try:
        task = TaskConfig.model_validate(
            _task_data(base_task, sections.get("task", {}), sections.get("model", {}))
        )
    except ValidationError as e:
        raise _validation_error(e, "task") from e

    try:
        run = RunSection.model_validate(_present(run_values))
    except ValidationError as e:
        raise _validation_error(e, "run") from e

    try:
        noise = NoiseSettings.model_validate(_present(noise_values))
    except ValidationError as e:
        raise _validation_error(e, "noise") from e

    return RunConfig(run=run, task=task, noise=noise)
