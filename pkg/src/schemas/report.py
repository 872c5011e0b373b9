import csv
import json
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import BaseModel, Field

from src.domain.models import LossCurves

SCHEMA_VERSION = "1.0"

CURVE_COLUMNS = ("epoch", "total", "rec", "spl", "var")


class FrameMetrics(BaseModel):
    """Métricas de um quadro contra a referência."""

    index: int = Field(..., ge=0, description="Índice do quadro na saída")
    psnr: float = Field(..., ge=0.0, description="PSNR em dB (limitado a 99)")
    ssim: Optional[float] = Field(default=None, ge=-1.0, le=1.0, description="SSIM médio")


class MetricsAggregate(BaseModel):
    mean_psnr: float = Field(..., ge=0.0)
    mean_ssim: Optional[float] = Field(default=None, ge=-1.0, le=1.0)
    frame_count: int = Field(..., ge=0)


class FitSummary(BaseModel):
    """Resumo determinístico de um ajuste (sem tempo de relógio)."""

    epochs_run: int = Field(..., ge=0)
    final_loss: float
    plateau_epoch: Optional[int] = None
    early_stop_epoch: Optional[int] = None
    warnings: list[str] = Field(default_factory=list)


class MetricsReport(BaseModel):
    """
    Relatório de métricas gravado em metrics.json.
    Não contém tempo de execução: repetições com o mesmo config geram bytes idênticos.
    """

    schema_version: str = Field(default=SCHEMA_VERSION)
    command: str = Field(..., description="Subcomando que gerou o relatório")
    frames: list[FrameMetrics] = Field(default_factory=list)
    aggregate: Optional[MetricsAggregate] = None
    baseline: Optional[MetricsAggregate] = Field(
        default=None, description="Métricas da entrada degradada contra a referência"
    )
    nmi: Optional[list[list[float]]] = Field(default=None, description="Matriz NMI entre quadros")
    fit: Optional[FitSummary] = None
    config: dict[str, Any] = Field(default_factory=dict, description="Eco da configuração")
    noise: list[dict[str, Any]] = Field(default_factory=list, description="Degradações aplicadas")

    model_config = {
        "json_schema_extra": {
            "example": {
                "schema_version": "1.0",
                "command": "metrics",
                "frames": [{"index": 0, "psnr": 99.0, "ssim": 1.0}],
                "aggregate": {"mean_psnr": 99.0, "mean_ssim": 1.0, "frame_count": 1},
            }
        }
    }


class TimingReport(BaseModel):
    """Tempo de relógio por época (timing.json), separado do relatório determinístico."""

    schema_version: str = Field(default=SCHEMA_VERSION)
    epochs_run: int = Field(..., ge=0)
    epoch_seconds: list[float] = Field(default_factory=list)
    total_seconds: float = Field(..., ge=0.0)
    mean_epoch_seconds: Optional[float] = None

    @classmethod
    def from_epochs(cls, epoch_seconds: Sequence[float]) -> "TimingReport":
        values = [float(value) for value in epoch_seconds]
        return cls(
            epochs_run=len(values),
            epoch_seconds=values,
            total_seconds=float(sum(values)),
            mean_epoch_seconds=float(sum(values) / len(values)) if values else None,
        )


class SettingSummary(BaseModel):
    """Resultado agregado (mediana entre sementes) de uma configuração do experimento."""

    name: str
    clean_input: bool
    weights: dict[str, float]
    perceptual: bool
    epochs_to_threshold: list[Optional[int]] = Field(default_factory=list)
    median_epochs_to_threshold: Optional[float] = None
    plateau_epochs: list[Optional[int]] = Field(default_factory=list)
    snapshot_psnr: Optional[float] = Field(
        default=None, description="PSNR do quadro corrompido no snapshot do platô vs limpo"
    )


class ExperimentReport(BaseModel):
    """Relatório do experimento de convergência com quadro ruidoso."""

    schema_version: str = Field(default=SCHEMA_VERSION)
    command: str = Field(default="analyze")
    threshold: float = Field(..., gt=0.0, description="Limiar τ de MSE-à-entrada")
    seeds: list[int] = Field(default_factory=list)
    corrupted_frame: int = Field(..., ge=0)
    noisy_psnr: float = Field(..., description="PSNR do quadro ruidoso vs limpo")
    settings: list[SettingSummary] = Field(default_factory=list)
    ordering_holds: bool = Field(
        ..., description="1 < 2 ≤ {3, 4} < 5 nas medianas de épocas até o limiar"
    )
    nmi: list[list[float]] = Field(default_factory=list)
    config: dict[str, Any] = Field(default_factory=dict)


def dump_json(model: BaseModel) -> str:
    """Serialização estável (chaves ordenadas, indentação fixa)."""
    return json.dumps(model.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def write_json(model: BaseModel, path: Path | str) -> Path:
    target = Path(path)
    target.write_text(dump_json(model), encoding="utf-8")
    return target


def write_curves_csv(curves: LossCurves, path: Path | str) -> Path:
    """curves.csv com colunas epoch,total,rec,spl,var."""
    target = Path(path)
    with open(target, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(CURVE_COLUMNS))
        writer.writeheader()
        for row in curves.rows():
            writer.writerow({k: v if k == "epoch" else repr(v) for k, v in row.items()})
    return target


def write_setting_curves_csv(
    names: Sequence[str], curves: Sequence[Sequence[float]], path: Path | str
) -> Path:
    """Uma coluna por configuração (na ordem dada), uma linha por época."""
    target = Path(path)
    length = max((len(curve) for curve in curves), default=0)
    with open(target, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epoch", *names])
        for epoch in range(length):
            row: list[Any] = [epoch + 1]
            row.extend(repr(curve[epoch]) if epoch < len(curve) else "" for curve in curves)
            writer.writerow(row)
    return target


def write_matrix_csv(matrix: Sequence[Sequence[float]], path: Path | str) -> Path:
    """Matriz quadrada (ex: NMI entre quadros) com índices na primeira linha e coluna."""
    target = Path(path)
    with open(target, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["frame", *range(len(matrix))])
        for index, row in enumerate(matrix):
            writer.writerow([index, *(repr(float(value)) for value in row)])
    return target
