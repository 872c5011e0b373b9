"""
Experimento de convergência com um quadro substituído por ruído.

Cinco configurações (vídeo limpo + L1; corrompido + L1; + pirâmide; + variação;
todas as perdas) são ajustadas para várias sementes; o relatório traz as
medianas de épocas até MSE-à-entrada < τ, os snapshots do platô e a matriz NMI.
"""
import asyncio
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Optional, Sequence

import numpy as np

from src.core.config import settings
from src.core.logger import get_logger
from src.domain.interfaces import IFeatureExtractor
from src.domain.models import FitResult, LossWeights, TaskConfig, VideoSequence
from src.metrics.quality import nmi_matrix, psnr
from src.schemas.report import ExperimentReport, SettingSummary
from src.services.degrade import replace_frame_with_noise
from src.services.fitting import FittingService

logger = get_logger(__name__)

# ruído uniforme no quadro do meio deixa MSE-à-entrada ≈ 0.028 num ajuste suave;
# τ = 1e-2 exige memorizar cerca de 2/3 da energia do ruído
DEFAULT_THRESHOLD = 1e-2
ANALYSIS_SPL = 1.0
ANALYSIS_VAR = 0.1


@dataclass(frozen=True)
class ExperimentSetting:
    name: str
    clean_input: bool
    weights: LossWeights
    perceptual: bool = False


def default_settings(
    lambda_spl: float = ANALYSIS_SPL, lambda_var: float = ANALYSIS_VAR
) -> list[ExperimentSetting]:
    """As cinco configurações, na ordem do relatório."""
    l1 = LossWeights(rec=1.0, spl=0.0, var=0.0)
    return [
        ExperimentSetting("clean-l1", True, l1),
        ExperimentSetting("corrupt-l1", False, l1),
        ExperimentSetting("corrupt-l1-spl", False, LossWeights(rec=1.0, spl=lambda_spl, var=0.0)),
        ExperimentSetting("corrupt-l1-var", False, LossWeights(rec=1.0, spl=0.0, var=lambda_var)),
        ExperimentSetting(
            "corrupt-all", False, LossWeights(rec=1.0, spl=lambda_spl, var=lambda_var), True
        ),
    ]


def epochs_to_threshold(curve: Sequence[float], threshold: float) -> Optional[int]:
    """Primeira época (1-based) com valor < threshold."""
    for index, value in enumerate(curve):
        if value < threshold:
            return index + 1
    return None


def _median_epochs(values: Sequence[Optional[int]], epochs: int) -> float:
    # nunca atingir o limiar conta como epochs + 1
    return float(np.median([v if v is not None else epochs + 1 for v in values]))


def ordering_holds(medians: Sequence[float]) -> bool:
    """1 < 2 ≤ {3, 4} < 5."""
    if len(medians) != 5:
        return False
    first, second, spl, var, full = medians
    return first < second <= min(spl, var) and max(spl, var) < full


@dataclass
class ExperimentRun:
    setting: ExperimentSetting
    seed: int
    result: FitResult


@dataclass
class ExperimentOutcome:
    """Relatório + curvas medianas e snapshots por configuração."""

    report: ExperimentReport
    median_curves: dict[str, list[float]] = field(default_factory=dict)
    snapshots: dict[str, Optional[np.ndarray]] = field(default_factory=dict)
    corrupted: Optional[VideoSequence] = None
    runs: list[ExperimentRun] = field(default_factory=list)


class ConvergenceExperiment:
    """
    Executa os ajustes do experimento em paralelo (uma thread por configuração × semente).
    """

    def __init__(
        self,
        base_config: TaskConfig,
        extractor: Optional[IFeatureExtractor] = None,
        jobs: Optional[int] = None,
    ) -> None:
        self.base_config = base_config.updated(capture_plateau_snapshot=True, early_stop=False)
        self.fitting = FittingService(extractor)
        self.jobs = jobs or settings.max_jobs

    def _run_one(
        self,
        setting: ExperimentSetting,
        seed: int,
        clean: VideoSequence,
        corrupted: VideoSequence,
    ) -> ExperimentRun:
        cfg = self.base_config.updated(
            weights=setting.weights, perceptual=setting.perceptual, seed=seed, ablation=None
        )
        video = clean if setting.clean_input else corrupted
        logger.info("Configuração iniciada", extra={"setting": setting.name, "seed": seed})
        result = self.fitting.fit(video, cfg, clean=clean.frames)
        return ExperimentRun(setting=setting, seed=seed, result=result)

    async def run(
        self,
        clean: VideoSequence,
        seeds: Sequence[int],
        threshold: float = DEFAULT_THRESHOLD,
        corrupted_frame: Optional[int] = None,
        noise_seed: int = 0,
        experiment_settings: Optional[Sequence[ExperimentSetting]] = None,
    ) -> ExperimentOutcome:
        """
        Args:
            clean: Vídeo limpo
            seeds: Sementes de inicialização (a mediana é tomada entre elas)
            threshold: τ para épocas-até-o-limiar
            corrupted_frame: Quadro substituído por ruído (padrão: o do meio)
            noise_seed: Semente do quadro de ruído
            experiment_settings: Configurações (padrão: as cinco)
        """
        index = clean.length // 2 if corrupted_frame is None else corrupted_frame
        corrupted = replace_frame_with_noise(clean, index, noise_seed)
        chosen = list(experiment_settings or default_settings())

        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            pending = [
                loop.run_in_executor(
                    pool, partial(self._run_one, setting, seed, clean, corrupted)
                )
                for setting in chosen
                for seed in seeds
            ]
            runs: list[ExperimentRun] = list(await asyncio.gather(*pending))

        summaries: list[SettingSummary] = []
        medians: list[float] = []
        median_curves: dict[str, list[float]] = {}
        snapshots: dict[str, Optional[np.ndarray]] = {}
        epochs = self.base_config.epochs
        noisy_psnr = psnr(corrupted.frames[index], clean.frames[index])

        for setting in chosen:
            mine = [run for run in runs if run.setting.name == setting.name]
            reached = [
                epochs_to_threshold(run.result.curves.mse_to_input, threshold) for run in mine
            ]
            median = _median_epochs(reached, epochs)
            medians.append(median)
            median_curves[setting.name] = np.median(
                np.asarray([run.result.curves.mse_to_input for run in mine]), axis=0
            ).tolist()

            snapshot_scores = [
                psnr(run.result.plateau_snapshot[index], clean.frames[index])
                for run in mine
                if run.result.plateau_snapshot is not None
            ]
            snapshots[setting.name] = mine[0].result.plateau_snapshot if mine else None
            summaries.append(
                SettingSummary(
                    name=setting.name,
                    clean_input=setting.clean_input,
                    weights=setting.weights.model_dump(),
                    perceptual=setting.perceptual,
                    epochs_to_threshold=reached,
                    median_epochs_to_threshold=median,
                    plateau_epochs=[run.result.plateau_epoch for run in mine],
                    snapshot_psnr=float(np.median(snapshot_scores)) if snapshot_scores else None,
                )
            )

        report = ExperimentReport(
            threshold=threshold,
            seeds=list(seeds),
            corrupted_frame=index,
            noisy_psnr=noisy_psnr,
            settings=summaries,
            ordering_holds=ordering_holds(medians),
            nmi=nmi_matrix(corrupted.frames),
            config=self.base_config.model_dump(mode="json"),
        )
        logger.info(
            "Experimento concluído",
            extra={"medians": medians, "ordering_holds": report.ordering_holds},
        )
        return ExperimentOutcome(
            report=report,
            median_curves=median_curves,
            snapshots=snapshots,
            corrupted=corrupted,
            runs=runs,
        )


async def run_convergence_experiment(
    clean: VideoSequence,
    base_config: TaskConfig,
    seeds: Sequence[int],
    threshold: float = DEFAULT_THRESHOLD,
    extractor: Optional[IFeatureExtractor] = None,
    jobs: Optional[int] = None,
    **kwargs,
) -> ExperimentOutcome:
    experiment = ConvergenceExperiment(base_config, extractor, jobs)
    return await experiment.run(clean, seeds, threshold, **kwargs)


def convergence_experiment(
    clean: VideoSequence,
    base_config: TaskConfig,
    seeds: Sequence[int],
    threshold: float = DEFAULT_THRESHOLD,
    extractor: Optional[IFeatureExtractor] = None,
    jobs: Optional[int] = None,
    **kwargs,
) -> ExperimentOutcome:
    """Versão síncrona de `run_convergence_experiment`."""
    return asyncio.run(
        run_convergence_experiment(clean, base_config, seeds, threshold, extractor, jobs, **kwargs)
    )
