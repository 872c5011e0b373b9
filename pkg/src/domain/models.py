from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class TaskKind(str, Enum):
    """Tarefas de restauração suportadas."""

    DENOISE = "denoise"
    INTERPOLATE = "interpolate"
    SUPERRES = "superres"
    REMOVAL = "removal"

    @classmethod
    def from_string(cls, value: str) -> "TaskKind":
        """
        Converte string para TaskKind (case-insensitive, aceita 'remove').

        Raises:
            ValueError: Se a tarefa não existir
        """
        normalized = value.strip().lower()
        if normalized == "remove":
            return cls.REMOVAL
        return cls(normalized)


class SkipMode(str, Enum):
    """Conexão de atalho entre blocos do decodificador."""

    CONCAT = "concat"
    ADD = "add"


class NormMode(str, Enum):
    BATCH = "batch"
    INSTANCE = "instance"


class DownsampleKernel(str, Enum):
    """Núcleo do downsampler fixo."""

    AREA = "area"
    BICUBIC = "bicubic"


class NoiseKind(str, Enum):
    GAUSSIAN = "gaussian"
    POISSON = "poisson"
    FRAME_REPLACE = "frame_replace"
    DOWNSCALE = "downscale"


class AblationMode(str, Enum):
    """Subconjuntos de perdas para estudos de ablação."""

    REC = "rec"
    REC_VAR = "rec+var"
    REC_SPL = "rec+spl"
    ALL = "all"


class FeatureProvenance(str, Enum):
    """Origem dos pesos do extrator de características."""

    RANDOM_SEEDED = "random-seeded"
    IMPORTED = "imported"


SR_SCALES = (1, 2, 4, 8)


# === Configuração de modelo e perdas ===


class ModelConfig(BaseModel):
    """
    Configuração do par LFPNet/FDNet.

    A grade inicial do decodificador tem H/2^L × W/2^L, com L = decoder_blocks.
    """

    latent_dim: int = Field(default=1024, ge=1, description="Dimensão D do espaço latente")
    hidden_size: int = Field(default=1024, ge=1, description="Células por camada LSTM")
    lstm_layers: int = Field(default=4, ge=1, le=8, description="Camadas LSTM empilhadas")
    channels: int = Field(default=3, ge=1, le=4, description="Canais C do quadro")
    height: int = Field(default=64, ge=1, description="Altura H do quadro")
    width: int = Field(default=64, ge=1, description="Largura W do quadro")
    decoder_blocks: int = Field(default=3, ge=0, le=8, description="Blocos de upsample (L)")
    base_channels: int = Field(default=64, ge=1, description="Canais da grade projetada")
    min_channels: int = Field(default=8, ge=1, description="Piso de canais por bloco")
    skip_mode: SkipMode = Field(default=SkipMode.CONCAT)
    norm_mode: NormMode = Field(default=NormMode.BATCH)
    train_initial_latent: bool = Field(
        default=False, description="Trata z_0 como folha treinável"
    )
    auxiliary_first_frame: bool = Field(
        default=True, description="Supervisiona f(z_0) contra o primeiro quadro"
    )
    bptt_window: Optional[int] = Field(
        default=None, ge=1, description="Janela de BPTT truncado (None = rollout inteiro)"
    )
    init_seed: int = Field(default=0, ge=0, description="Semente da inicialização dos pesos")
    latent_seed: int = Field(default=0, ge=0, description="Semente de z_0")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_grid(self) -> "ModelConfig":
        """H e W devem ser divisíveis por 2^L."""
        factor = 2**self.decoder_blocks
        if self.height % factor or self.width % factor:
            raise ValueError(
                f"height={self.height} e width={self.width} devem ser divisíveis por "
                f"2^decoder_blocks={factor}"
            )
        return self

    @property
    def grid_height(self) -> int:
        return self.height // 2**self.decoder_blocks

    @property
    def grid_width(self) -> int:
        return self.width // 2**self.decoder_blocks

    def with_frame_shape(self, channels: int, height: int, width: int) -> "ModelConfig":
        """Cópia (revalidada) ajustada ao formato do vídeo de saída."""
        return self.updated(channels=channels, height=height, width=width)

    def with_seed(self, seed: int) -> "ModelConfig":
        return self.updated(init_seed=seed, latent_seed=seed)

    def updated(self, **changes: Any) -> "ModelConfig":
        """Como `model_copy(update=...)`, mas passando pelos validadores."""
        return ModelConfig.model_validate({**self.model_dump(), **changes})


class LossWeights(BaseModel):
    """Pesos λ_rec, λ_spl e λ_var da perda final."""

    rec: float = Field(default=1.0, ge=0.0, description="λ_rec")
    spl: float = Field(default=1e-4, ge=0.0, description="λ_spl")
    var: float = Field(default=1e-4, ge=0.0, description="λ_var")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_any_positive(self) -> "LossWeights":
        if self.rec == 0.0 and self.spl == 0.0 and self.var == 0.0:
            raise ValueError("ao menos um peso de perda deve ser > 0")
        return self

    def for_ablation(self, mode: AblationMode | str) -> "LossWeights":
        """
        Zera os termos fora do subconjunto de ablação.

        Args:
            mode: rec | rec+var | rec+spl | all

        Returns:
            LossWeights: Novos pesos (os termos mantidos preservam seu valor)
        """
        mode = AblationMode(mode)
        if mode is AblationMode.REC:
            return LossWeights(rec=self.rec, spl=0.0, var=0.0)
        if mode is AblationMode.REC_VAR:
            return LossWeights(rec=self.rec, spl=0.0, var=self.var)
        if mode is AblationMode.REC_SPL:
            return LossWeights(rec=self.rec, spl=self.spl, var=0.0)
        return self


class PyramidSpec(BaseModel):
    """Fatores e núcleo da perda de pirâmide espacial."""

    factors: tuple[int, ...] = Field(default=(2, 4, 8), min_length=1)
    kernel: DownsampleKernel = Field(default=DownsampleKernel.AREA)

    model_config = ConfigDict(frozen=True)

    @field_validator("factors")
    @classmethod
    def validate_factors(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(factor < 1 for factor in v):
            raise ValueError("fatores da pirâmide devem ser >= 1")
        return v

    @property
    def max_factor(self) -> int:
        return max(self.factors)


# === Tarefas ===


class InterpolationRequest(BaseModel):
    """Lista de α para interpolação no espaço latente."""

    alphas: tuple[float, ...] = Field(default=(0.5,), min_length=1)

    model_config = ConfigDict(frozen=True)

    @field_validator("alphas")
    @classmethod
    def validate_alphas(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(not 0.0 < alpha < 1.0 for alpha in v):
            raise ValueError("todos os α devem estar em (0, 1)")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("α deve ser estritamente crescente")
        return v

    @classmethod
    def from_factor(cls, factor: int) -> "InterpolationRequest":
        """Fator n gera α = k/n para k = 1..n−1 (4× → 0.25, 0.5, 0.75)."""
        if factor < 2:
            raise ValueError("o fator de interpolação deve ser >= 2")
        return cls(alphas=tuple(k / factor for k in range(1, factor)))

    @property
    def factor(self) -> int:
        return len(self.alphas) + 1


class TaskConfig(BaseModel):
    """Configuração completa de um ajuste por vídeo."""

    kind: TaskKind = Field(default=TaskKind.DENOISE)
    weights: LossWeights = Field(default_factory=LossWeights)
    epochs: int = Field(default=3600, ge=1, description="Épocas de otimização")
    learning_rate: float = Field(default=5e-4, gt=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0)
    model: ModelConfig = Field(default_factory=ModelConfig)
    pyramid: PyramidSpec = Field(default_factory=PyramidSpec)
    perceptual: bool = Field(default=True, description="Inclui o termo perceptual em L_rec")
    ablation: Optional[AblationMode] = Field(default=None)
    interpolation: Optional[InterpolationRequest] = Field(default=None)
    sr_scale: int = Field(default=1, description="Fator de super-resolução")
    mask_path: Optional[str] = Field(default=None)
    early_stop: bool = Field(default=False)
    plateau_window: int = Field(default=50, ge=2)
    plateau_tol: float = Field(default=1e-3, gt=0.0)
    capture_plateau_snapshot: bool = Field(default=False)

    model_config = ConfigDict(frozen=True)

    @field_validator("sr_scale")
    @classmethod
    def validate_sr_scale(cls, v: int) -> int:
        if v not in SR_SCALES:
            raise ValueError(f"sr_scale deve estar em {SR_SCALES}")
        return v

    @property
    def effective_weights(self) -> LossWeights:
        """Pesos após aplicar o modo de ablação."""
        return self.weights.for_ablation(self.ablation) if self.ablation else self.weights

    def seeded_model(self) -> ModelConfig:
        return self.model.with_seed(self.seed)

    def updated(self, **changes: Any) -> "TaskConfig":
        """Cópia revalidada com os campos alterados."""
        data = self.model_dump()
        data.update(changes)
        return TaskConfig.model_validate(data)


class NoiseSpec(BaseModel):
    """Especificação reprodutível de uma degradação."""

    kind: NoiseKind
    sigma: Optional[float] = Field(default=None, gt=0.0, description="Desvio padrão em [0, 255]")
    rate: Optional[float] = Field(default=None, gt=0.0, description="Intensidade λ em [0, 255]")
    frames: Optional[tuple[int, ...]] = Field(
        default=None, description="Quadros afetados (None = todos)"
    )
    scale: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_parameters(self) -> "NoiseSpec":
        required = {
            NoiseKind.GAUSSIAN: ("sigma", self.sigma),
            NoiseKind.POISSON: ("rate", self.rate),
            NoiseKind.FRAME_REPLACE: ("frames", self.frames),
            NoiseKind.DOWNSCALE: ("scale", self.scale),
        }
        name, value = required[self.kind]
        if value is None:
            raise ValueError(f"'{name}' é obrigatório para degradação '{self.kind.value}'")
        if self.frames is not None and any(index < 0 for index in self.frames):
            raise ValueError("índices de quadro devem ser >= 0")
        return self


# === Sequências ===


class VideoSequence(BaseModel):
    """
    Sequência de quadros normalizados.

    `frames` tem forma [T, C, H, W] em float32, valores em [0, 1].
    """

    frames: np.ndarray
    filenames: list[str] = Field(default_factory=list)
    bit_depth: int = Field(default=8)
    source: Optional[str] = Field(default=None, description="Diretório de origem")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("frames")
    @classmethod
    def validate_frames(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim != 4:
            raise ValueError(f"frames deve ter forma [T, C, H, W], recebido {v.shape}")
        if v.shape[0] < 1:
            raise ValueError("a sequência deve ter ao menos um quadro")
        if not np.all(np.isfinite(v)):
            raise ValueError("frames contém valores não finitos")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("frames deve estar em [0, 1]")
        return v.astype(np.float32, copy=False)

    @property
    def length(self) -> int:
        return int(self.frames.shape[0])

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        _, channels, height, width = self.frames.shape
        return int(channels), int(height), int(width)

    def with_frames(self, frames: np.ndarray) -> "VideoSequence":
        """Nova sequência com os mesmos metadados de origem."""
        return VideoSequence(frames=frames, bit_depth=self.bit_depth, source=self.source)


class MaskSequence(BaseModel):
    """Máscaras binárias [T, 1, H, W]: 1 = observado, 0 = buraco."""

    masks: np.ndarray
    stationary: bool = Field(default=False)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("masks")
    @classmethod
    def validate_masks(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim != 4 or v.shape[1] != 1:
            raise ValueError(f"masks deve ter forma [T, 1, H, W], recebido {v.shape}")
        if not np.all((v == 0) | (v == 1)):
            raise ValueError("máscaras devem ser binárias {0, 1}")
        return v.astype(np.float32, copy=False)

    @property
    def length(self) -> int:
        return int(self.masks.shape[0])


# === Resultados ===


class LossCurves(BaseModel):
    """Curvas por época da perda total e de cada termo."""

    total: list[float] = Field(default_factory=list)
    rec: list[float] = Field(default_factory=list)
    spl: list[float] = Field(default_factory=list)
    var: list[float] = Field(default_factory=list)
    mse_to_input: list[float] = Field(default_factory=list)
    mse_to_clean: list[float] = Field(default_factory=list)

    def append(self, total: float, rec: float, spl: float, var: float, mse: float) -> None:
        self.total.append(total)
        self.rec.append(rec)
        self.spl.append(spl)
        self.var.append(var)
        self.mse_to_input.append(mse)

    def rows(self) -> list[dict[str, Any]]:
        """Linhas (epoch, total, rec, spl, var) para CSV."""
        return [
            {"epoch": i + 1, "total": t, "rec": r, "spl": s, "var": v}
            for i, (t, r, s, v) in enumerate(zip(self.total, self.rec, self.spl, self.var))
        ]


class FitResult(BaseModel):
    """
    Resultado de um ajuste: parâmetros treinados, curvas e quadros restaurados.
    """

    parameters: dict[str, np.ndarray] = Field(default_factory=dict)
    curves: LossCurves = Field(default_factory=LossCurves)
    frames: np.ndarray
    latents: np.ndarray
    epoch_seconds: list[float] = Field(default_factory=list)
    epochs_run: int = Field(..., ge=0)
    early_stop_epoch: Optional[int] = Field(default=None)
    plateau_epoch: Optional[int] = Field(default=None)
    plateau_snapshot: Optional[np.ndarray] = Field(default=None)
    warnings: list[str] = Field(default_factory=list, description="Avisos do ajuste")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def loss_curve(self) -> list[float]:
        return self.curves.total

    @property
    def final_loss(self) -> float:
        return self.curves.total[-1] if self.curves.total else float("nan")
