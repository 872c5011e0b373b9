"""
FDNet: decodificador convolucional f(·): R^D → (0, 1)^{C×H×W}.

Projeção linear para uma grade C0×H0×W0, L blocos
{upsample ×2 → conv 3×3 → normalização → LeakyReLU(0.2)} com atalho a partir
da entrada do bloco, conv 3×3 final para C canais e sigmoid.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.exceptions import DimensionMismatchException
from src.diffcore.ops import (
    ChannelMoments,
    batch_norm_seq,
    channel_moments,
    concat,
    conv2d,
    leaky_relu,
    linear,
    normalize_with_moments,
    sigmoid,
    upsample_nearest,
)
from src.diffcore.optim import ParamLeaf
from src.diffcore.tensor import Tensor
from src.domain.models import ModelConfig, NormMode, SkipMode
from src.model.initializers import constant_leaf, uniform_leaf

KERNEL_SIZE = 3


@dataclass
class DecoderBlock:
    """Pesos de um bloco de upsample."""

    weight: ParamLeaf
    bias: ParamLeaf
    gamma: ParamLeaf
    beta: ParamLeaf

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]


def block_widths(config: ModelConfig) -> list[tuple[int, int]]:
    """
    Canais (entrada, saída) da convolução de cada bloco.

    concat: a saída do bloco é [y, up], então a entrada seguinte soma as duas larguras.
    add: largura constante igual a base_channels.
    """
    widths: list[tuple[int, int]] = []
    current = config.base_channels
    for index in range(config.decoder_blocks):
        if config.skip_mode is SkipMode.ADD:
            widths.append((current, current))
            continue
        out = max(config.base_channels // 2 ** (index + 1), config.min_channels)
        widths.append((current, out))
        current = current + out
    return widths


class FDNet:
    """Decodificador de quadros."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        self.config = config
        # normalização em lote caiu para estatísticas por instância (lote de 1 quadro)
        self.norm_fallback = False
        grid = config.base_channels * config.grid_height * config.grid_width
        self.project_weight = uniform_leaf(
            rng, "fdnet.project.weight", (grid, config.latent_dim), config.latent_dim
        )
        self.project_bias = uniform_leaf(rng, "fdnet.project.bias", (grid,), config.latent_dim)

        self.blocks: list[DecoderBlock] = []
        for index, (c_in, c_out) in enumerate(block_widths(config)):
            prefix = f"fdnet.block{index}"
            fan_in = c_in * KERNEL_SIZE * KERNEL_SIZE
            self.blocks.append(
                DecoderBlock(
                    weight=uniform_leaf(
                        rng, f"{prefix}.conv.weight", (c_out, c_in, KERNEL_SIZE, KERNEL_SIZE), fan_in
                    ),
                    bias=uniform_leaf(rng, f"{prefix}.conv.bias", (c_out,), fan_in),
                    gamma=constant_leaf(f"{prefix}.norm.gamma", (c_out,), 1.0),
                    beta=constant_leaf(f"{prefix}.norm.beta", (c_out,), 0.0),
                )
            )

        final_in = self.feature_channels
        fan_in = final_in * KERNEL_SIZE * KERNEL_SIZE
        self.output_weight = uniform_leaf(
            rng,
            "fdnet.output.weight",
            (config.channels, final_in, KERNEL_SIZE, KERNEL_SIZE),
            fan_in,
        )
        self.output_bias = uniform_leaf(rng, "fdnet.output.bias", (config.channels,), fan_in)

    @property
    def feature_channels(self) -> int:
        """Canais que chegam à convolução final."""
        if not self.blocks or self.config.skip_mode is SkipMode.ADD:
            return self.config.base_channels
        last = self.blocks[-1]
        return last.in_channels + last.out_channels

    def parameters(self) -> list[ParamLeaf]:
        leaves = [self.project_weight, self.project_bias]
        for block in self.blocks:
            leaves.extend([block.weight, block.bias, block.gamma, block.beta])
        leaves.extend([self.output_weight, self.output_bias])
        return leaves

    def _normalize(
        self, x: Tensor, block: DecoderBlock, moments: Optional[ChannelMoments]
    ) -> Tensor:
        if self.config.norm_mode is NormMode.INSTANCE:
            return batch_norm_seq(x, block.gamma, block.beta, instance=True)
        if moments is None:
            if x.shape[0] == 1:
                self.norm_fallback = True
            return batch_norm_seq(x, block.gamma, block.beta)
        return normalize_with_moments(x, moments, block.gamma, block.beta)

    def decode(
        self, latents: Tensor, moments: Optional[list[ChannelMoments]] = None
    ) -> tuple[Tensor, list[ChannelMoments]]:
        """
        Decodifica um lote de latentes.

        Sem `moments` (modo treino) a normalização usa as estatísticas do lote e as
        devolve; com `moments` (modo inferência) cada latente é decodificado de forma
        independente do resto do lote.

        Args:
            latents: [T, D] ou [D]
            moments: Estatísticas congeladas por bloco (opcional)

        Returns:
            tuple[Tensor, list[ChannelMoments]]: Quadros [T, C, H, W] (ou [C, H, W]) e
            estatísticas por bloco

        Raises:
            DimensionMismatchException: Se D não bater com a configuração
        """
        config = self.config
        single = latents.ndim == 1
        batch = latents.reshape(1, -1) if single else latents
        if batch.shape[-1] != config.latent_dim:
            raise DimensionMismatchException(
                "fdnet.decode", "latent", config.latent_dim, batch.shape[-1]
            )
        if moments is not None and len(moments) != len(self.blocks):
            raise DimensionMismatchException(
                "fdnet.decode", "moments", len(self.blocks), len(moments)
            )

        count = batch.shape[0]
        h = leaky_relu(linear(batch, self.project_weight, self.project_bias))
        h = h.reshape(count, config.base_channels, config.grid_height, config.grid_width)

        recorded: list[ChannelMoments] = []
        for index, block in enumerate(self.blocks):
            up = upsample_nearest(h, 2)
            y = conv2d(up, block.weight, block.bias, padding=KERNEL_SIZE // 2)
            recorded.append(channel_moments(y.data))
            y = leaky_relu(self._normalize(y, block, moments[index] if moments else None))
            h = y + up if config.skip_mode is SkipMode.ADD else concat([y, up], axis=1)

        frames = sigmoid(conv2d(h, self.output_weight, self.output_bias, padding=KERNEL_SIZE // 2))
        if single:
            frames = frames.reshape(config.channels, config.height, config.width)
        return frames, (moments if moments is not None else recorded)
