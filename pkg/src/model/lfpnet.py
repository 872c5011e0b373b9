"""
LFPNet: preditor recorrente de quadros latentes, z_{t+1} = g(z_t).

Entrada linear (D → hidden, sem ativação), pilha de células LSTM e saída
linear (hidden → D) seguida de tanh.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.core.exceptions import NonFiniteValueException, ValidationException
from src.diffcore.ops import LSTMCellParams, linear, lstm_cell, tanh
from src.diffcore.optim import ParamLeaf
from src.diffcore.tensor import Tensor
from src.domain.models import ModelConfig
from src.model.initializers import uniform_leaf

FORGET_GATE_BIAS = 1.0


@dataclass
class LatentState:
    """Latente atual e os pares (h, c) de cada camada LSTM."""

    z: Tensor
    lstm_state: list[tuple[Tensor, Tensor]] = field(default_factory=list)
    timestep: int = 0

    def detached(self) -> "LatentState":
        """Corta o histórico (BPTT truncado) mantendo os valores."""
        return LatentState(
            z=self.z.detach(),
            lstm_state=[(h.detach(), c.detach()) for h, c in self.lstm_state],
            timestep=self.timestep,
        )


def sample_initial_latent(seed: int, dim: int) -> np.ndarray:
    """
    Amostra z_0 ~ N(0, I) de forma reprodutível.

    Args:
        seed: Semente do gerador
        dim: Dimensão D (>= 1)

    Returns:
        np.ndarray: Vetor float32 de tamanho D
    """
    if dim < 1:
        raise ValidationException("dim deve ser >= 1", field="latent_dim")
    return np.random.default_rng(seed).standard_normal(dim).astype(np.float32)


class LFPNet:
    """Rede preditora de latentes."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        latent, hidden = config.latent_dim, config.hidden_size
        self.config = config
        self.input_weight = uniform_leaf(rng, "lfpnet.input.weight", (hidden, latent), latent)
        self.input_bias = uniform_leaf(rng, "lfpnet.input.bias", (hidden,), latent)

        self.cells: list[LSTMCellParams] = []
        for layer in range(config.lstm_layers):
            prefix = f"lfpnet.lstm{layer}"
            bias = uniform_leaf(rng, f"{prefix}.bias", (4 * hidden,), hidden)
            bias.data[hidden : 2 * hidden] = FORGET_GATE_BIAS
            self.cells.append(
                LSTMCellParams(
                    weight_ih=uniform_leaf(rng, f"{prefix}.weight_ih", (4 * hidden, hidden), hidden),
                    weight_hh=uniform_leaf(rng, f"{prefix}.weight_hh", (4 * hidden, hidden), hidden),
                    bias=bias,
                )
            )

        self.output_weight = uniform_leaf(rng, "lfpnet.output.weight", (latent, hidden), hidden)
        self.output_bias = uniform_leaf(rng, "lfpnet.output.bias", (latent,), hidden)

    def parameters(self) -> list[ParamLeaf]:
        leaves: list[ParamLeaf] = [self.input_weight, self.input_bias]
        for cell in self.cells:
            leaves.extend([cell.weight_ih, cell.weight_hh, cell.bias])  # type: ignore[list-item]
        leaves.extend([self.output_weight, self.output_bias])
        return leaves

    def initial_state(self, z0: Tensor) -> LatentState:
        """Estado com (h, c) zerados; o rollout sempre parte daqui."""
        dtype = self.input_weight.dtype
        zeros = np.zeros(self.config.hidden_size, dtype=dtype)
        return LatentState(
            z=z0, lstm_state=[(Tensor(zeros), Tensor(zeros)) for _ in self.cells], timestep=0
        )

    def step(self, state: LatentState) -> LatentState:
        """
        Avança um passo: z_{t+1} = tanh(W_out · h_last + b_out).

        Raises:
            NonFiniteValueException: Se o latente ou os estados ficarem não finitos
        """
        x = linear(state.z, self.input_weight, self.input_bias)
        next_state: list[tuple[Tensor, Tensor]] = []
        for cell, (h, c) in zip(self.cells, state.lstm_state):
            h, c = lstm_cell(x, h, c, cell)
            next_state.append((h, c))
            x = h
        z_next = tanh(linear(x, self.output_weight, self.output_bias))

        timestep = state.timestep + 1
        if not (np.all(np.isfinite(z_next.data)) and np.all(np.isfinite(x.data))):
            raise NonFiniteValueException("estado do LFPNet", details={"timestep": timestep})
        return LatentState(z=z_next, lstm_state=next_state, timestep=timestep)

    def unroll(self, z0: Tensor, steps: int, bptt_window: Optional[int] = None) -> list[Tensor]:
        """
        Gera [z_1, ..., z_steps] a partir de z_0 com estados zerados.

        Com `bptt_window`, o histórico é cortado a cada `bptt_window` passos.
        """
        state = self.initial_state(z0)
        latents: list[Tensor] = []
        for t in range(steps):
            if bptt_window and t > 0 and t % bptt_window == 0:
                state = state.detached()
            state = self.step(state)
            latents.append(state.z)
        return latents
