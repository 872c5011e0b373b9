"""
Folhas de parâmetro e otimizador Adam com correção de viés.
"""
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from src.core.exceptions import NonFiniteValueException, ValidationException
from src.diffcore.tensor import DEFAULT_DTYPE, ArrayLike, Tensor


class ParamLeaf(Tensor):
    """
    Parâmetro treinável: tensor folha com identificador estável.
    O identificador indexa o estado do otimizador e os checkpoints.
    """

    __slots__ = ()

    def __init__(self, data: ArrayLike, name: str, dtype: Optional[np.dtype] = None) -> None:
        super().__init__(np.array(data, dtype=dtype or DEFAULT_DTYPE), requires_grad=True, name=name)

    @property
    def gradient(self) -> np.ndarray:
        """Gradiente acumulado (zeros se nada foi propagado)."""
        return self.grad if self.grad is not None else np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)


@dataclass
class AdamState:
    """Momentos por folha, contador de passos e hiperparâmetros do Adam."""

    learning_rate: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_rate:
            raise ValidationException("learning_rate deve ser > 0", field="learning_rate")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValidationException("betas devem estar em [0, 1)", field="betas")


def zero_grads(leaves: Iterable[ParamLeaf]) -> None:
    for leaf in leaves:
        leaf.zero_grad()


def adam_step(leaves: Sequence[ParamLeaf], state: AdamState) -> AdamState:
    """
    Aplica um passo do Adam in-place nas folhas.

    Args:
        leaves: Parâmetros com gradientes já propagados
        state: Estado do otimizador (atualizado e devolvido)

    Returns:
        AdamState: O mesmo estado, com step incrementado

    Raises:
        NonFiniteValueException: Se algum gradiente contiver NaN/Inf (nomeia a folha)
    """
    for leaf in leaves:
        if not np.all(np.isfinite(leaf.gradient)):
            raise NonFiniteValueException(
                f"gradiente de '{leaf.name}'", details={"leaf": leaf.name, "step": state.step + 1}
            )

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step

    for leaf in leaves:
        grad = leaf.gradient
        m = state.first_moment.get(leaf.name)
        v = state.second_moment.get(leaf.name)
        if m is None or v is None:
            m = np.zeros_like(leaf.data)
            v = np.zeros_like(leaf.data)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[leaf.name] = m
        state.second_moment[leaf.name] = v

        m_hat = m / correction1
        v_hat = v / correction2
        update = state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
        leaf.data -= update.astype(leaf.dtype)

    return state
