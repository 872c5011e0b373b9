"""
Inicialização de folhas de parâmetro.

Pesos seguem U(−1/√fan_in, 1/√fan_in); todas as amostras vêm do mesmo
`numpy.random.Generator`, portanto a ordem de criação faz parte da semente.
"""
import numpy as np

from src.diffcore.optim import ParamLeaf


def uniform_leaf(
    rng: np.random.Generator, name: str, shape: tuple[int, ...], fan_in: int
) -> ParamLeaf:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return ParamLeaf(rng.uniform(-bound, bound, size=shape).astype(np.float32), name=name)


def constant_leaf(name: str, shape: tuple[int, ...], value: float = 0.0) -> ParamLeaf:
    return ParamLeaf(np.full(shape, value, dtype=np.float32), name=name)
