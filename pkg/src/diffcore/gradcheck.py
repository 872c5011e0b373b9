"""
Oráculo de gradiente por diferenças finitas centrais.
"""
from typing import Callable, Sequence

import numpy as np

from src.diffcore.tensor import Tensor

# Abaixo deste módulo a comparação passa a ser absoluta.
_RELATIVE_FLOOR = 1e-6


def grad_check(
    fn: Callable[[], Tensor],
    leaves: Sequence[Tensor],
    probe_count: int = 8,
    step: float = 1e-5,
    seed: int = 0,
    promote: bool = True,
) -> float:
    """
    Compara o gradiente reverso com diferenças finitas centrais.

    As folhas são promovidas para float64 durante a verificação (promote=True);
    com promote=False use step=1e-3 para manter a escala segura em 32 bits.

    Args:
        fn: Função sem argumentos que reconstrói o grafo e devolve um escalar
        leaves: Folhas a verificar
        probe_count: Coordenadas sorteadas por folha
        step: Passo das diferenças finitas
        seed: Semente do sorteio de coordenadas
        promote: Promove as folhas para float64 durante a verificação

    Returns:
        float: Maior erro relativo observado
    """
    originals = [leaf.data for leaf in leaves]
    rng = np.random.default_rng(seed)
    worst = 0.0
    try:
        for leaf in leaves:
            dtype = np.float64 if promote else leaf.data.dtype
            leaf.data = np.array(leaf.data, dtype=dtype, copy=True)
            leaf.grad = None

        fn().backward()
        analytic = [
            (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)).reshape(-1).copy()
            for leaf in leaves
        ]

        for leaf, grad in zip(leaves, analytic):
            flat = leaf.data.reshape(-1)
            count = min(probe_count, flat.size)
            for index in rng.choice(flat.size, size=count, replace=False):
                original = flat[index]
                flat[index] = original + step
                plus = float(fn().data)
                flat[index] = original - step
                minus = float(fn().data)
                flat[index] = original
                numeric = (plus - minus) / (2.0 * step)
                denominator = max(abs(grad[index]), abs(numeric), _RELATIVE_FLOOR)
                worst = max(worst, abs(grad[index] - numeric) / denominator)
    finally:
        for leaf, original in zip(leaves, originals):
            leaf.data = original
            leaf.grad = None
    return worst
