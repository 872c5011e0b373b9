"""
Operações diferenciáveis usadas pelo LFPNet, FDNet e pelas perdas.

Todas as funções são puras: recebem Tensors, devolvem um Tensor novo ligado ao
grafo e definem o gradiente exato de cada operando.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from src.core.exceptions import DimensionMismatchException, ValidationException
from src.diffcore.tensor import Tensor, as_tensor

LEAKY_SLOPE = 0.2
BN_EPS = 1e-5


# === Elementwise ===


def absolute(x: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * np.sign(x.data),)

    return Tensor.from_op(np.abs(x.data), (x,), backward, "abs")


def square(x: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (2.0 * g * x.data,)

    return Tensor.from_op(x.data * x.data, (x,), backward, "square")


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * (1.0 - out * out),)

    return Tensor.from_op(out, (x,), backward, "tanh")


def sigmoid(x: Tensor) -> Tensor:
    out = expit(x.data)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * out * (1.0 - out),)

    return Tensor.from_op(out, (x,), backward, "sigmoid")


def leaky_relu(x: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    positive = x.data > 0
    out = np.where(positive, x.data, x.data * slope).astype(x.dtype)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.where(positive, g, g * slope).astype(g.dtype),)

    return Tensor.from_op(out, (x,), backward, "leaky_relu")


# === Estruturais ===


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatena tensores ao longo de um eixo existente."""
    parts = [as_tensor(t) for t in tensors]
    sizes = [p.shape[axis] for p in parts]
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as e:
        raise DimensionMismatchException(
            "concat", f"axis {axis}", [p.shape for p in parts][0], [p.shape for p in parts]
        ) from e
    bounds = np.cumsum([0] + sizes)

    def backward(g: np.ndarray) -> list[np.ndarray]:
        slicer: list = [slice(None)] * g.ndim
        grads = []
        for start, stop in zip(bounds[:-1], bounds[1:]):
            slicer[axis] = slice(int(start), int(stop))
            grads.append(g[tuple(slicer)])
        return grads

    return Tensor.from_op(data, parts, backward, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Empilha tensores de mesma forma em um novo eixo."""
    parts = [as_tensor(t) for t in tensors]
    first = parts[0].shape
    for position, part in enumerate(parts):
        if part.shape != first:
            raise DimensionMismatchException(
                "stack", "shape", first, part.shape, details={"position": position}
            )
    data = np.stack([p.data for p in parts], axis=axis)

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return [np.take(g, i, axis=axis) for i in range(len(parts))]

    return Tensor.from_op(data, parts, backward, "stack")


# === Camadas ===


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Mapa afim y = x Wᵀ + b.

    Args:
        x: Vetor [D_in] ou lote [N, D_in]
        weight: Matriz [D_out, D_in]
        bias: Vetor [D_out] (opcional)

    Returns:
        Tensor: [D_out] ou [N, D_out]
    """
    if weight.ndim != 2:
        raise DimensionMismatchException("linear", "weight.ndim", 2, weight.ndim)
    if x.shape[-1] != weight.shape[1]:
        raise DimensionMismatchException("linear", "in_features", weight.shape[1], x.shape[-1])
    if bias is not None and bias.shape != (weight.shape[0],):
        raise DimensionMismatchException("linear", "out_features", (weight.shape[0],), bias.shape)

    out = x.data @ weight.data.T
    if bias is not None:
        out = out + bias.data

    def backward(g: np.ndarray) -> tuple:
        grad_x = g @ weight.data
        if x.ndim == 1:
            grad_w = np.outer(g, x.data)
            grad_b = g
        else:
            grad_w = g.T @ x.data
            grad_b = g.sum(axis=0)
        return (grad_x, grad_w, grad_b) if bias is not None else (grad_x, grad_w)

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor.from_op(out, parents, backward, "linear")


def _conv_windows(data: np.ndarray, k: int, stride: int, padding: int) -> np.ndarray:
    padded = np.pad(data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(padded, (k, k), axis=(2, 3))
    return windows[:, :, ::stride, ::stride]


def conv2d(
    x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, padding: int = 0
) -> Tensor:
    """
    Correlação cruzada 2D.

    Args:
        x: Entrada [C_in, H, W] ou lote [N, C_in, H, W]
        weight: Kernel [C_out, C_in, k, k] com k ímpar
        bias: Vetor [C_out] (opcional)
        stride: Passo espacial (>= 1)
        padding: Preenchimento com zeros (>= 0)

    Returns:
        Tensor: [C_out, H', W'] ou [N, C_out, H', W'] com H' = ⌊(H + 2p − k)/s⌋ + 1

    Raises:
        DimensionMismatchException: Eixo incompatível (nomeado nos detalhes)
    """
    if x.ndim not in (3, 4):
        raise DimensionMismatchException("conv2d", "input.ndim", "3 or 4", x.ndim)
    if weight.ndim != 4:
        raise DimensionMismatchException("conv2d", "weight.ndim", 4, weight.ndim)
    c_out, c_in, k, k_w = weight.shape
    if k != k_w or k % 2 == 0:
        raise DimensionMismatchException("conv2d", "kernel", "odd square", (k, k_w))
    if stride < 1 or padding < 0:
        raise ValidationException("stride deve ser >= 1 e padding >= 0", field="conv2d")
    batched = x.ndim == 4
    data = x.data if batched else x.data[None]
    if data.shape[1] != c_in:
        raise DimensionMismatchException("conv2d", "channel", c_in, data.shape[1])
    if bias is not None and bias.shape != (c_out,):
        raise DimensionMismatchException("conv2d", "bias", (c_out,), bias.shape)
    height, width = data.shape[2], data.shape[3]
    out_h = (height + 2 * padding - k) // stride + 1
    out_w = (width + 2 * padding - k) // stride + 1
    if out_h < 1:
        raise DimensionMismatchException("conv2d", "height", f">= {k - 2 * padding}", height)
    if out_w < 1:
        raise DimensionMismatchException("conv2d", "width", f">= {k - 2 * padding}", width)

    windows = _conv_windows(data, k, stride, padding)
    # windows: N, C_in, H', W', k, k
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out)

    def backward(g: np.ndarray) -> tuple:
        g4 = g if batched else g[None]
        grad_w = np.tensordot(g4, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_padded = np.zeros(
            (data.shape[0], c_in, height + 2 * padding, width + 2 * padding), dtype=g4.dtype
        )
        for i in range(k):
            for j in range(k):
                contribution = np.tensordot(g4, weight.data[:, :, i, j], axes=([1], [0]))
                grad_padded[
                    :,
                    :,
                    i : i + stride * out_h : stride,
                    j : j + stride * out_w : stride,
                ] += contribution.transpose(0, 3, 1, 2)
        grad_x = grad_padded[:, :, padding : padding + height, padding : padding + width]
        if not batched:
            grad_x = grad_x[0]
        if bias is None:
            return (grad_x, grad_w)
        return (grad_x, grad_w, g4.sum(axis=(0, 2, 3)))

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor.from_op(out if batched else out[0], parents, backward, "conv2d")


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """Replica cada pixel factor² vezes nos dois últimos eixos."""
    if factor < 1:
        raise ValidationException("factor deve ser >= 1", field="upsample_nearest")
    if factor == 1:
        return x
    out = np.repeat(np.repeat(x.data, factor, axis=-2), factor, axis=-1)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        lead = g.shape[:-2]
        height, width = x.shape[-2], x.shape[-1]
        blocks = g.reshape(*lead, height, factor, width, factor)
        return (blocks.sum(axis=(-3, -1)),)

    return Tensor.from_op(out, (x,), backward, "upsample_nearest")


def resample2d(x: Tensor, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """
    Reamostragem linear separável fixa: y = R · x · Cᵀ nos dois últimos eixos.

    Usada pelos downsamplers (média por área e bicúbico); as matrizes não são treináveis.
    """
    if rows.shape[1] != x.shape[-2]:
        raise DimensionMismatchException("resample2d", "height", rows.shape[1], x.shape[-2])
    if cols.shape[1] != x.shape[-1]:
        raise DimensionMismatchException("resample2d", "width", cols.shape[1], x.shape[-1])
    r = rows.astype(x.dtype, copy=False)
    c = cols.astype(x.dtype, copy=False)
    out = np.matmul(np.matmul(r, x.data), c.T)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.matmul(np.matmul(r.T, g), c),)

    return Tensor.from_op(out, (x,), backward, "resample2d")


# === Normalização ===


@dataclass(frozen=True)
class ChannelMoments:
    """Média e variância por canal capturadas de um forward em modo treino."""

    mean: np.ndarray
    var: np.ndarray


def _norm_axes(instance: bool) -> tuple[int, ...]:
    return (2, 3) if instance else (0, 2, 3)


def channel_moments(x: np.ndarray) -> ChannelMoments:
    """Estatísticas por canal sobre o lote de quadros [T, C, H, W]."""
    mean = np.mean(x, axis=(0, 2, 3), dtype=np.float64)
    var = np.var(x, axis=(0, 2, 3), dtype=np.float64)
    return ChannelMoments(mean=mean, var=var)


def batch_norm_seq(
    x: Union[Tensor, Sequence[Tensor]],
    gamma: Tensor,
    beta: Tensor,
    eps: float = BN_EPS,
    instance: bool = False,
) -> Tensor:
    """
    Normalização por canal sobre o lote de quadros de uma época.

    Args:
        x: Tensor [T, C, H, W] ou sequência de T tensores [C, H, W]
        gamma: Escala por canal [C]
        beta: Deslocamento por canal [C]
        eps: Regularizador do denominador
        instance: Usa estatísticas por quadro (instance norm) em vez do lote

    Returns:
        Tensor: Mesma forma de x

    Com T = 1 usa estatísticas por instância; quem chama registra o aviso.
    """
    if not isinstance(x, Tensor):
        x = stack(list(x), axis=0)
    if x.ndim != 4:
        raise DimensionMismatchException("batch_norm_seq", "ndim", 4, x.ndim)
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise DimensionMismatchException("batch_norm_seq", "channel", channels, gamma.shape)

    # um único quadro: as estatísticas do lote viram as da instância
    if x.shape[0] == 1:
        instance = True
    axes = _norm_axes(instance)
    mean = np.mean(x.data, axis=axes, keepdims=True, dtype=np.float64)
    var = np.var(x.data, axis=axes, keepdims=True, dtype=np.float64)
    inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
    x_hat = ((x.data - mean.astype(x.dtype)) * inv_std).astype(x.dtype)
    g_shape = (1, channels, 1, 1)
    out = x_hat * gamma.data.reshape(g_shape) + beta.data.reshape(g_shape)
    count = int(np.prod([x.shape[a] for a in axes]))

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        grad_gamma = np.sum(g * x_hat, axis=(0, 2, 3))
        grad_beta = np.sum(g, axis=(0, 2, 3))
        grad_xhat = g * gamma.data.reshape(g_shape)
        sum_grad = np.sum(grad_xhat, axis=axes, keepdims=True)
        sum_proj = np.sum(grad_xhat * x_hat, axis=axes, keepdims=True)
        grad_x = inv_std / count * (count * grad_xhat - sum_grad - x_hat * sum_proj)
        return grad_x, grad_gamma, grad_beta

    return Tensor.from_op(out, (x, gamma, beta), backward, "batch_norm_seq")


def normalize_with_moments(
    x: Tensor, moments: ChannelMoments, gamma: Tensor, beta: Tensor, eps: float = BN_EPS
) -> Tensor:
    """Normaliza com estatísticas congeladas (modo inferência); decodificação por amostra."""
    channels = x.shape[1]
    g_shape = (1, channels, 1, 1)
    mean = moments.mean.reshape(g_shape)
    inv_std = (1.0 / np.sqrt(moments.var.reshape(g_shape) + eps)).astype(x.dtype)
    x_hat = ((x.data - mean.astype(x.dtype)) * inv_std).astype(x.dtype)
    out = x_hat * gamma.data.reshape(g_shape) + beta.data.reshape(g_shape)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        grad_x = g * gamma.data.reshape(g_shape) * inv_std
        return grad_x, np.sum(g * x_hat, axis=(0, 2, 3)), np.sum(g, axis=(0, 2, 3))

    return Tensor.from_op(out, (x, gamma, beta), backward, "normalize_with_moments")


# === Recorrência ===


@dataclass
class LSTMCellParams:
    """Pesos de uma célula LSTM com portas na ordem (input, forget, cell, output)."""

    weight_ih: Tensor  # [4H, D_in]
    weight_hh: Tensor  # [4H, H]
    bias: Tensor  # [4H]

    @property
    def hidden_size(self) -> int:
        return self.weight_hh.shape[1]

    @property
    def input_size(self) -> int:
        return self.weight_ih.shape[1]


def lstm_cell(x: Tensor, h: Tensor, c: Tensor, params: LSTMCellParams) -> tuple[Tensor, Tensor]:
    """
    Atualização canônica de LSTM.

    i, f, o = σ(·); g = tanh(·); c' = f⊙c + i⊙g; h' = o⊙tanh(c')

    Args:
        x: Entrada [D_in]
        h: Estado oculto [H]
        c: Estado de célula [H]
        params: Pesos da célula

    Returns:
        tuple[Tensor, Tensor]: (h', c')
    """
    hidden = params.hidden_size
    if params.weight_ih.shape != (4 * hidden, x.shape[-1]):
        raise DimensionMismatchException(
            "lstm_cell", "input", (4 * hidden, x.shape[-1]), params.weight_ih.shape
        )
    if params.weight_hh.shape != (4 * hidden, hidden):
        raise DimensionMismatchException(
            "lstm_cell", "hidden", (4 * hidden, hidden), params.weight_hh.shape
        )
    if h.shape[-1] != hidden:
        raise DimensionMismatchException("lstm_cell", "h", hidden, h.shape[-1])
    if c.shape[-1] != hidden:
        raise DimensionMismatchException("lstm_cell", "c", hidden, c.shape[-1])

    gates = linear(x, params.weight_ih, params.bias) + linear(h, params.weight_hh)
    input_gate = sigmoid(gates[..., 0:hidden])
    forget_gate = sigmoid(gates[..., hidden : 2 * hidden])
    candidate = tanh(gates[..., 2 * hidden : 3 * hidden])
    output_gate = sigmoid(gates[..., 3 * hidden : 4 * hidden])

    c_next = forget_gate * c + input_gate * candidate
    h_next = output_gate * tanh(c_next)
    return h_next, c_next
