from src.diffcore.gradcheck import grad_check
from src.diffcore.ops import (
    ChannelMoments,
    LSTMCellParams,
    absolute,
    batch_norm_seq,
    channel_moments,
    concat,
    conv2d,
    leaky_relu,
    linear,
    lstm_cell,
    normalize_with_moments,
    resample2d,
    sigmoid,
    square,
    stack,
    tanh,
    upsample_nearest,
)
from src.diffcore.optim import AdamState, ParamLeaf, adam_step, zero_grads
from src.diffcore.tensor import Tensor, as_tensor

__all__ = [
    "AdamState",
    "ChannelMoments",
    "LSTMCellParams",
    "ParamLeaf",
    "Tensor",
    "absolute",
    "adam_step",
    "as_tensor",
    "batch_norm_seq",
    "channel_moments",
    "concat",
    "conv2d",
    "grad_check",
    "leaky_relu",
    "linear",
    "lstm_cell",
    "normalize_with_moments",
    "resample2d",
    "sigmoid",
    "square",
    "stack",
    "tanh",
    "upsample_nearest",
    "zero_grads",
]
