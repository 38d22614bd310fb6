"""Numpy-backed tensors, reverse-mode autodiff, and the Adam optimizer."""

from .optim import Adam
from .tensor import (
    DEFAULT_DTYPE,
    Tensor,
    add,
    add_n,
    backward,
    concat,
    constant,
    div,
    dropout,
    exp,
    log,
    logsumexp,
    lstm_cell,
    matmul,
    mean,
    mul,
    narrow,
    neg,
    no_grad,
    parameter,
    row,
    rows,
    scale,
    set_strict_finite,
    sigmoid,
    softmax,
    stack,
    sub,
    take,
    tanh,
    total,
    zeros,
)

__all__ = [
    "Adam",
    "DEFAULT_DTYPE",
    "Tensor",
    "add",
    "add_n",
    "backward",
    "concat",
    "constant",
    "div",
    "dropout",
    "exp",
    "log",
    "logsumexp",
    "lstm_cell",
    "matmul",
    "mean",
    "mul",
    "narrow",
    "neg",
    "no_grad",
    "parameter",
    "row",
    "rows",
    "scale",
    "set_strict_finite",
    "sigmoid",
    "softmax",
    "stack",
    "sub",
    "take",
    "tanh",
    "total",
    "zeros",
]
