"""Minimal differentiable-operation substrate."""

from .gradcheck import GradCheckNaNError, GradCheckReport, grad_check
from .params import ParamStore, glorot_uniform
from .tensor import (
    DegenerateRowError,
    NonFiniteError,
    ShapeError,
    Tape,
    Tensor,
    add,
    add_n,
    backward,
    columns,
    concat_last,
    constant,
    dropout,
    gather_rows,
    mask_mul,
    matmul,
    mean_rows,
    mul,
    neg_log,
    pick,
    relu,
    row_softmax,
    rows,
    scale,
    sum_squares,
    transpose,
    weighted_sum,
)

__all__ = [
    "DegenerateRowError",
    "GradCheckNaNError",
    "GradCheckReport",
    "NonFiniteError",
    "ParamStore",
    "ShapeError",
    "Tape",
    "Tensor",
    "add",
    "add_n",
    "backward",
    "columns",
    "concat_last",
    "constant",
    "dropout",
    "gather_rows",
    "glorot_uniform",
    "grad_check",
    "mask_mul",
    "matmul",
    "mean_rows",
    "mul",
    "neg_log",
    "pick",
    "relu",
    "row_softmax",
    "rows",
    "scale",
    "sum_squares",
    "transpose",
    "weighted_sum",
]
