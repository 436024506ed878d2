"""Dense float64 tensors with reverse-mode differentiation.

Every op builds a new :class:`Tensor` that remembers its parents and a
closure mapping the output gradient to one gradient per parent. Calling
:func:`backward` on a scalar output walks the recorded graph once in reverse
topological order.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class NonFiniteError(ArithmeticError):
    """An op produced NaN or Inf."""


class ShapeError(ValueError):
    pass


class DegenerateRowError(ValueError):
    """A masked softmax row had no unmasked entry."""


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn", "op", "name")

    def __init__(
        self,
        data,
        parents: tuple[Tensor, ...] = (),
        backward_fn: BackwardFn | None = None,
        op: str = "leaf",
        name: str | None = None,
    ):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite value produced by {op}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = self.name or self.op
        return f"Tensor({label}, shape={self.shape})"

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __add__(self, other: Tensor) -> Tensor:
        return add(self, other)

    def __mul__(self, other: Tensor) -> Tensor:
        return mul(self, other)

    @property
    def T(self) -> Tensor:
        return transpose(self)


def constant(data) -> Tensor:
    return Tensor(data, op="const")


class Tape:
    """Reverse topological order of the graph that produced ``output``."""

    def __init__(self, output: Tensor):
        self.output = output
        self.nodes = _topological_order(output)

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(
        self,
        seed: np.ndarray | None = None,
        wrt: Iterable[Tensor] = (),
        on_visit: Callable[[Tensor], None] | None = None,
    ) -> list[np.ndarray]:
        """Propagate ``seed`` (default 1 for a scalar output) to every node.

        Leaves with a ``grad`` accumulator (parameters) receive their
        gradient additively. Gradients of the tensors in ``wrt`` are returned
        in order, zeros if unreachable.
        """
        out = self.output
        if seed is None:
            if out.data.size != 1:
                raise ShapeError("backward without seed requires a scalar output")
            seed = np.ones_like(out.data)
        grads: dict[int, np.ndarray] = {id(out): np.asarray(seed, dtype=np.float64)}
        for node in reversed(self.nodes):
            g = grads.get(id(node))
            if on_visit is not None:
                on_visit(node)
            if g is None:
                continue
            if node.backward_fn is None:
                if node.grad is not None:
                    node.grad += g
                continue
            for parent, pg in zip(node.parents, node.backward_fn(g)):
                if pg is None:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
        return [grads.get(id(t), np.zeros_like(t.data)) for t in wrt]


def _topological_order(output: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(output, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(output: Tensor, seed: np.ndarray | None = None, wrt: Iterable[Tensor] = ()):
    return Tape(output).backward(seed, wrt)


# ---------------------------------------------------------------------------
# ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes {a.shape} and {b.shape} do not agree")
    ad, bd = a.data, b.data

    def back(g):
        return g @ bd.T, ad.T @ g

    return Tensor(ad @ bd, (a, b), back, "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may be a 1×q row broadcast over rows of ``a``."""
    if a.shape == b.shape:
        return Tensor(a.data + b.data, (a, b), lambda g: (g, g), "add")
    if b.shape == (1, a.shape[1]):
        return Tensor(
            a.data + b.data, (a, b), lambda g: (g, g.sum(axis=0, keepdims=True)), "add_row"
        )
    raise ShapeError(f"add shapes {a.shape} and {b.shape} do not agree")


def add_n(xs: Sequence[Tensor]) -> Tensor:
    if not xs:
        raise ShapeError("add_n of nothing")
    shape = xs[0].shape
    if any(x.shape != shape for x in xs):
        raise ShapeError("add_n shapes differ")
    total = np.sum([x.data for x in xs], axis=0)
    return Tensor(total, tuple(xs), lambda g: [g] * len(xs), "add_n")


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"mul shapes {a.shape} and {b.shape} do not agree")
    ad, bd = a.data, b.data
    return Tensor(ad * bd, (a, b), lambda g: (g * bd, g * ad), "mul")


def scale(x: Tensor, c: float) -> Tensor:
    return Tensor(x.data * c, (x,), lambda g: (g * c,), "scale")


def mask_mul(x: Tensor, mask: np.ndarray) -> Tensor:
    """Multiply by a constant 0/1 array (no gradient to the mask)."""
    m = np.asarray(mask, dtype=np.float64)
    return Tensor(x.data * m, (x,), lambda g: (g * m,), "mask_mul")


def transpose(x: Tensor) -> Tensor:
    return Tensor(x.data.T, (x,), lambda g: (g.T,), "transpose")


def relu(x: Tensor) -> Tensor:
    on = x.data > 0
    return Tensor(np.where(on, x.data, 0.0), (x,), lambda g: (g * on,), "relu")


def row_softmax(x: Tensor, mask: np.ndarray | None = None, empty_rows: str = "error") -> Tensor:
    """Softmax along each row, restricted to ``mask`` when given.

    Masked entries receive an additive -inf before normalization and come out
    exactly 0. A row without any unmasked entry raises
    :class:`DegenerateRowError`, or yields an all-zero row when
    ``empty_rows="zero"``.
    """
    if x.data.ndim != 2:
        raise ShapeError("row_softmax expects a matrix")
    if mask is None:
        z = x.data - x.data.max(axis=1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=1, keepdims=True)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise ShapeError(f"mask shape {mask.shape} != {x.shape}")
        live = mask.any(axis=1)
        if not live.all() and empty_rows != "zero":
            raise DegenerateRowError(f"fully masked row(s) {np.flatnonzero(~live).tolist()}")
        z = np.where(mask, x.data, -np.inf)
        rowmax = np.where(live, z.max(axis=1, initial=-np.inf), 0.0)[:, None]
        e = np.where(mask, np.exp(z - rowmax), 0.0)
        denom = e.sum(axis=1, keepdims=True)
        y = e / np.where(denom > 0, denom, 1.0)

    def back(g):
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return Tensor(y, (x,), back, "row_softmax")


def mean_rows(x: Tensor) -> Tensor:
    m = x.shape[0]
    if m == 0:
        raise ShapeError("mean_rows of an empty matrix")
    return Tensor(
        x.data.mean(axis=0, keepdims=True),
        (x,),
        lambda g: (np.repeat(g / m, m, axis=0),),
        "mean_rows",
    )


def concat_last(xs: Sequence[Tensor]) -> Tensor:
    if not xs:
        raise ShapeError("concat of nothing")
    rows = xs[0].shape[0]
    if any(x.shape[0] != rows for x in xs):
        raise ShapeError("concat_last row counts differ")
    bounds = np.cumsum([0] + [x.shape[1] for x in xs])

    def back(g):
        return [g[:, bounds[i] : bounds[i + 1]] for i in range(len(xs))]

    return Tensor(np.concatenate([x.data for x in xs], axis=1), tuple(xs), back, "concat")


def columns(x: Tensor, start: int, stop: int) -> Tensor:
    shape = x.shape

    def back(g):
        full = np.zeros(shape)
        full[:, start:stop] = g
        return (full,)

    return Tensor(x.data[:, start:stop], (x,), back, "columns")


def rows(x: Tensor, start: int, stop: int) -> Tensor:
    shape = x.shape

    def back(g):
        full = np.zeros(shape)
        full[start:stop] = g
        return (full,)

    return Tensor(x.data[start:stop], (x,), back, "rows")


def gather_rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Embedding lookup: row ``ids[i]`` of ``table`` for each i."""
    ids = np.asarray(ids, dtype=np.int64)
    shape = table.shape

    def back(g):
        full = np.zeros(shape)
        np.add.at(full, ids, g)
        return (full,)

    return Tensor(table.data[ids], (table,), back, "gather_rows")


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; identity when not training or when rate is 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return Tensor(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


def pick(x: Tensor, i: int, j: int) -> Tensor:
    """Scalar element ``x[i, j]``."""
    shape = x.shape

    def back(g):
        full = np.zeros(shape)
        full[i, j] = g.reshape(-1)[0]
        return (full,)

    return Tensor(x.data[i, j], (x,), back, "pick")


def neg_log(p: Tensor, floor: float = 1e-12) -> Tensor:
    """-log(max(p, floor)) for a scalar ``p``; zero gradient below the floor."""
    v = p.item()
    clamped = max(v, floor)

    def back(g):
        return (g * (-1.0 / v) if v > floor else np.zeros_like(g),)

    return Tensor(-np.log(clamped), (p,), back, "neg_log")


def sum_squares(x: Tensor) -> Tensor:
    xd = x.data
    return Tensor(np.sum(xd * xd), (x,), lambda g: (2.0 * xd * g.reshape(-1)[0],), "sum_squares")


def weighted_sum(xs: Sequence[Tensor], weights: Sequence[float]) -> Tensor:
    """Σ w_i x_i over scalar tensors."""
    if len(xs) != len(weights):
        raise ShapeError("weights and tensors differ in length")
    total = sum(w * x.item() for x, w in zip(xs, weights))
    ws = list(weights)
    return Tensor(total, tuple(xs), lambda g: [g * w for w in ws], "weighted_sum")
