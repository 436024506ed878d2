"""Named parameter storage with paired gradient accumulators."""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

from .tensor import Tensor


class ParamStore:
    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), name=name)
        t.grad = np.zeros_like(t.data)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self) -> list[str]:
        return list(self._params)

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.grad[...] = 0.0

    def state(self) -> dict[str, np.ndarray]:
        """Copies of every parameter value, in insertion order."""
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, value in state.items():
            p = self._params[name]
            value = np.asarray(value, dtype=np.float64)
            if value.shape != p.data.shape:
                raise ValueError(f"{name}: shape {value.shape} != {p.data.shape}")
            p.data[...] = value

    def num_values(self) -> int:
        return sum(p.data.size for p in self._params.values())


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape or (fan_in, fan_out))
