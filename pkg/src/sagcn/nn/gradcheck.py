"""Central finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .params import ParamStore
from .tensor import NonFiniteError, Tape, Tensor


@dataclass
class CoordinateCheck:
    param: str
    index: tuple[int, ...]
    analytic: float
    numeric: float

    @property
    def error(self) -> float:
        return abs(self.analytic - self.numeric) / max(1.0, abs(self.numeric))


@dataclass
class GradCheckReport:
    tol: float
    checks: list[CoordinateCheck] = field(default_factory=list)

    @property
    def worst(self) -> CoordinateCheck | None:
        return max(self.checks, key=lambda c: c.error, default=None)

    @property
    def max_error(self) -> float:
        w = self.worst
        return 0.0 if w is None else w.error

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tol

    @property
    def per_param_count(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for c in self.checks:
            counts[c.param] = counts.get(c.param, 0) + 1
        return counts

    def summary(self) -> str:
        w = self.worst
        if w is None:
            return "no coordinates checked"
        status = "ok" if self.passed else "FAIL"
        return (
            f"{status}: {len(self.checks)} coords, worst {w.param}{list(w.index)} "
            f"analytic={w.analytic:.10g} numeric={w.numeric:.10g} err={w.error:.3g}"
        )


class GradCheckNaNError(NonFiniteError):
    pass


def grad_check(
    f: Callable[[], Tensor],
    params: ParamStore,
    eps: float = 1e-5,
    tol: float = 1e-4,
    max_coords: int = 200,
    names: list[str] | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare analytic gradients of the scalar ``f()`` with central differences.

    Parameters with more than ``max_coords`` entries are checked on a seeded
    random subset of ``max_coords`` coordinates; smaller ones in full.
    ``f`` must be deterministic (dropout off).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    names = names if names is not None else params.names()

    def evaluate() -> Tensor:
        try:
            return f()
        except NonFiniteError as exc:
            raise GradCheckNaNError(str(exc)) from exc

    params.zero_grads()
    out = evaluate()
    _check_finite(out.item(), "analytic forward")
    Tape(out).backward()
    report = GradCheckReport(tol=tol)
    for name in names:
        p = params[name]
        flat = p.data.reshape(-1)
        if flat.size <= max_coords:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        analytic = p.grad.reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            up = evaluate().item()
            flat[c] = orig - eps
            down = evaluate().item()
            flat[c] = orig
            numeric = (up - down) / (2 * eps)
            _check_finite(numeric, f"numeric estimate for {name}")
            _check_finite(float(analytic[c]), f"analytic gradient for {name}")
            report.checks.append(
                CoordinateCheck(name, np.unravel_index(c, p.data.shape), float(analytic[c]), numeric)
            )
    params.zero_grads()
    return report


def _check_finite(v: float, what: str) -> None:
    if not math.isfinite(v):
        raise GradCheckNaNError(f"NaN/Inf in {what}")
