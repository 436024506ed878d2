"""Joint training: Adam over mini-batches of L_s + α·L_o, with model selection."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Sequence

import numpy as np

from .corpus import Instance
from .crf import extract_spans
from .metrics import accuracy, macro_f1, span_f1
from .model import SAGCN, ConfigError
from .nn import ParamStore, Tape

log = logging.getLogger(__name__)


class OptimizerError(ArithmeticError):
    pass


def seeded_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator per purpose (0: initialization, 1: training) from one seed."""
    return np.random.default_rng([seed, stream])


@dataclass
class TrainConfig:
    learning_rate: float = 1e-5
    batch_size: int = 4
    epochs: int = 10
    l2: float = 1e-6
    alpha: float = 0.1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("learning_rate, batch_size and epochs must be positive")
        if self.l2 < 0 or self.alpha < 0:
            raise ConfigError("l2 and alpha must be >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1) or self.adam_eps <= 0:
            raise ConfigError("invalid Adam hyperparameters")
        if self.alpha and not 0.05 <= self.alpha <= 0.15:
            log.warning("alpha=%g lies outside the usual [0.05, 0.15] range", self.alpha)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown train config keys {sorted(unknown)}")
        return cls(**d)


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: ParamStore, state: AdamState, config: TrainConfig) -> None:
    """One bias-corrected Adam update from the accumulated ``grad`` of each parameter."""
    for name, p in params.items():
        if not np.isfinite(p.grad).all():
            raise OptimizerError(f"non-finite gradient in parameter {name!r}")
    state.step += 1
    t = state.step
    b1, b2 = config.beta1, config.beta2
    lr_t = config.learning_rate * math.sqrt(1 - b2**t) / (1 - b1**t)
    for name, p in params.items():
        g = p.grad
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        # eps scaled by the bias correction so the update equals m̂ / (√v̂ + eps)
        p.data -= lr_t * m / (np.sqrt(v) + config.adam_eps * math.sqrt(1 - b2**t))


@dataclass
class EpochReport:
    epoch: int
    train_loss: float
    accuracy: float | None
    macro_f1: float | None
    span_f1: float | None
    wall_time: float = 0.0

    def to_json_dict(self, include_time: bool = False) -> dict:
        d = asdict(self)
        if not include_time:
            d.pop("wall_time")
        return d


@dataclass
class TrainResult:
    best_state: dict[str, np.ndarray]
    best_epoch: int
    reports: list[EpochReport]

    @property
    def best_report(self) -> EpochReport:
        return self.reports[self.best_epoch - 1]


def evaluate(model: SAGCN, instances: Sequence[Instance]) -> dict:
    """Sentiment accuracy and macro-F1 plus exact-match opinion span F1."""
    if not instances:
        raise ValueError("cannot evaluate on an empty set")
    preds, golds, pred_spans, gold_spans = [], [], [], []
    for inst in instances:
        label, tags, _ = model.predict(inst)
        preds.append(label)
        golds.append(inst.sentiment)
        pred_spans.append(extract_spans(tags))
        gold_spans.append(extract_spans(inst.opinion_tags))
    return {
        "accuracy": accuracy(preds, golds),
        "macro_f1": macro_f1(preds, golds, model.config.C),
        "span_f1": span_f1(pred_spans, gold_spans),
        "n_instances": len(instances),
    }


def train_step(model: SAGCN, batch: Sequence[Instance], config: TrainConfig, state: AdamState,
               rng: np.random.Generator) -> float:
    """Forward/backward over ``batch`` (mean-reduced loss), then one Adam update."""
    model.params.zero_grads()
    total = 0.0
    weight = np.ones((1, 1)) / len(batch)
    for inst in batch:
        parts = model.loss(inst, config.alpha, config.l2, training=True, rng=rng)
        Tape(parts.total).backward(weight)
        total += parts.total.item()
    adam_step(model.params, state, config)
    return total / len(batch)


def train(
    instances: Sequence[Instance],
    model: SAGCN,
    config: TrainConfig,
    eval_instances: Sequence[Instance] = (),
    on_epoch: Callable[[EpochReport], None] | None = None,
) -> TrainResult:
    """Train ``model`` in place; return the best parameters by eval accuracy.

    Ties keep the earlier epoch. Without an eval set the last epoch wins.
    The model is left holding the final-epoch parameters.
    """
    if not instances:
        raise ValueError("empty training set")
    rng = seeded_rng(config.seed, 1)
    state = AdamState()
    reports: list[EpochReport] = []
    best_state, best_epoch, best_acc = None, 0, -1.0
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(len(instances))
        losses = []
        for lo in range(0, len(order), config.batch_size):
            batch = [instances[i] for i in order[lo : lo + config.batch_size]]
            losses.append(train_step(model, batch, config, state, rng) * len(batch))
        mean_loss = float(sum(losses) / len(instances))
        if eval_instances:
            m = evaluate(model, eval_instances)
            report = EpochReport(epoch, mean_loss, m["accuracy"], m["macro_f1"], m["span_f1"])
        else:
            report = EpochReport(epoch, mean_loss, None, None, None)
        report.wall_time = time.perf_counter() - started
        reports.append(report)
        score = report.accuracy if report.accuracy is not None else math.inf
        if not eval_instances or score > best_acc:
            best_acc, best_epoch, best_state = score, epoch, model.params.state()
        if on_epoch is not None:
            on_epoch(report)
    return TrainResult(best_state, best_epoch, reports)
