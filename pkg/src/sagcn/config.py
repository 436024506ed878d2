"""key=value run configuration files.

One flat file carries both model and training keys, e.g.::

    d_B = 32
    topk_mode = head_independent
    learning_rate = 0.003
    epochs = 20

Lines starting with ``#`` or ``;`` are comments. An optional ``[section]``
header is accepted and ignored.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path
from typing import Any

from .model import ConfigError, ModelConfig
from .train import TrainConfig

_SECTION = "sagcn"
_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False, "on": True, "off": False}


def _coerce(raw: str, default: Any, key: str):
    raw = raw.strip().strip('"').strip("'")
    try:
        if isinstance(default, bool):
            return _BOOL[raw.lower()]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"bad value {raw!r} for {key}") from None
    return raw


def parse_config(text: str) -> tuple[dict, dict]:
    """Split ``text`` into (model keys, train keys) with typed values."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (d_B, L, N, C)
    body = text if text.lstrip().startswith("[") else f"[{_SECTION}]\n{text}"
    try:
        parser.read_string(body)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    model_defaults = {f.name: f.default for f in dataclasses.fields(ModelConfig)}
    train_defaults = {f.name: f.default for f in dataclasses.fields(TrainConfig)}
    aliases = {"lambda": "l2", "lr": "learning_rate"}
    model, train = {}, {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = aliases.get(key, key)
            if key in model_defaults:
                model[key] = _coerce(raw, model_defaults[key], key)
            elif key in train_defaults:
                train[key] = _coerce(raw, train_defaults[key], key)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    return model, train


def load_config(path) -> tuple[dict, dict]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def dump_config(model: ModelConfig, train: TrainConfig) -> str:
    lines = ["# model"]
    lines += [f"{k} = {_fmt(v)}" for k, v in model.to_dict().items()]
    lines += ["", "# training"]
    lines += [f"{k} = {_fmt(v)}" for k, v in train.to_dict().items()]
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)
