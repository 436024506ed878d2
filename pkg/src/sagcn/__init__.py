"""SA-GCN: selective attention over dependency GCNs for aspect sentiment, with a CRF opinion tagger.

Everything runs on a small numpy autodiff engine (:mod:`sagcn.nn`), so every
gradient can be checked against finite differences.
"""

from .corpus import Instance, Sentence, Token, Vocabulary, build_vocab, load_dataset, read_conllu
from .model import SAGCN, ModelConfig
from .train import TrainConfig

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "ModelConfig",
    "SAGCN",
    "Sentence",
    "Token",
    "TrainConfig",
    "Vocabulary",
    "build_vocab",
    "load_dataset",
    "read_conllu",
]
