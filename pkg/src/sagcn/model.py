"""Selective-attention GCN for aspect sentiment with a CRF opinion tagger.

Pipeline per instance: static word embeddings plus an aspect-indicator
embedding, projected to ``d_B`` → GCN layers over the dependency tree →
``N`` blocks of (multi-head attention scores → top-k sparsification →
residual per-head GCN) → mean-pooled aspect vector → two-layer MLP. The
final node states also feed the CRF emission layer.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from . import crf, nn
from .corpus import EmbeddingTable, Instance, Vocabulary
from .graph import adjacency_from_parse, row_normalize
from .nn import ParamStore, Tensor, glorot_uniform
from .nn import checkpoint as ckpt

TOPK_MODES = ("head_independent", "head_dependent", "off")


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    d_B: int = 32
    d_h: int = 32
    L: int = 2
    k: int = 3
    N: int = 1
    n_dep_layers: int = 1
    C: int = 3
    d_out: int = 32
    dropout: float = 0.1
    topk_mode: str = "head_independent"
    normalize: bool = True
    literal_mask_softmax: bool = False
    d_ind: int = 32
    crf_end: bool = True
    # plain dependency-GCN comparison model: no SA-GCN blocks (N must be 0)
    baseline: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("d_B", "d_h", "L", "k", "d_out", "d_ind"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.d_h % self.L:
            raise ConfigError(f"d_h={self.d_h} is not divisible by L={self.L}")
        if self.C < 2:
            raise ConfigError("C must be >= 2")
        if self.n_dep_layers < 0:
            raise ConfigError("n_dep_layers must be >= 0")
        if self.baseline:
            if self.N != 0:
                raise ConfigError("baseline GCN model takes N=0")
            if self.n_dep_layers < 1:
                raise ConfigError("baseline GCN model needs n_dep_layers >= 1")
        elif self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.topk_mode not in TOPK_MODES:
            raise ConfigError(f"topk_mode must be one of {TOPK_MODES}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.n_dep_layers == 0 and self.d_B != self.d_h:
            raise ConfigError("without dependency-GCN layers d_B must equal d_h")

    @property
    def d_head(self) -> int:
        return self.d_h // self.L

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ModelConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys {sorted(unknown)}")
        return cls(**d)


@dataclass
class AttentionTensors:
    scores: list[np.ndarray]
    a_sum: np.ndarray | None
    masks: list[np.ndarray]
    a_h: list[np.ndarray]


@dataclass
class SentimentPrediction:
    probs: Tensor
    term_vector: Tensor

    @property
    def label(self) -> int:
        return int(np.argmax(self.probs.data[0]))


@dataclass
class ForwardResult:
    prediction: SentimentPrediction
    h_out: Tensor
    attention: list[AttentionTensors]
    word_embeddings: Tensor
    encoded: Tensor


@dataclass
class LossParts:
    total: Tensor
    sentiment: Tensor
    opinion: Tensor | None
    result: ForwardResult = field(repr=False)


# ---------------------------------------------------------------------------
# building blocks


def gcn_layer(h: Tensor, adj: np.ndarray, w: Tensor, normalize: bool = True) -> Tensor:
    """ReLU(Â h W) with Â the (optionally row-normalized) adjacency."""
    if adj.shape != (h.shape[0], h.shape[0]):
        raise nn.ShapeError(f"adjacency {adj.shape} does not match {h.shape[0]} nodes")
    a = row_normalize(adj) if normalize else adj
    return nn.relu(nn.matmul(nn.constant(a), nn.matmul(h, w)))


def attention_scores(h: Tensor, w_k: Tensor, w_q: Tensor, heads: int) -> list[Tensor]:
    """Per-head scaled scores (H_i W_k)(H_i W_q)ᵀ / √d_head over column slices of ``h``."""
    d_h = h.shape[1]
    if d_h % heads:
        raise ConfigError(f"width {d_h} is not divisible by {heads} heads")
    d_head = d_h // heads
    out = []
    for i in range(heads):
        h_i = nn.columns(h, i * d_head, (i + 1) * d_head)
        keys = nn.matmul(h_i, w_k)
        queries = nn.matmul(h_i, w_q)
        out.append(nn.scale(nn.matmul(keys, nn.transpose(queries)), 1.0 / math.sqrt(d_head)))
    return out


def topk_mask(values: np.ndarray, k: int, candidates: np.ndarray | None = None) -> np.ndarray:
    """Per row, mark the ``k`` largest candidate entries; ties favor lower columns.

    ``candidates`` defaults to every off-diagonal entry. Rows with fewer than
    ``k`` candidates select all of them.
    """
    n = values.shape[0]
    if candidates is None:
        candidates = ~np.eye(n, values.shape[1], dtype=bool)
    keyed = np.where(candidates, -values, np.inf)
    order = np.argsort(keyed, axis=1, kind="stable")
    take = np.minimum(k, candidates.sum(axis=1))
    mask = np.zeros(values.shape, dtype=bool)
    for r in range(n):
        mask[r, order[r, : take[r]]] = True
    return mask


def _as_tensors(scores) -> list[Tensor]:
    return [s if isinstance(s, Tensor) else nn.constant(s) for s in scores]


def _sparse_softmax(score: Tensor, mask: np.ndarray, literal: bool) -> Tensor:
    if literal:
        return nn.row_softmax(nn.mask_mul(score, mask))
    return nn.row_softmax(score, mask, empty_rows="zero")


def topk_head_independent(scores, k: int, literal: bool = False):
    """One mask shared by all heads, chosen on the summed head scores."""
    scores = _as_tensors(scores)
    a_sum = np.sum([s.data for s in scores], axis=0)
    mask = topk_mask(a_sum, k)
    return mask, [_sparse_softmax(s, mask, literal) for s in scores], a_sum


def topk_head_dependent(scores, k: int, literal: bool = False):
    """Each head keeps its own top-k columns per row."""
    scores = _as_tensors(scores)
    masks = [topk_mask(s.data, k) for s in scores]
    return masks, [_sparse_softmax(s, m, literal) for s, m in zip(scores, masks)]


def full_attention(scores, literal: bool = False):
    """No top-k: softmax over every off-diagonal entry."""
    scores = _as_tensors(scores)
    n = scores[0].shape[0]
    mask = ~np.eye(n, dtype=bool)
    return mask, [_sparse_softmax(s, mask, literal) for s in scores]


def sagcn_block(h: Tensor, a_h: Sequence[Tensor], weights: Sequence[Tensor]) -> Tensor:
    """Concatenate per-head ReLU(A_i h W_i) + h W_i."""
    if len(a_h) != len(weights):
        raise nn.ShapeError("one attention matrix per head weight required")
    outs = []
    for a, w in zip(a_h, weights):
        hw = nn.matmul(h, w)
        outs.append(nn.add(nn.relu(nn.matmul(a, hw)), hw))
    return nn.concat_last(outs)


def classify(h_out: Tensor, term_span: tuple[int, int], w_1: Tensor, w_2: Tensor) -> SentimentPrediction:
    start, end = term_span
    if end <= start:
        raise ValueError(f"empty term span {term_span}")
    term = nn.mean_rows(nn.rows(h_out, start, end))
    logits = nn.matmul(nn.relu(nn.matmul(term, w_1)), w_2)
    return SentimentPrediction(nn.row_softmax(logits), term)


def l2_penalty(weights: Sequence[Tensor]) -> Tensor:
    return nn.add_n([nn.sum_squares(w) for w in weights])


def sentiment_loss(probs: Tensor, gold: int, lam: float = 0.0, theta: Sequence[Tensor] = ()) -> Tensor:
    """Cross entropy with a 1e-12 log floor, plus ``lam`` times the squared L2 norm of ``theta``."""
    ce = nn.neg_log(nn.pick(probs, 0, gold))
    if lam == 0.0 or not theta:
        return ce
    return nn.weighted_sum([ce, l2_penalty(theta)], [1.0, lam])


def joint_loss(l_s: Tensor, l_o: Tensor | None, alpha: float) -> Tensor:
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if l_o is None or alpha == 0.0:
        return l_s
    return nn.weighted_sum([l_s, l_o], [1.0, alpha])


# ---------------------------------------------------------------------------
# model


class SAGCN:
    def __init__(self, config: ModelConfig, vocab: Vocabulary, params: ParamStore):
        self.config = config
        self.vocab = vocab
        self.params = params

    @classmethod
    def initialize(
        cls,
        config: ModelConfig,
        vocab: Vocabulary,
        embeddings: EmbeddingTable,
        rng: np.random.Generator,
    ) -> SAGCN:
        c = config
        if embeddings.matrix.shape != (len(vocab), c.d_B):
            raise ConfigError(
                f"embedding table {embeddings.matrix.shape} != ({len(vocab)}, d_B={c.d_B})"
            )
        p = ParamStore()
        p.add("embed.word", embeddings.matrix.copy())
        p.add("embed.indicator", glorot_uniform(rng, 2, c.d_ind))
        p.add("encoder.W_proj", glorot_uniform(rng, c.d_B + c.d_ind, c.d_B))
        p.add("encoder.b_proj", np.zeros((1, c.d_B)))
        d_in = c.d_B
        for layer in range(c.n_dep_layers):
            p.add(f"dep_gcn.{layer}.W", glorot_uniform(rng, d_in, c.d_h))
            d_in = c.d_h
        for b in range(c.N):
            p.add(f"block.{b}.W_k", glorot_uniform(rng, c.d_head, c.d_head))
            p.add(f"block.{b}.W_q", glorot_uniform(rng, c.d_head, c.d_head))
            for i in range(c.L):
                p.add(f"block.{b}.W.{i}", glorot_uniform(rng, c.d_h, c.d_head))
        p.add("classifier.W_1", glorot_uniform(rng, c.d_h, c.d_out))
        p.add("classifier.W_2", glorot_uniform(rng, c.d_out, c.C))
        p.add("crf.W_o", glorot_uniform(rng, c.d_h, crf.NUM_TAGS))
        p.add("crf.b_o", np.zeros((1, crf.NUM_TAGS)))
        p.add("crf.T", np.zeros((crf.NUM_TAGS + 2, crf.NUM_TAGS + 2)))
        return cls(config, vocab, p)

    def regularized(self) -> list[Tensor]:
        """Weight matrices under L2: everything except embeddings, biases and transitions."""
        return [
            t for name, t in self.params.items()
            if not name.startswith("embed.") and any(part.startswith("W") for part in name.split("."))
        ]

    def encode(self, instance: Instance) -> tuple[Tensor, Tensor]:
        ids = self.vocab.ids(instance.words)
        start, end = instance.term_span
        indicator = np.zeros(instance.n, dtype=np.int64)
        indicator[start:end] = 1
        words = nn.gather_rows(self.params["embed.word"], ids)
        marks = nn.gather_rows(self.params["embed.indicator"], indicator)
        x = nn.add(
            nn.matmul(nn.concat_last([words, marks]), self.params["encoder.W_proj"]),
            self.params["encoder.b_proj"],
        )
        return x, words

    def forward(
        self,
        instance: Instance,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> ForwardResult:
        c, p = self.config, self.params
        x, words = self.encode(instance)
        h = nn.dropout(x, c.dropout, training, rng)
        adj = adjacency_from_parse(instance.tokens)
        for layer in range(c.n_dep_layers):
            h = gcn_layer(h, adj, p[f"dep_gcn.{layer}.W"], c.normalize)
        attention = []
        for b in range(c.N):
            scores = attention_scores(h, p[f"block.{b}.W_k"], p[f"block.{b}.W_q"], c.L)
            a_sum = None
            if c.topk_mode == "head_independent":
                mask, a_h, a_sum = topk_head_independent(scores, c.k, c.literal_mask_softmax)
                masks = [mask] * c.L
            elif c.topk_mode == "head_dependent":
                masks, a_h = topk_head_dependent(scores, c.k, c.literal_mask_softmax)
            else:
                mask, a_h = full_attention(scores, c.literal_mask_softmax)
                masks = [mask] * c.L
            h = sagcn_block(h, a_h, [p[f"block.{b}.W.{i}"] for i in range(c.L)])
            h = nn.dropout(h, c.dropout, training, rng)
            attention.append(
                AttentionTensors([s.data for s in scores], a_sum, masks, [a.data for a in a_h])
            )
        pred = classify(h, instance.term_span, p["classifier.W_1"], p["classifier.W_2"])
        return ForwardResult(pred, h, attention, words, x)

    def emissions(self, h_out: Tensor) -> Tensor:
        return crf.emissions(h_out, self.params["crf.W_o"], self.params["crf.b_o"])

    def loss(
        self,
        instance: Instance,
        alpha: float = 0.1,
        lam: float = 0.0,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> LossParts:
        result = self.forward(instance, training, rng)
        l_s = sentiment_loss(result.prediction.probs, instance.sentiment, lam, self.regularized())
        l_o = None
        if alpha > 0:
            P = self.emissions(result.h_out)
            l_o = crf.nll_tensor(P, self.params["crf.T"], instance.opinion_tags, self.config.crf_end)
        return LossParts(joint_loss(l_s, l_o, alpha), l_s, l_o, result)

    def predict(self, instance: Instance) -> tuple[int, list[int], ForwardResult]:
        result = self.forward(instance)
        P = self.emissions(result.h_out).data
        tags, _ = crf.viterbi(P, self.params["crf.T"].data, self.config.crf_end)
        return result.prediction.label, tags, result

    # persistence

    def save(self, path, extra: dict | None = None) -> None:
        ckpt.save(path, self.params.state(), self.metadata(extra))

    def metadata(self, extra: dict | None = None) -> dict:
        meta = {"model_config": self.config.to_dict(), "vocab": self.vocab.id_to_token}
        if extra:
            meta.update(extra)
        return meta

    @classmethod
    def load(cls, path) -> tuple[SAGCN, dict]:
        records, meta = ckpt.load(path)
        try:
            config = ModelConfig.from_dict(meta["model_config"])
            vocab = Vocabulary.from_tokens(meta["vocab"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ckpt.CheckpointError(f"checkpoint metadata unusable: {exc}") from exc
        params = ParamStore()
        for name, value in records.items():
            params.add(name, value)
        return cls(config, vocab, params), meta
