"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 checkpoint error.
Machine-readable output (JSON / TSV) goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import corpus
from .config import dump_config, load_config
from .corpus import SENTIMENTS, Instance
from .crf import extract_spans
from .graph import term_to_token_distances
from .model import SAGCN, ConfigError, ModelConfig
from .nn.checkpoint import CheckpointError
from .train import TrainConfig, evaluate, seeded_rng, train

log = logging.getLogger("sagcn")

CHECKPOINT_NAME = "model.ckpt"
METRICS_NAME = "metrics.jsonl"
CONFIG_NAME = "config.resolved"


class UsageError(Exception):
    """Maps to exit code 2."""


# ---------------------------------------------------------------------------
# helpers


def _load_instances(data, labels) -> list[Instance]:
    for p in (data, labels):
        if p is None:
            raise UsageError("both --data and --labels are required")
        if not Path(p).exists():
            raise UsageError(f"dataset not found: {p}")
    try:
        return corpus.load_dataset(data, labels)
    except (corpus.ConllError, corpus.StructureError, corpus.DatasetError) as exc:
        raise UsageError(str(exc)) from None


def _load_checkpoint(path) -> SAGCN:
    if not Path(path).exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    model, _ = SAGCN.load(path)
    return model


def resolve_configs(args) -> tuple[ModelConfig, TrainConfig]:
    model_kw, train_kw = ({}, {})
    if args.config:
        if not Path(args.config).exists():
            raise UsageError(f"config not found: {args.config}")
        model_kw, train_kw = load_config(args.config)
    if getattr(args, "topk_mode", None):
        model_kw["topk_mode"] = args.topk_mode
    if getattr(args, "k", None) is not None:
        if model_kw.get("topk_mode") == "off":
            raise UsageError("--k conflicts with topk_mode=off")
        model_kw["k"] = args.k
    if getattr(args, "blocks", None) is not None:
        model_kw["N"] = args.blocks
    if getattr(args, "alpha", None) is not None:
        train_kw["alpha"] = args.alpha
    if getattr(args, "seed", None) is not None:
        train_kw["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        train_kw["epochs"] = args.epochs
    try:
        return ModelConfig(**model_kw), TrainConfig(**train_kw)
    except (ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def build_model(instances, mcfg: ModelConfig, seed: int, embeddings_path=None) -> SAGCN:
    vocab = corpus.build_vocab(instances)
    rng = seeded_rng(seed, 0)
    if embeddings_path:
        if not Path(embeddings_path).exists():
            raise UsageError(f"embeddings not found: {embeddings_path}")
        try:
            table = corpus.load_embeddings(embeddings_path, vocab, rng)
        except corpus.EmbeddingFormatError as exc:
            raise UsageError(str(exc)) from None
        if table.dim != mcfg.d_B:
            raise UsageError(f"embedding width {table.dim} != d_B={mcfg.d_B}")
    else:
        table = corpus.random_embeddings(vocab, mcfg.d_B, rng)
    return SAGCN.initialize(mcfg, vocab, table, rng)


def fit(train_set, eval_set, mcfg, tcfg, embeddings_path=None, on_epoch=None):
    """Train from scratch and return the model holding its best-epoch parameters.

    The vocabulary covers eval words too (labels are never looked at), so
    their pre-trained vectors are available at evaluation time.
    """
    model = build_model(list(train_set) + list(eval_set), mcfg, tcfg.seed, embeddings_path)
    result = train(train_set, model, tcfg, eval_set, on_epoch=on_epoch)
    model.params.load_state(result.best_state)
    return model, result


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True)


# ---------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    mcfg, tcfg = resolve_configs(args)
    train_set = _load_instances(args.data, args.labels)
    eval_set = _load_instances(args.eval_data, args.eval_labels) if args.eval_data else []
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def report(r):
        log.info("epoch %d loss %.4f acc %s span_f1 %s (%.1fs)", r.epoch, r.train_loss,
                 r.accuracy, r.span_f1, r.wall_time)

    model, result = fit(train_set, eval_set, mcfg, tcfg, args.embeddings, report)
    model.save(out / CHECKPOINT_NAME, {"best_epoch": result.best_epoch, "train_config": tcfg.to_dict()})
    with open(out / METRICS_NAME, "w", encoding="utf-8") as f:
        for r in result.reports:
            f.write(_json(r.to_json_dict(args.log_wall_time)) + "\n")
    (out / CONFIG_NAME).write_text(dump_config(mcfg, tcfg), encoding="utf-8")
    log.info("best epoch %d; wrote %s", result.best_epoch, out)
    return 0


def cmd_eval(args) -> int:
    model = _load_checkpoint(args.checkpoint)
    instances = _load_instances(args.data, args.labels)
    if not instances:
        raise UsageError("evaluation set is empty")
    print(_json(evaluate(model, instances)))
    return 0


@dataclass
class ExplainRecord:
    index: int
    sentence_id: str
    tokens: list[str]
    term_span: list[int]
    gold: str
    predicted: str
    top_words: list[dict]
    opinion_spans: list[list[int]]

    def to_tsv(self) -> str:
        top = ";".join(f"{w['index']}:{w['word']}:{w['weight']!r}:{w['hops']}" for w in self.top_words)
        spans = ";".join(f"{a}-{b}" for a, b in self.opinion_spans)
        return "\t".join([
            str(self.index), self.sentence_id, " ".join(self.tokens),
            str(self.term_span[0]), str(self.term_span[1]), self.gold, self.predicted, top, spans,
        ])


TSV_EXPLAIN_HEADER = "index\tsentence_id\ttokens\tterm_start\tterm_end\tgold\tpredicted\ttop_words\topinion_spans"


def aspect_attention(model: SAGCN, result, instance: Instance) -> list[tuple[int, float]]:
    """Ranked (token index, weight) context words for the aspect, from the last block."""
    if not result.attention:
        return []
    att = result.attention[-1]
    start, end = instance.term_span
    per_head = [a[start:end].mean(axis=0) for a in att.a_h]
    k = model.config.k
    if model.config.topk_mode == "head_dependent":
        best: dict[int, float] = {}
        for vec in per_head:
            for j in _ranked(vec)[:k]:
                best[j] = max(best.get(j, 0.0), float(vec[j]))
        ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked
    mean = np.mean(per_head, axis=0)
    return [(j, float(mean[j])) for j in _ranked(mean)[:k]]


def _ranked(vec: np.ndarray) -> list[int]:
    nz = [j for j in range(len(vec)) if vec[j] > 0]
    return sorted(nz, key=lambda j: (-vec[j], j))


def explain_instance(model: SAGCN, instance: Instance, index: int) -> ExplainRecord:
    label, tags, result = model.predict(instance)
    hops = term_to_token_distances(instance)
    words = instance.words
    top = [
        {"index": j, "word": words[j], "weight": w, "hops": hops[j]}
        for j, w in aspect_attention(model, result, instance)
    ]
    return ExplainRecord(
        index, instance.sentence_id, words, list(instance.term_span),
        SENTIMENTS[instance.sentiment], SENTIMENTS[label], top,
        [list(s) for s in extract_spans(tags)],
    )


def cmd_explain(args) -> int:
    model = _load_checkpoint(args.checkpoint)
    instances = _load_instances(args.data, args.labels)
    if not instances:
        raise UsageError("evaluation set is empty")
    if args.format == "tsv":
        print(TSV_EXPLAIN_HEADER)
    for i, inst in enumerate(instances):
        rec = explain_instance(model, inst, i)
        print(rec.to_tsv() if args.format == "tsv" else _json(rec.__dict__))
    return 0


def parse_buckets(spec: str) -> list[tuple[int, int | None]]:
    """``"1-10,11-20,21+"`` → [(1, 10), (11, 20), (21, None)]; must not overlap."""
    buckets = []
    for part in spec.split(","):
        part = part.strip()
        try:
            if part.endswith("+"):
                buckets.append((int(part[:-1]), None))
            else:
                lo, hi = part.split("-")
                buckets.append((int(lo), int(hi)))
        except ValueError:
            raise UsageError(f"bad bucket {part!r}") from None
    buckets.sort(key=lambda b: b[0])
    for (lo, hi), (nlo, _) in zip(buckets, buckets[1:]):
        if hi is None or nlo <= hi:
            raise UsageError("buckets overlap")
    for lo, hi in buckets:
        if lo < 1 or (hi is not None and hi < lo):
            raise UsageError(f"bad bucket range {lo}-{hi}")
    return buckets


def _bucket_of(n: int, buckets) -> int | None:
    for i, (lo, hi) in enumerate(buckets):
        if lo <= n and (hi is None or n <= hi):
            return i
    return None


def length_report(models: Sequence[SAGCN], instances: Sequence[Instance], buckets) -> list[dict]:
    rows = [{"bucket": _label(b), "count": 0, "correct": [0] * len(models)} for b in buckets]
    for inst in instances:
        b = _bucket_of(inst.n, buckets)
        if b is None:
            raise UsageError(f"sentence length {inst.n} falls outside every bucket")
        rows[b]["count"] += 1
        for m_i, model in enumerate(models):
            label, _, _ = model.predict(inst)
            rows[b]["correct"][m_i] += int(label == inst.sentiment)
    for row in rows:
        row["accuracy"] = [c / row["count"] if row["count"] else None for c in row["correct"]]
    return rows


def _label(b) -> str:
    lo, hi = b
    return f"{lo}+" if hi is None else f"{lo}-{hi}"


def cmd_analyze_length(args) -> int:
    models = [_load_checkpoint(args.checkpoint_a), _load_checkpoint(args.checkpoint_b)]
    instances = _load_instances(args.data, args.labels)
    if not instances:
        raise UsageError("evaluation set is empty")
    rows = length_report(models, instances, parse_buckets(args.buckets))
    print("bucket\tcount\taccuracy_a\taccuracy_b")
    for row in rows:
        accs = ["null" if a is None else repr(a) for a in row["accuracy"]]
        print(f"{row['bucket']}\t{row['count']}\t{accs[0]}\t{accs[1]}")
    return 0


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise UsageError("empty value list")
    return values


def sweep_grid(train_set, eval_set, mcfg, tcfg, k_values, block_values, embeddings=None, workers=1):
    """Accuracy for every (k, N, mode) cell, rows in grid order."""
    modes = ("head_independent", "head_dependent")
    cells = [(k, n, mode) for k in k_values for n in block_values for mode in modes]

    def run(cell):
        k, n, mode = cell
        cfg = replace(mcfg, k=k, N=n, topk_mode=mode)
        model, result = fit(train_set, eval_set, cfg, tcfg, embeddings)
        if eval_set:
            return result.best_report.accuracy
        return evaluate(model, train_set)["accuracy"]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            accs = list(pool.map(run, cells))
    else:
        accs = [run(c) for c in cells]
    return [(k, n, mode, acc) for (k, n, mode), acc in zip(cells, accs)]


def cmd_sweep(args) -> int:
    mcfg, tcfg = resolve_configs(args)
    k_values, block_values = _int_list(args.k_values), _int_list(args.block_values)
    train_set = _load_instances(args.data, args.labels)
    eval_set = _load_instances(args.eval_data, args.eval_labels) if args.eval_data else []
    if not eval_set:
        log.warning("no eval set given; reporting training accuracy")
    grid = sweep_grid(train_set, eval_set, mcfg, tcfg, k_values, block_values, args.embeddings, args.workers)
    print("k\tN\tmode\taccuracy")
    for k, n, mode, acc in grid:
        print(f"{k}\t{n}\t{mode}\t{acc!r}")
    return 0


def cmd_stats(args) -> int:
    train_set = _load_instances(args.data, args.labels)
    test_set = _load_instances(args.test_data, args.test_labels) if args.test_data else []
    stats = corpus.dataset_stats(train_set, test_set)
    out = {"train": stats.train, "test": stats.test}
    code = 0
    if args.expect:
        expected = corpus.TABLE1_COUNTS[args.expect]
        out["expected"] = expected
        out["matches"] = stats.matches(expected)
        code = 0 if out["matches"] else 1
    print(_json(out))
    return code


def cmd_synth(args) -> int:
    from .synthetic import write_bundled

    for path in write_bundled(args.out):
        log.info("wrote %s", path)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sagcn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p, eval_too=False):
        p.add_argument("--data", required=True, help="CoNLL-U parses")
        p.add_argument("--labels", required=True, help="JSON-lines label file")
        if eval_too:
            p.add_argument("--eval-data")
            p.add_argument("--eval-labels")

    def model_args(p):
        p.add_argument("--config")
        p.add_argument("--embeddings", help="text-format word vectors")
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--topk-mode", choices=("head_independent", "head_dependent", "off"))

    p = sub.add_parser("train", help="train a model")
    data_args(p, eval_too=True)
    model_args(p)
    p.add_argument("--k", type=int)
    p.add_argument("--blocks", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--log-wall-time", action="store_true", help="include wall time in metrics.jsonl")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    data_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("explain", help="top-k context words per instance")
    p.add_argument("--checkpoint", required=True)
    data_args(p)
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("analyze-length", help="accuracy by sentence length for two checkpoints")
    p.add_argument("--checkpoint-a", required=True)
    p.add_argument("--checkpoint-b", required=True)
    data_args(p)
    p.add_argument("--buckets", default="1-10,11-20,21+")
    p.set_defaults(func=cmd_analyze_length)

    p = sub.add_parser("sweep", help="grid over k and block count, both selection modes")
    data_args(p, eval_too=True)
    model_args(p)
    p.add_argument("--k-values", default="2,3")
    p.add_argument("--block-values", default="1,2")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="per-class instance counts")
    data_args(p)
    p.add_argument("--test-data")
    p.add_argument("--test-labels")
    p.add_argument("--expect", choices=sorted(corpus.TABLE1_COUNTS))
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="regenerate the bundled synthetic corpora")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sagcn: error: {exc}", file=sys.stderr)
        return 2
    except CheckpointError as exc:
        print(f"sagcn: checkpoint error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
