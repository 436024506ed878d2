"""Dataset ingestion: CoNLL-U parses, JSON-lines labels, vocabulary, word vectors."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ROOT = -1
SENTIMENTS = ("positive", "neutral", "negative")
BIO = ("B", "I", "O")
PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"

# Per-class train/test counts in the four SemEval benchmarks (conflict labels removed).
TABLE1_COUNTS = {
    "14lap": {"train": {"positive": 991, "neutral": 462, "negative": 867},
              "test": {"positive": 341, "neutral": 169, "negative": 128}},
    "14rest": {"train": {"positive": 2164, "neutral": 633, "negative": 805},
               "test": {"positive": 728, "neutral": 196, "negative": 196}},
    "15rest": {"train": {"positive": 963, "neutral": 36, "negative": 280},
               "test": {"positive": 353, "neutral": 37, "negative": 207}},
    "16rest": {"train": {"positive": 1324, "neutral": 71, "negative": 489},
               "test": {"positive": 483, "neutral": 32, "negative": 135}},
}


class ConllError(ValueError):
    """Malformed CoNLL-U line."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class StructureError(ValueError):
    """Heads do not form a single rooted tree."""


class DatasetError(ValueError):
    pass


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    surface: str
    index: int
    head: int  # 0-based parent, or ROOT
    deprel: str = "_"


@dataclass(frozen=True)
class Sentence:
    sent_id: str
    tokens: tuple[Token, ...]


def check_tree(heads: Sequence[int]) -> None:
    """Raise :class:`StructureError` unless ``heads`` describe one rooted tree."""
    n = len(heads)
    roots = [i for i, h in enumerate(heads) if h == ROOT]
    if len(roots) != 1:
        raise StructureError(f"expected exactly one root, found {len(roots)}")
    for i, h in enumerate(heads):
        if h == i:
            raise StructureError(f"token {i} is its own head")
        if h != ROOT and not 0 <= h < n:
            raise StructureError(f"token {i} has head {h} outside 0..{n - 1}")
    # every token must reach the root without revisiting a node
    state = [0] * n  # 0 unvisited, 1 on current walk, 2 reaches root
    state[roots[0]] = 2
    for start in range(n):
        path = []
        i = start
        while state[i] == 0:
            state[i] = 1
            path.append(i)
            i = heads[i]
        if state[i] == 1:
            raise StructureError(f"cycle through token {i}")
        for j in path:
            state[j] = 2


def read_conllu(text: str) -> list[Sentence]:
    """Parse CoNLL-U text into sentences.

    Multiword-token ranges (``3-4``) and empty nodes (``5.1``) are skipped.
    A ``# sent_id = ...`` comment names the sentence; otherwise its 0-based
    ordinal is used.
    """
    sentences: list[Sentence] = []
    rows: list[tuple[int, list[str]]] = []
    sent_id: str | None = None

    def flush():
        nonlocal rows, sent_id
        if rows:
            sid = sent_id if sent_id is not None else str(len(sentences))
            sentences.append(Sentence(sid, _build_tokens(rows)))
        rows, sent_id = [], None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep and key.strip() == "sent_id":
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConllError(line_no, f"expected 10 tab-separated columns, got {len(cols)}")
        if "-" in cols[0] or "." in cols[0]:
            continue
        rows.append((line_no, cols))
    flush()
    return sentences


def _build_tokens(rows: list[tuple[int, list[str]]]) -> tuple[Token, ...]:
    n = len(rows)
    tokens = []
    for expected, (line_no, cols) in enumerate(rows, start=1):
        try:
            tid = int(cols[0])
        except ValueError:
            raise ConllError(line_no, f"non-numeric ID {cols[0]!r}") from None
        try:
            head = int(cols[6])
        except ValueError:
            raise ConllError(line_no, f"non-numeric HEAD {cols[6]!r}") from None
        if tid != expected:
            raise ConllError(line_no, f"ID {tid} out of sequence, expected {expected}")
        if not 0 <= head <= n:
            raise StructureError(f"line {line_no}: head {head} outside 0..{n}")
        tokens.append(Token(cols[1], tid - 1, ROOT if head == 0 else head - 1, cols[7]))
    check_tree([t.head for t in tokens])
    return tuple(tokens)


def parse_conllu(text: str) -> list[list[Token]]:
    return [list(s.tokens) for s in read_conllu(text)]


def to_conllu(sentences: Iterable[Sentence | Sequence[Token]]) -> str:
    blocks = []
    for sent in sentences:
        lines = []
        tokens = sent.tokens if isinstance(sent, Sentence) else sent
        if isinstance(sent, Sentence):
            lines.append(f"# sent_id = {sent.sent_id}")
        for t in tokens:
            head = 0 if t.head == ROOT else t.head + 1
            lines.append(f"{t.index + 1}\t{t.surface}\t_\t_\t_\t_\t{head}\t{t.deprel}\t_\t_")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


# ---------------------------------------------------------------------------
# instances


def bio_is_valid(tags: Sequence[str]) -> bool:
    prev = "O"
    for tag in tags:
        if tag not in BIO or (tag == "I" and prev == "O"):
            return False
        prev = tag
    return True


def spans_to_bio(n: int, spans: Sequence[Sequence[int]]) -> list[str]:
    tags = ["O"] * n
    for start, end in spans:
        tags[start] = "B"
        for i in range(start + 1, end):
            tags[i] = "I"
    return tags


@dataclass(frozen=True)
class Instance:
    tokens: tuple[Token, ...]
    term_span: tuple[int, int]
    sentiment: int
    opinion_tags: tuple[str, ...]
    sentence_id: str = ""

    def __post_init__(self):
        n = len(self.tokens)
        start, end = self.term_span
        if not (0 <= start < end <= n):
            raise DatasetError(f"term span {self.term_span} invalid for {n} tokens")
        if len(self.opinion_tags) != n:
            raise DatasetError("opinion_tags length differs from token count")
        if not bio_is_valid(self.opinion_tags):
            raise DatasetError(f"invalid BIO sequence {list(self.opinion_tags)}")
        if any(self.opinion_tags[i] != "O" for i in range(start, end)):
            raise DatasetError("aspect term tokens must be tagged O")

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def heads(self) -> list[int]:
        return [t.head for t in self.tokens]


def load_dataset(sentences_path, labels_path) -> list[Instance]:
    """Join a CoNLL-U file with a JSON-lines label file.

    Each label record is ``{sentence_id, term_start, term_end, sentiment,
    opinion_spans}`` with half-open spans. One Instance per record.
    """
    sentences_path, labels_path = Path(sentences_path), Path(labels_path)
    by_id = {s.sent_id: s for s in read_conllu(sentences_path.read_text(encoding="utf-8"))}
    instances = []
    with labels_path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{labels_path}:{line_no}: bad JSON: {exc}") from None
            try:
                instances.append(_instance_from_record(rec, by_id))
            except (DatasetError, KeyError, TypeError) as exc:
                raise DatasetError(f"{labels_path}:{line_no}: {exc}") from None
    return instances


def _instance_from_record(rec: dict, by_id: dict[str, Sentence]) -> Instance:
    sid = str(rec["sentence_id"])
    if sid not in by_id:
        raise DatasetError(f"unknown sentence_id {sid!r}")
    sent = by_id[sid]
    n = len(sent.tokens)
    if rec["sentiment"] not in SENTIMENTS:
        raise DatasetError(f"unknown sentiment {rec['sentiment']!r}")
    start, end = int(rec["term_start"]), int(rec["term_end"])
    if not (0 <= start < end <= n):
        raise DatasetError(f"term span [{start}, {end}) out of range for {n} tokens")
    spans = sorted((int(a), int(b)) for a, b in rec.get("opinion_spans", []))
    for a, b in spans:
        if not (0 <= a < b <= n):
            raise DatasetError(f"opinion span [{a}, {b}) out of range for {n} tokens")
        if a < end and start < b:
            raise DatasetError(f"opinion span [{a}, {b}) overlaps the aspect term")
    for (a1, b1), (a2, b2) in zip(spans, spans[1:]):
        if a2 < b1:
            raise DatasetError(f"opinion spans [{a1}, {b1}) and [{a2}, {b2}) overlap")
    return Instance(
        tokens=sent.tokens,
        term_span=(start, end),
        sentiment=SENTIMENTS.index(rec["sentiment"]),
        opinion_tags=tuple(spans_to_bio(n, spans)),
        sentence_id=sid,
    )


def instance_to_record(inst: Instance) -> dict:
    from .crf import extract_spans

    return {
        "sentence_id": inst.sentence_id,
        "term_start": inst.term_span[0],
        "term_end": inst.term_span[1],
        "sentiment": SENTIMENTS[inst.sentiment],
        "opinion_spans": [list(s) for s in extract_spans(inst.opinion_tags)],
    }


@dataclass
class DatasetStats:
    train: dict[str, int]
    test: dict[str, int] = field(default_factory=dict)

    def matches(self, expected: dict[str, dict[str, int]]) -> bool:
        return self.train == expected["train"] and (not expected.get("test") or self.test == expected["test"])


def class_counts(instances: Iterable[Instance]) -> dict[str, int]:
    counts = Counter(SENTIMENTS[i.sentiment] for i in instances)
    return {s: counts.get(s, 0) for s in SENTIMENTS}


def dataset_stats(train: Sequence[Instance], test: Sequence[Instance] = ()) -> DatasetStats:
    return DatasetStats(class_counts(train), class_counts(test))


# ---------------------------------------------------------------------------
# vocabulary and embeddings


@dataclass
class Vocabulary:
    id_to_token: list[str]
    token_to_id: dict[str, int]

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> Vocabulary:
        itos = list(tokens)
        if itos[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError("vocabulary must start with the PAD and UNK specials")
        return cls(itos, {w: i for i, w in enumerate(itos)})

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, word: str) -> int:
        return self.token_to_id.get(word.lower(), UNK)

    def ids(self, words: Iterable[str]) -> np.ndarray:
        return np.array([self.lookup(w) for w in words], dtype=np.int64)


def build_vocab(instances: Iterable[Instance]) -> Vocabulary:
    itos = [PAD_TOKEN, UNK_TOKEN]
    stoi = {PAD_TOKEN: PAD, UNK_TOKEN: UNK}
    for inst in instances:
        for tok in inst.tokens:
            w = tok.surface.lower()
            if w not in stoi:
                stoi[w] = len(itos)
                itos.append(w)
    return Vocabulary(itos, stoi)


@dataclass
class EmbeddingTable:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def random_embeddings(vocab: Vocabulary, dim: int, rng: np.random.Generator) -> EmbeddingTable:
    bound = 0.25 / math.sqrt(dim)
    matrix = rng.uniform(-bound, bound, size=(len(vocab), dim))
    matrix[PAD] = 0.0
    return EmbeddingTable(matrix)


def load_embeddings(path, vocab: Vocabulary, rng: np.random.Generator) -> EmbeddingTable:
    """Read ``word v1 ... vd`` lines; unseen vocabulary rows are drawn uniformly.

    A leading word2vec-style ``<count> <dim>`` header line is skipped. The
    first occurrence of a (lowercased) word wins.
    """
    found: dict[int, np.ndarray] = {}
    dim = None
    with Path(path).open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"line {line_no}: non-numeric vector value") from None
            if dim is None:
                dim = vec.size
            if vec.size != dim or dim == 0:
                raise EmbeddingFormatError(f"line {line_no}: width {vec.size}, expected {dim}")
            if not np.isfinite(vec).all():
                raise EmbeddingFormatError(f"line {line_no}: non-finite value")
            idx = vocab.token_to_id.get(parts[0].lower())
            if idx is not None and idx not in found:
                found[idx] = vec
    if dim is None:
        raise EmbeddingFormatError("embedding file is empty")
    table = random_embeddings(vocab, dim, rng)
    for idx, vec in found.items():
        table.matrix[idx] = vec
    table.matrix[PAD] = 0.0
    return table
