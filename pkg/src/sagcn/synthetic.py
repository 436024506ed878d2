"""Synthetic review corpora with planted long-hop opinions.

Each sentence has one target aspect whose opinion word sits four dependency
hops away, behind a chain of filler words, plus distractor clauses about
other aspects of random polarity attached closer to the target. Opinion
vocabularies are aspect-category specific, so the right opinion word is
identified by its category, not by tree proximity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ROOT, SENTIMENTS, Sentence, Token, to_conllu

CATEGORIES = {
    "food": {
        "aspects": ["pizza", "pasta", "sushi", "soup"],
        "positive": ["delicious", "tasty", "flavorful"],
        "negative": ["bland", "stale", "soggy"],
        "neutral": ["ordinary", "standard"],
    },
    "service": {
        "aspects": ["waiter", "staff", "service", "hostess"],
        "positive": ["friendly", "attentive", "helpful"],
        "negative": ["rude", "slow", "careless"],
        "neutral": ["present", "usual"],
    },
    "price": {
        "aspects": ["price", "bill", "cost", "menu"],
        "positive": ["cheap", "reasonable", "fair"],
        "negative": ["expensive", "overpriced", "steep"],
        "neutral": ["typical", "listed"],
    },
    "ambience": {
        "aspects": ["music", "decor", "lighting", "patio"],
        "positive": ["cozy", "lovely", "charming"],
        "negative": ["noisy", "gloomy", "cramped"],
        "neutral": ["plain", "regular"],
    },
}
FILLERS = [
    "honestly", "yesterday", "apparently", "overall", "tonight", "somehow", "downtown",
    "really", "mostly", "frankly", "again", "still", "luckily", "later", "nearby",
    "friday", "weekend", "place", "table", "corner", "window", "night", "visit",
    "group", "family", "order", "reservation", "evening", "time", "street",
]
INTENSIFIERS = ["very", "quite", "so", "truly"]

DETERMINERS = ["the", "our", "their"]


@dataclass
class SyntheticSpec:
    n: int = 300
    seed: int = 7
    min_distractors: int = 1
    max_distractors: int = 3
    max_extra_fillers: int = 4
    intensifier_rate: float = 0.3


class _Builder:
    def __init__(self):
        self.words: list[str] = []
        self.heads: list[int] = []
        self.rels: list[str] = []

    def add(self, word: str, head: int | None = None, rel: str = "dep") -> int:
        self.words.append(word)
        self.heads.append(ROOT if head is None else head)
        self.rels.append("root" if head is None else rel)
        return len(self.words) - 1


def _sentence(rng: np.random.Generator, spec: SyntheticSpec):
    cats = list(CATEGORIES)
    target_cat = cats[rng.integers(len(cats))]
    polarity = SENTIMENTS[rng.integers(3)]
    lex = CATEGORIES[target_cat]
    b = _Builder()

    det = b.add(str(rng.choice(DETERMINERS)))
    aspect = b.add(str(rng.choice(lex["aspects"])))
    f1 = b.add(str(rng.choice(FILLERS)), None)
    f2 = b.add(str(rng.choice(FILLERS)), f1, "advmod")
    f3 = b.add(str(rng.choice(FILLERS)), f2, "obl")
    b.heads[det], b.rels[det] = aspect, "det"
    b.heads[aspect], b.rels[aspect] = f1, "nsubj"
    opinion_start = len(b.words)
    intens = None
    if rng.random() < spec.intensifier_rate:
        intens = b.add(str(rng.choice(INTENSIFIERS)))
    opinion = b.add(str(rng.choice(lex[polarity])), f3, "amod")
    if intens is not None:
        b.heads[intens], b.rels[intens] = opinion, "advmod"
    opinion_span = [opinion_start, opinion + 1]

    others = [c for c in cats if c != target_cat]
    n_dis = int(rng.integers(spec.min_distractors, spec.max_distractors + 1))
    for c in rng.permutation(others)[:n_dis]:
        dl = CATEGORIES[str(c)]
        b.add("and", f1, "cc")
        d_det = b.add(str(rng.choice(DETERMINERS)))
        d_aspect = b.add(str(rng.choice(dl["aspects"])), f1, "conj")
        b.heads[d_det], b.rels[d_det] = d_aspect, "det"
        b.add(str(rng.choice(dl[SENTIMENTS[rng.integers(3)]])), d_aspect, "amod")

    # leaf words do not change any existing hop distance
    for _ in range(int(rng.integers(0, spec.max_extra_fillers + 1))):
        attach = int(rng.choice([f1, f2, f3]))
        b.add(str(rng.choice(FILLERS)), attach, "advmod")
    return b, (aspect, aspect + 1), polarity, opinion_span


def generate(spec: SyntheticSpec, prefix: str = "s") -> tuple[list[Sentence], list[dict]]:
    rng = np.random.default_rng(spec.seed)
    sentences, records = [], []
    for i in range(spec.n):
        b, term, polarity, span = _sentence(rng, spec)
        sid = f"{prefix}{i:04d}"
        tokens = tuple(Token(w, j, h, r) for j, (w, h, r) in enumerate(zip(b.words, b.heads, b.rels)))
        sentences.append(Sentence(sid, tokens))
        records.append({
            "sentence_id": sid,
            "term_start": term[0],
            "term_end": term[1],
            "sentiment": polarity,
            "opinion_spans": [span],
        })
    return sentences, records


def lexicon() -> list[str]:
    words = list(DETERMINERS) + ["and"] + FILLERS + INTENSIFIERS
    for lex in CATEGORIES.values():
        for key in ("aspects", "positive", "negative", "neutral"):
            words.extend(lex[key])
    return list(dict.fromkeys(words))


def embedding_lines(dim: int = 32, seed: int = 11, noise: float = 0.5) -> list[str]:
    """Pseudo pre-trained vectors: noise plus shared category and polarity directions."""
    rng = np.random.default_rng(seed)
    cat_dirs = {c: rng.normal(size=dim) for c in CATEGORIES}
    pol_dirs = {"positive": rng.normal(size=dim), "negative": rng.normal(size=dim)}
    lines = []
    for w in lexicon():
        vec = noise * rng.normal(size=dim)
        for c, lex in CATEGORIES.items():
            for key in ("aspects", "positive", "negative", "neutral"):
                if w in lex[key]:
                    vec += cat_dirs[c]
                    if key in pol_dirs:
                        vec += pol_dirs[key]
        vec /= np.sqrt(dim)
        lines.append(w + " " + " ".join(f"{v:.6f}" for v in vec))
    return lines


def write_corpus(out_dir, name: str, spec: SyntheticSpec) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sentences, records = generate(spec, prefix=f"{name}-")
    conllu = out_dir / f"{name}.conllu"
    labels = out_dir / f"{name}.jsonl"
    conllu.write_text(to_conllu(sentences), encoding="utf-8")
    labels.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return conllu, labels


def write_embeddings(path, dim: int = 32, seed: int = 11) -> Path:
    path = Path(path)
    path.write_text("\n".join(embedding_lines(dim, seed)) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# bundled corpora

ABLATION_SPEC = SyntheticSpec(n=300, seed=7, min_distractors=3, max_distractors=3, max_extra_fillers=8)
ABLATION_TRAIN = 100  # first 100 train, remaining 200 evaluate
OVERFIT_SPEC = SyntheticSpec(n=20, seed=3, min_distractors=1, max_distractors=1, max_extra_fillers=2)
CHAIN_WORDS = ["pizza", "yesterday", "honestly", "again", "delicious", "tonight", "really", "later", "downtown"]

ABLATION_CONFIG = """\
# desk-scale SA-GCN settings for the bundled synthetic corpus
d_B = 32
d_h = 32
L = 4
k = 4
N = 2
n_dep_layers = 1
d_out = 32
dropout = 0.1
learning_rate = 0.003
batch_size = 4
epochs = 30
alpha = 0.1
"""

OVERFIT_CONFIG = """\
d_B = 32
d_h = 32
L = 2
k = 3
N = 1
dropout = 0.0
learning_rate = 0.01
batch_size = 4
epochs = 200
alpha = 0.1
"""


def chain_sentence() -> tuple[Sentence, dict]:
    """Nine-token path parse; the opinion word sits four hops from the aspect."""
    n = len(CHAIN_WORDS)
    tokens = tuple(
        Token(w, i, ROOT if i == n - 1 else i + 1, "root" if i == n - 1 else "dep")
        for i, w in enumerate(CHAIN_WORDS)
    )
    record = {"sentence_id": "chain-0", "term_start": 0, "term_end": 1,
              "sentiment": "positive", "opinion_spans": [[4, 5]]}
    return Sentence("chain-0", tokens), record


def _write_pair(out_dir: Path, name: str, sentences, records) -> list[Path]:
    conllu, labels = out_dir / f"{name}.conllu", out_dir / f"{name}.jsonl"
    conllu.write_text(to_conllu(sentences), encoding="utf-8")
    labels.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return [conllu, labels]


def write_bundled(out_dir) -> list[Path]:
    """Regenerate every bundled data file under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    sents, recs = generate(ABLATION_SPEC, prefix="abl-")
    cut = ABLATION_TRAIN
    paths += _write_pair(out, "synth300_train", sents[:cut], recs[:cut])
    paths += _write_pair(out, "synth300_eval", sents[cut:], recs[cut:])
    paths += _write_pair(out, "overfit20", *generate(OVERFIT_SPEC, prefix="ovf-"))
    sent, rec = chain_sentence()
    paths += _write_pair(out, "chain9", [sent], [rec])
    paths.append(write_embeddings(out / "vectors32.txt"))
    for name, text in (("ablation.cfg", ABLATION_CONFIG), ("overfit.cfg", OVERFIT_CONFIG)):
        (out / name).write_text(text, encoding="utf-8")
        paths.append(out / name)
    return paths


def bundled_path(name: str) -> Path:
    """Location of a bundled data file shipped inside the package."""
    path = Path(__file__).resolve().parent / "data" / name
    if not path.exists():
        raise FileNotFoundError(f"no bundled file {name!r}")
    return path
