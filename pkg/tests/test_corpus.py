import json

import numpy as np
import pytest

from sagcn import corpus
from sagcn.corpus import (
    ROOT,
    ConllError,
    DatasetError,
    EmbeddingFormatError,
    Instance,
    StructureError,
    Token,
)

SAMPLE = """# sent_id = r1
# text = The pizza was great
1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_
2\tpizza\tpizza\tNOUN\t_\t_\t4\tnsubj\t_\t_
3\twas\tbe\tAUX\t_\t_\t4\tcop\t_\t_
4\tgreat\tgreat\tADJ\t_\t_\t0\troot\t_\t_

1\tService\t_\t_\t_\t_\t2\tnsubj\t_\t_
2-3\tisn't\t_\t_\t_\t_\t_\t_\t_\t_
2\tis\t_\t_\t_\t_\t0\troot\t_\t_
2.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_
3\tslow\t_\t_\t_\t_\t2\tamod\t_\t_
"""


def write_dataset(tmp_path, records, text=SAMPLE):
    sents = tmp_path / "d.conllu"
    labels = tmp_path / "d.jsonl"
    sents.write_text(text)
    labels.write_text("".join(json.dumps(r) + "\n" for r in records))
    return sents, labels


def test_read_conllu_basic():
    sents = corpus.read_conllu(SAMPLE)
    assert [s.sent_id for s in sents] == ["r1", "1"]
    first = sents[0].tokens
    assert [t.surface for t in first] == ["The", "pizza", "was", "great"]
    assert [t.head for t in first] == [1, 3, 3, ROOT]
    assert first[1].deprel == "nsubj"
    # multiword ranges and empty nodes are skipped
    assert [t.surface for t in sents[1].tokens] == ["Service", "is", "slow"]


def test_conllu_roundtrip():
    sents = corpus.read_conllu(SAMPLE)
    again = corpus.read_conllu(corpus.to_conllu(sents))
    assert again == sents


@pytest.mark.parametrize(
    "line,exc",
    [
        ("1\tA\t_\t_\t_\t_\t0\troot\t_", ConllError),
        ("x\tA\t_\t_\t_\t_\t0\troot\t_\t_", ConllError),
        ("1\tA\t_\t_\t_\t_\tq\troot\t_\t_", ConllError),
        ("2\tA\t_\t_\t_\t_\t0\troot\t_\t_", ConllError),
        ("1\tA\t_\t_\t_\t_\t5\troot\t_\t_", StructureError),
    ],
)
def test_conllu_errors(line, exc):
    with pytest.raises(exc):
        corpus.read_conllu(line + "\n")


def test_conll_error_reports_line_number():
    text = "1\tA\t_\t_\t_\t_\t0\troot\t_\t_\n2\tB\t_\t_\t_\t_\t1\n"
    with pytest.raises(ConllError) as info:
        corpus.read_conllu(text)
    assert info.value.line_no == 2


@pytest.mark.parametrize(
    "heads",
    [
        [ROOT, ROOT],  # two roots
        [1, 0, ROOT],  # cycle off the root
        [0, ROOT],  # self head
        [ROOT, 7],  # out of range
        [],  # no root at all
    ],
)
def test_check_tree_rejects(heads):
    with pytest.raises(StructureError):
        corpus.check_tree(heads)


def test_check_tree_accepts_chain():
    corpus.check_tree([1, 2, 3, ROOT])


def test_load_dataset(tmp_path):
    recs = [
        {"sentence_id": "r1", "term_start": 1, "term_end": 2, "sentiment": "positive", "opinion_spans": [[3, 4]]},
        {"sentence_id": "1", "term_start": 0, "term_end": 1, "sentiment": "negative", "opinion_spans": [[2, 3]]},
    ]
    data = corpus.load_dataset(*write_dataset(tmp_path, recs))
    assert [i.sentiment for i in data] == [0, 2]
    assert data[0].opinion_tags == ("O", "O", "O", "B")
    assert data[0].words == ["The", "pizza", "was", "great"]
    assert [corpus.instance_to_record(i) for i in data] == recs


@pytest.mark.parametrize(
    "rec",
    [
        {"sentence_id": "zz", "term_start": 0, "term_end": 1, "sentiment": "positive"},
        {"sentence_id": "r1", "term_start": 0, "term_end": 1, "sentiment": "conflict"},
        {"sentence_id": "r1", "term_start": 3, "term_end": 9, "sentiment": "positive"},
        {"sentence_id": "r1", "term_start": 1, "term_end": 2, "sentiment": "positive", "opinion_spans": [[1, 3]]},
        {"sentence_id": "r1", "term_start": 0, "term_end": 1, "sentiment": "positive", "opinion_spans": [[1, 3], [2, 4]]},
        {"sentence_id": "r1", "term_start": 0, "sentiment": "positive"},
    ],
)
def test_load_dataset_rejects_bad_records(tmp_path, rec):
    with pytest.raises(DatasetError):
        corpus.load_dataset(*write_dataset(tmp_path, [rec]))


def test_bad_json_line(tmp_path):
    sents, labels = write_dataset(tmp_path, [])
    labels.write_text("{not json\n")
    with pytest.raises(DatasetError, match=":1:"):
        corpus.load_dataset(sents, labels)


def test_instance_invariants():
    toks = tuple(Token(w, i, ROOT if i == 0 else 0) for i, w in enumerate("a b c".split()))
    with pytest.raises(DatasetError):
        Instance(toks, (0, 1), 0, ("O", "I", "O"))
    with pytest.raises(DatasetError):
        Instance(toks, (0, 1), 0, ("B", "O", "O"))
    with pytest.raises(DatasetError):
        Instance(toks, (2, 2), 0, ("O", "O", "O"))


def test_bio_helpers():
    assert corpus.spans_to_bio(5, [(1, 3), (4, 5)]) == ["O", "B", "I", "O", "B"]
    assert corpus.bio_is_valid(["B", "I", "O", "B"])
    assert not corpus.bio_is_valid(["O", "I"])
    assert not corpus.bio_is_valid(["X"])


def test_vocab_is_first_seen_and_lowercased(tmp_path):
    recs = [
        {"sentence_id": "r1", "term_start": 1, "term_end": 2, "sentiment": "positive"},
        {"sentence_id": "1", "term_start": 0, "term_end": 1, "sentiment": "neutral"},
    ]
    data = corpus.load_dataset(*write_dataset(tmp_path, recs))
    vocab = corpus.build_vocab(data)
    assert vocab.id_to_token[:6] == ["<pad>", "<unk>", "the", "pizza", "was", "great"]
    assert vocab.lookup("PIZZA") == 3
    assert vocab.lookup("unseen") == corpus.UNK
    np.testing.assert_array_equal(vocab.ids(["The", "?"]), [2, corpus.UNK])
    with pytest.raises(ValueError):
        corpus.Vocabulary.from_tokens(["x"])


def test_load_embeddings(tmp_path):
    vocab = corpus.Vocabulary.from_tokens(["<pad>", "<unk>", "pizza", "great", "rare"])
    path = tmp_path / "emb.txt"
    path.write_text("3 2\nPizza 1 2\ngreat 3 4\npizza 9 9\n<pad> 5 5\n")
    table = corpus.load_embeddings(path, vocab, np.random.default_rng(0))
    assert table.dim == 2
    np.testing.assert_array_equal(table.matrix[2], [1, 2])
    np.testing.assert_array_equal(table.matrix[3], [3, 4])
    np.testing.assert_array_equal(table.matrix[0], [0, 0])
    assert np.abs(table.matrix[4]).max() <= 0.25 / np.sqrt(2)


@pytest.mark.parametrize("text", ["a 1 2\nb 1\n", "a 1 x\n", "", "a nan 1\n"])
def test_load_embeddings_errors(tmp_path, text):
    path = tmp_path / "emb.txt"
    path.write_text(text)
    vocab = corpus.Vocabulary.from_tokens(["<pad>", "<unk>", "a"])
    with pytest.raises(EmbeddingFormatError):
        corpus.load_embeddings(path, vocab, np.random.default_rng(0))


def test_table1_reference_counts_are_consistent():
    lap = corpus.TABLE1_COUNTS["14lap"]
    assert lap["train"] == {"positive": 991, "neutral": 462, "negative": 867}
    assert lap["test"] == {"positive": 341, "neutral": 169, "negative": 128}
    assert set(corpus.TABLE1_COUNTS) == {"14lap", "14rest", "15rest", "16rest"}


def test_dataset_stats_matches(tmp_path):
    recs = [{"sentence_id": "r1", "term_start": 1, "term_end": 2, "sentiment": "positive"}]
    data = corpus.load_dataset(*write_dataset(tmp_path, recs))
    stats = corpus.dataset_stats(data, data)
    assert stats.train == {"positive": 1, "neutral": 0, "negative": 0}
    assert stats.matches({"train": stats.train, "test": stats.test})
    assert not stats.matches({"train": {"positive": 2, "neutral": 0, "negative": 0}})
