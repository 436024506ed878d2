import numpy as np
import pytest

from sagcn import graph
from sagcn.corpus import ROOT, Instance, StructureError, Token


def toks(heads):
    return [Token(f"w{i}", i, h) for i, h in enumerate(heads)]


def test_adjacency_is_symmetric_with_self_loops():
    heads = [1, ROOT, 1, 2]
    adj = graph.adjacency_from_parse(toks(heads))
    expected = np.array(
        [
            [1, 1, 0, 0],
            [1, 1, 1, 0],
            [0, 1, 1, 1],
            [0, 0, 1, 1],
        ],
        float,
    )
    np.testing.assert_array_equal(adj, expected)


def test_row_normalize_rows_sum_to_one():
    adj = graph.adjacency_from_parse(toks([1, ROOT, 1, 1, 3]))
    norm = graph.row_normalize(adj)
    np.testing.assert_allclose(norm.sum(axis=1), 1.0, atol=1e-15)
    assert norm[1, 0] == 0.25  # degree 3 plus self-loop


def test_adjacency_rejects_bad_trees():
    with pytest.raises(StructureError):
        graph.adjacency_from_parse(toks([1, 0]))


def test_single_token():
    np.testing.assert_array_equal(graph.adjacency_from_parse(toks([ROOT])), [[1.0]])


def test_hop_distance_on_chain():
    chain = toks([1, 2, 3, 4, ROOT])
    assert graph.hop_distance(chain, 0, 4) == 4
    assert graph.hop_distance(chain, 3, 3) == 0
    assert graph.hop_distance(chain, 4, 1) == 3
    with pytest.raises(IndexError):
        graph.hop_distance(chain, 0, 5)


def test_term_distances_use_nearest_term_token():
    heads = [1, 2, ROOT, 2, 3]
    inst = Instance(tuple(toks(heads)), (0, 2), 0, ("O",) * 5)
    assert graph.term_to_token_distances(inst) == [0, 0, 1, 2, 3]


def test_adjacency_powers_match_hop_distances():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 12))
        # random recursive tree: token i attaches to an earlier token
        heads = [ROOT] + [int(rng.integers(0, i)) for i in range(1, n)]
        tokens = toks(heads)
        adj = graph.adjacency_from_parse(tokens)
        reach = np.eye(n)
        for d in range(n):
            for j in range(n):
                within = reach[0, j] > 0
                assert within == (graph.hop_distance(tokens, 0, j) <= d)
            reach = reach @ adj
