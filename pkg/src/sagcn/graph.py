"""Dependency-tree adjacency matrices and hop distances."""

from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

from .corpus import ROOT, Instance, Token, check_tree


def _heads(tokens: Sequence[Token] | Instance) -> list[int]:
    if isinstance(tokens, Instance):
        tokens = tokens.tokens
    return [t.head for t in tokens]


def adjacency_from_parse(tokens: Sequence[Token]) -> np.ndarray:
    """Undirected tree adjacency with a self-loop on every node."""
    heads = _heads(tokens)
    check_tree(heads)
    n = len(heads)
    adj = np.eye(n)
    for i, h in enumerate(heads):
        if h != ROOT:
            adj[i, h] = adj[h, i] = 1.0
    return adj


def row_normalize(adj: np.ndarray) -> np.ndarray:
    return adj / adj.sum(axis=1, keepdims=True)


def _neighbors(heads: list[int]) -> list[list[int]]:
    nbrs: list[list[int]] = [[] for _ in heads]
    for i, h in enumerate(heads):
        if h != ROOT:
            nbrs[i].append(h)
            nbrs[h].append(i)
    return nbrs


def _bfs(nbrs: list[list[int]], sources: Sequence[int]) -> list[int]:
    dist = [-1] * len(nbrs)
    queue = deque(sources)
    for s in sources:
        dist[s] = 0
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def hop_distance(tokens: Sequence[Token], i: int, j: int) -> int:
    heads = _heads(tokens)
    n = len(heads)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"token index out of range for {n} tokens: ({i}, {j})")
    check_tree(heads)
    return _bfs(_neighbors(heads), [i])[j]


def term_to_token_distances(instance: Instance) -> list[int]:
    """Minimum hop distance from each token to any aspect-term token."""
    heads = _heads(instance)
    check_tree(heads)
    start, end = instance.term_span
    return _bfs(_neighbors(heads), list(range(start, end)))
