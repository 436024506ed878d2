"""Linear-chain CRF over BIO tags with virtual START/END states.

Emission scores ``P`` are n×S; the transition matrix ``T`` is (S+2)×(S+2)
where row/column ``START`` and ``END`` hold boundary transitions. ``T[a, b]``
scores moving from tag ``a`` to tag ``b``.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from . import nn
from .nn import Tensor

TAGS = ("B", "I", "O")
B, I, O = 0, 1, 2
NUM_TAGS = len(TAGS)
START, END = NUM_TAGS, NUM_TAGS + 1


def tag_ids(tags: Sequence[str | int]) -> list[int]:
    return [TAGS.index(t) if isinstance(t, str) else int(t) for t in tags]


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    m = x.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def emissions(h: Tensor, w_o: Tensor, b_o: Tensor) -> Tensor:
    """Per-token tag scores ``h @ W_o + b_o``."""
    return nn.add(nn.matmul(h, w_o), b_o)


def path_score(P: np.ndarray, T: np.ndarray, tags: Sequence[str | int], use_end: bool = True) -> float:
    y = tag_ids(tags)
    if len(y) != P.shape[0]:
        raise ValueError(f"{len(y)} tags for {P.shape[0]} positions")
    score = T[START, y[0]] + P[0, y[0]]
    for i in range(1, len(y)):
        score += T[y[i - 1], y[i]] + P[i, y[i]]
    if use_end:
        score += T[y[-1], END]
    return float(score)


def _forward(P: np.ndarray, T: np.ndarray) -> np.ndarray:
    trans = T[:NUM_TAGS, :NUM_TAGS]
    alpha = np.empty_like(P)
    alpha[0] = T[START, :NUM_TAGS] + P[0]
    for i in range(1, P.shape[0]):
        alpha[i] = _logsumexp(alpha[i - 1][:, None] + trans, axis=0) + P[i]
    return alpha


def _final(T: np.ndarray, use_end: bool) -> np.ndarray:
    return T[:NUM_TAGS, END] if use_end else np.zeros(NUM_TAGS)


def log_partition(P: np.ndarray, T: np.ndarray, use_end: bool = True) -> float:
    """log Σ_y exp(path_score(y)) by the forward algorithm, O(n·S²)."""
    if P.shape[0] < 1:
        raise ValueError("log_partition needs at least one position")
    alpha = _forward(P, T)
    return float(_logsumexp(alpha[-1] + _final(T, use_end), axis=0))


def marginals(P: np.ndarray, T: np.ndarray, use_end: bool = True):
    """Forward-backward: (log Z, per-position tag marginals, expected transition counts)."""
    n = P.shape[0]
    trans = T[:NUM_TAGS, :NUM_TAGS]
    final = _final(T, use_end)
    alpha = _forward(P, T)
    beta = np.empty_like(P)
    beta[-1] = final
    for i in range(n - 2, -1, -1):
        beta[i] = _logsumexp(trans + (P[i + 1] + beta[i + 1])[None, :], axis=1)
    log_z = float(_logsumexp(alpha[-1] + final, axis=0))
    node = np.exp(alpha + beta - log_z)
    counts = np.zeros_like(T)
    counts[START, :NUM_TAGS] = node[0]
    if use_end:
        counts[:NUM_TAGS, END] = node[-1]
    for i in range(1, n):
        edge = alpha[i - 1][:, None] + trans + (P[i] + beta[i])[None, :] - log_z
        counts[:NUM_TAGS, :NUM_TAGS] += np.exp(edge)
    return log_z, node, counts


def gold_counts(T_shape, gold: Sequence[int], use_end: bool = True) -> np.ndarray:
    counts = np.zeros(T_shape)
    counts[START, gold[0]] += 1
    for a, b in zip(gold, gold[1:]):
        counts[a, b] += 1
    if use_end:
        counts[gold[-1], END] += 1
    return counts


def nll(P: np.ndarray, T: np.ndarray, gold: Sequence[str | int], use_end: bool = True) -> float:
    return log_partition(P, T, use_end) - path_score(P, T, gold, use_end)


def nll_tensor(P: Tensor, T: Tensor, gold: Sequence[str | int], use_end: bool = True) -> Tensor:
    """Differentiable negative log-likelihood of ``gold`` under the CRF."""
    y = tag_ids(gold)
    Pd, Td = P.data, T.data
    log_z, node, counts = marginals(Pd, Td, use_end)
    value = log_z - path_score(Pd, Td, y, use_end)
    one_hot = np.zeros_like(Pd)
    one_hot[np.arange(len(y)), y] = 1.0
    dP = node - one_hot
    dT = counts - gold_counts(Td.shape, y, use_end)

    def back(g):
        s = g.reshape(-1)[0]
        return dP * s, dT * s

    return Tensor(value, (P, T), back, "crf_nll")


def viterbi(P: np.ndarray, T: np.ndarray, use_end: bool = True) -> tuple[list[int], float]:
    """Highest-scoring tag path; ties go to the lower tag index."""
    n = P.shape[0]
    trans = T[:NUM_TAGS, :NUM_TAGS]
    delta = T[START, :NUM_TAGS] + P[0]
    back = np.zeros((n, NUM_TAGS), dtype=np.int64)
    for i in range(1, n):
        # same association as path_score so the best score is reproduced bit-exactly
        cand = delta[:, None] + (trans + P[i][None, :])
        back[i] = np.argmax(cand, axis=0)
        delta = cand[back[i], np.arange(NUM_TAGS)]
    delta = delta + _final(T, use_end)
    best = int(np.argmax(delta))
    path = [best]
    for i in range(n - 1, 0, -1):
        best = int(back[i, best])
        path.append(best)
    path.reverse()
    return path, float(delta[path[-1]])


def extract_spans(tags: Sequence[str | int]) -> list[tuple[int, int]]:
    """Half-open spans of B/I runs; an I with no open span starts a new one."""
    spans = []
    start = None
    for i, t in enumerate(tag_ids(tags)):
        if t == B or (t == I and start is None):
            if start is not None:
                spans.append((start, i))
            start = i
        elif t == O and start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(tags)))
    return spans


def brute_force(P: np.ndarray, T: np.ndarray, use_end: bool = True):
    """Enumerate all Sⁿ paths: (log Z, best score, every argmax path).

    Exponential; meant as a check on the dynamic programs for small n.
    """
    scores = {
        y: path_score(P, T, y, use_end)
        for y in itertools.product(range(NUM_TAGS), repeat=P.shape[0])
    }
    values = np.array(list(scores.values()))
    m = values.max()
    log_z = float(m + np.log(np.exp(values - m).sum()))
    best_paths = [list(y) for y, s in scores.items() if s == m]
    return log_z, float(m), best_paths

