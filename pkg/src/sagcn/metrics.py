"""Classification and span-extraction metrics."""

from __future__ import annotations

from typing import Sequence


def accuracy(preds: Sequence[int], golds: Sequence[int]) -> float:
    if len(preds) != len(golds):
        raise ValueError("preds and golds differ in length")
    if not golds:
        raise ValueError("accuracy of an empty set")
    return sum(p == g for p, g in zip(preds, golds)) / len(golds)


def per_class_f1(preds: Sequence[int], golds: Sequence[int], num_classes: int) -> list[float]:
    if len(preds) != len(golds):
        raise ValueError("preds and golds differ in length")
    if not golds:
        raise ValueError("F1 of an empty set")
    scores = []
    for c in range(num_classes):
        tp = sum(p == c and g == c for p, g in zip(preds, golds))
        fp = sum(p == c and g != c for p, g in zip(preds, golds))
        fn = sum(p != c and g == c for p, g in zip(preds, golds))
        denom = 2 * tp + fp + fn
        # a class absent from both sides scores 0
        scores.append(2 * tp / denom if denom else 0.0)
    return scores


def macro_f1(preds: Sequence[int], golds: Sequence[int], num_classes: int) -> float:
    scores = per_class_f1(preds, golds, num_classes)
    return sum(scores) / num_classes


def span_prf(
    pred_spans: Sequence[Sequence[tuple[int, int]]],
    gold_spans: Sequence[Sequence[tuple[int, int]]],
) -> tuple[float, float, float]:
    """Exact-match precision, recall, F1 micro-averaged over instances.

    Arguments hold one span list per instance. With no spans on either side
    all three are 1.0.
    """
    if len(pred_spans) != len(gold_spans):
        raise ValueError("pred and gold span lists differ in length")
    tp = n_pred = n_gold = 0
    for pred, gold in zip(pred_spans, gold_spans):
        p = {tuple(s) for s in pred}
        g = {tuple(s) for s in gold}
        tp += len(p & g)
        n_pred += len(p)
        n_gold += len(g)
    if n_pred == 0 and n_gold == 0:
        return 1.0, 1.0, 1.0
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def span_f1(pred_spans, gold_spans) -> float:
    return span_prf(pred_spans, gold_spans)[2]
