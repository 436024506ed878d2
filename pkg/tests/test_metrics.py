import pytest

from sagcn.metrics import accuracy, macro_f1, per_class_f1, span_f1, span_prf


def test_accuracy():
    assert accuracy([0, 1, 2, 2], [0, 1, 1, 2]) == 0.75
    with pytest.raises(ValueError):
        accuracy([], [])
    with pytest.raises(ValueError):
        accuracy([0], [0, 1])


def test_macro_f1_hand_computed_confusion():
    # gold/pred pairs: class 0 -> F1 1, class 1 -> 2/3, class 2 -> 2/3
    golds = [0, 0, 1, 1, 2, 2]
    preds = [0, 0, 1, 2, 2, 1]
    f1s = per_class_f1(preds, golds, 3)
    assert f1s[0] == 1.0
    assert abs(f1s[1] - 0.5) < 1e-12
    assert abs(f1s[2] - 0.5) < 1e-12
    assert abs(macro_f1(preds, golds, 3) - 2 / 3) < 1e-12


def test_macro_f1_seven_ninths():
    golds, preds = [0, 0, 1, 2], [0, 1, 1, 2]
    assert accuracy(preds, golds) == 0.75
    f1s = per_class_f1(preds, golds, 3)
    assert [round(f, 12) for f in f1s] == [round(2 / 3, 12), round(2 / 3, 12), 1.0]
    assert abs(macro_f1(preds, golds, 3) - 7 / 9) < 1e-12


def test_single_class_predictions_lower_macro_f1_than_accuracy():
    golds = [0, 0, 0, 1, 2]
    preds = [0] * 5
    assert macro_f1(preds, golds, 3) < accuracy(preds, golds)


def test_absent_class_contributes_zero():
    assert macro_f1([0, 1], [0, 1], 3) == pytest.approx(2 / 3, abs=1e-15)


def test_span_prf():
    gold = [[(1, 3)], [(0, 1), (4, 5)]]
    pred = [[(1, 3)], [(0, 2), (4, 5)]]
    p, r, f = span_prf(pred, gold)
    assert (p, r) == (2 / 3, 2 / 3)
    assert f == pytest.approx(2 / 3, abs=1e-15)


def test_span_precision_recall_example():
    assert span_prf([[(1, 3), (5, 6)]], [[(1, 3)]]) == (0.5, 1.0, 2 / 3)


def test_span_exact_match_only():
    assert span_f1([[(1, 2)]], [[(1, 3)]]) == 0.0
    assert span_f1([[(1, 3)]], [[(1, 3)]]) == 1.0


def test_span_empty_cases():
    assert span_f1([[]], [[]]) == 1.0
    assert span_prf([[(0, 1)]], [[]]) == (0.0, 0.0, 0.0)
    assert span_prf([[]], [[(0, 1)]]) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        span_f1([[]], [])
