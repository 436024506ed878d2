import logging

import numpy as np
import pytest
from conftest import random_instance, small_model

from sagcn.model import ConfigError
from sagcn.nn import ParamStore
from sagcn.train import (
    AdamState,
    OptimizerError,
    TrainConfig,
    adam_step,
    evaluate,
    seeded_rng,
    train,
)


def reference_adam(g_seq, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook bias-corrected Adam on a scalar parameter starting at 0."""
    x, m, v = 0.0, 0.0, 0.0
    for t, g in enumerate(g_seq, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat, v_hat = m / (1 - b1**t), v / (1 - b2**t)
        x -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return x


def test_adam_matches_textbook_update():
    store = ParamStore()
    p = store.add("x", np.zeros((1, 1)))
    cfg = TrainConfig(learning_rate=0.01)
    state = AdamState()
    grads = [0.5, -1.0, 2.0, 1e-3, 0.0]
    for g in grads:
        p.grad[...] = g
        adam_step(store, state, cfg)
    assert abs(p.data[0, 0] - reference_adam(grads, 0.01)) < 1e-15
    assert state.step == 5


def test_adam_first_step_is_lr_times_sign():
    store = ParamStore()
    p = store.add("x", np.zeros((1, 3)))
    p.grad[...] = [[3.0, -0.2, 0.0]]
    adam_step(store, AdamState(), TrainConfig(learning_rate=0.1))
    np.testing.assert_allclose(p.data, [[-0.1, 0.1, 0.0]], rtol=1e-6)


def test_adam_rejects_nonfinite_gradient():
    store = ParamStore()
    p = store.add("w", np.zeros((1, 1)))
    p.grad[...] = np.inf
    with pytest.raises(OptimizerError, match="'w'"):
        adam_step(store, AdamState(), TrainConfig())


@pytest.mark.parametrize(
    "kw", [dict(learning_rate=0), dict(batch_size=0), dict(epochs=0), dict(alpha=-1), dict(beta1=1.0)]
)
def test_train_config_validation(kw):
    with pytest.raises(ConfigError):
        TrainConfig(**kw)


def test_alpha_outside_usual_range_warns(caplog):
    with caplog.at_level(logging.WARNING):
        TrainConfig(alpha=0.5)
    assert "alpha" in caplog.text
    caplog.clear()
    with caplog.at_level(logging.WARNING):
        TrainConfig(alpha=0.0)
    assert not caplog.text


def test_seeded_streams_are_independent_and_reproducible():
    a0 = seeded_rng(3, 0).random(4)
    assert np.array_equal(a0, seeded_rng(3, 0).random(4))
    assert not np.array_equal(a0, seeded_rng(3, 1).random(4))


def make_data(n, seed):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, int(rng.integers(3, 8))) for _ in range(n)]


def test_training_reduces_loss():
    data = make_data(12, 0)
    model = small_model()
    res = train(data, model, TrainConfig(learning_rate=1e-2, epochs=30, batch_size=4, seed=0))
    losses = [r.train_loss for r in res.reports]
    assert losses[-1] < 0.5 * losses[0]
    assert res.best_epoch == 30  # no eval set: last epoch


def test_training_is_deterministic():
    data = make_data(8, 1)

    def run():
        model = small_model(seed=2, dropout=0.2)
        res = train(data, model, TrainConfig(learning_rate=5e-3, epochs=3, seed=9), data[:4])
        return [r.to_json_dict() for r in res.reports], model.params.state()

    r1, s1 = run()
    r2, s2 = run()
    assert r1 == r2
    for name in s1:
        assert np.array_equal(s1[name], s2[name])


def test_model_selection_keeps_earliest_best(monkeypatch):
    import sagcn.train as T

    accs = iter([0.5, 0.7, 0.7, 0.6])
    monkeypatch.setattr(
        T, "evaluate", lambda model, inst: {"accuracy": next(accs), "macro_f1": 0.0, "span_f1": 0.0}
    )
    data = make_data(4, 2)
    res = train(data, small_model(), TrainConfig(learning_rate=1e-3, epochs=4), data)
    assert res.best_epoch == 2
    assert res.best_report.accuracy == 0.7


def test_evaluate_reports_all_metrics():
    data = make_data(6, 3)
    m = evaluate(small_model(), data)
    assert set(m) == {"accuracy", "macro_f1", "span_f1", "n_instances"}
    assert m["n_instances"] == 6
    assert 0.0 <= m["accuracy"] <= 1.0
    with pytest.raises(ValueError):
        evaluate(small_model(), [])


def test_epoch_report_omits_wall_time_by_default():
    data = make_data(4, 4)
    res = train(data, small_model(), TrainConfig(learning_rate=1e-3, epochs=1), data)
    d = res.reports[0].to_json_dict()
    assert "wall_time" not in d
    assert "wall_time" in res.reports[0].to_json_dict(include_time=True)
