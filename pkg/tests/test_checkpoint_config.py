import numpy as np
import pytest

from sagcn.config import dump_config, parse_config
from sagcn.model import ConfigError, ModelConfig
from sagcn.nn import checkpoint as ckpt
from sagcn.train import TrainConfig


def test_checkpoint_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    records = {"a": rng.normal(size=(3, 4)), "b.c": np.array([[np.pi, -0.0, 1e-300]])}
    path = tmp_path / "x.ckpt"
    ckpt.save(path, records, {"note": "hi", "n": [1, 2]})
    back, meta = ckpt.load(path)
    assert meta == {"note": "hi", "n": [1, 2]}
    assert list(back) == ["a", "b.c"]
    for k in records:
        assert back[k].tobytes() == records[k].tobytes()


def test_checkpoint_bytes_are_deterministic():
    records = {"w": np.arange(6.0).reshape(2, 3)}
    assert ckpt.dumps(records, {"z": 1, "a": 2}) == ckpt.dumps(records, {"a": 2, "z": 1})


def test_checkpoint_detects_corruption():
    blob = bytearray(ckpt.dumps({"w": np.ones((2, 2))}))
    blob[len(blob) // 2] ^= 0xFF
    with pytest.raises(ckpt.CheckpointError):
        ckpt.loads(bytes(blob))


def test_checkpoint_rejects_truncation_and_bad_magic():
    blob = ckpt.dumps({"w": np.ones((2, 2))})
    with pytest.raises(ckpt.CheckpointError):
        ckpt.loads(blob[:-5])
    with pytest.raises(ckpt.CheckpointError):
        ckpt.loads(b"NOTACKPT" + blob[8:])


def test_checkpoint_version_mismatch():
    blob = bytearray(ckpt.dumps({"w": np.ones((1, 1))}))
    magic = len(ckpt.MAGIC)
    blob[magic : magic + 4] = (ckpt.VERSION + 1).to_bytes(4, "little")
    with pytest.raises(ckpt.CheckpointVersionError):
        ckpt.loads(bytes(blob))


def test_parse_config_types_and_aliases():
    text = """
    # comment
    d_B = 16
    topk_mode = head_dependent
    literal_mask_softmax = true
    lr = 0.003   # inline comment
    lambda = 1e-4
    epochs = 7
    """
    model, train = parse_config(text)
    assert model == {"d_B": 16, "topk_mode": "head_dependent", "literal_mask_softmax": True}
    assert train == {"learning_rate": 0.003, "l2": 1e-4, "epochs": 7}


def test_parse_config_accepts_section_header():
    model, train = parse_config("[run]\nk = 4\nseed = 2\n")
    assert model == {"k": 4} and train == {"seed": 2}


@pytest.mark.parametrize("text", ["bogus = 1\n", "k = three\n", "normalize = maybe\n", "no equals sign\n"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_dump_config_roundtrip():
    m = ModelConfig(k=5, topk_mode="off", dropout=0.25)
    t = TrainConfig(learning_rate=0.02, epochs=3, alpha=0.1)
    model_kw, train_kw = parse_config(dump_config(m, t))
    assert ModelConfig(**model_kw) == m
    assert TrainConfig(**train_kw) == t
