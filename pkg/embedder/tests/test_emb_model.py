"""Architecture, config validation, and checkpoint persistence."""

import math

import pytest
import torch

from reachemb import (
    ContractiveAutoencoder,
    EncoderConfig,
    build_model,
    load_checkpoint,
    save_checkpoint,
)
from reachemb.errors import ConfigError, FormatError

SMALL = dict(d_r=4, side=9, widths=(4, 8, 8))


def small_cfg(**kw):
    merged = {**SMALL, **kw}
    return EncoderConfig(**merged)


@pytest.mark.parametrize(
    "kw",
    [
        dict(d_r=0),
        dict(side=0),
        dict(lam=-0.5),
        dict(lam=math.nan),
        dict(lam=math.inf),
        dict(epochs=0),
        dict(batch_size=0),
        dict(learning_rate=0.0),
        dict(widths=(4, 8)),
        dict(widths=(4, 0, 8)),
    ],
)
def test_config_rejects(kw):
    with pytest.raises(ConfigError):
        small_cfg(**kw)


def test_config_defaults():
    cfg = EncoderConfig()
    assert cfg.d_r == 16
    assert cfg.side == 25
    assert cfg.lam == 0.5
    assert cfg.batch_size == 64
    assert cfg.learning_rate == 1e-3


def test_forward_shapes():
    cfg = small_cfg()
    model = build_model(cfg)
    x = torch.zeros((3, 2, 9, 9), dtype=torch.float64)
    h, r = model(x)
    assert h.shape == (3, 4)
    assert r.shape == (3, 2, 9, 9)


def test_even_side_shapes():
    cfg = small_cfg(side=8)
    model = build_model(cfg)
    x = torch.zeros((2, 2, 8, 8), dtype=torch.float64)
    h, r = model(x)
    assert h.shape == (2, 4)
    assert r.shape == (2, 2, 8, 8)


def test_embeddings_non_negative():
    model = build_model(small_cfg(seed=11))
    gen = torch.Generator().manual_seed(1)
    x = torch.randn((20, 2, 9, 9), generator=gen).double()
    with torch.no_grad():
        h = model.encode(x)
    assert float(h.min()) >= 0.0


def test_weights_are_float64():
    model = build_model(small_cfg())
    assert all(p.dtype == torch.float64 for p in model.parameters())


def test_seeded_rebuild_is_identical():
    a = build_model(small_cfg(seed=7))
    b = build_model(small_cfg(seed=7))
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)


def test_different_seeds_differ():
    a = build_model(small_cfg(seed=7))
    b = build_model(small_cfg(seed=8))
    assert any(not torch.equal(pa, pb) for pa, pb in zip(a.parameters(), b.parameters()))


def test_parameter_count():
    model = build_model(small_cfg())
    counted = sum(p.numel() for p in model.parameters())
    assert model.parameter_count() == counted > 0


def test_checkpoint_roundtrip(tmp_path):
    path = str(tmp_path / "m.ckpt")
    model = build_model(small_cfg(seed=3))
    save_checkpoint(path, model)
    loaded, cfg = load_checkpoint(path)
    assert cfg == model.cfg
    assert not loaded.training
    for pa, pb in zip(model.parameters(), loaded.parameters()):
        assert torch.equal(pa, pb)


def test_checkpoint_encode_matches(tmp_path):
    path = str(tmp_path / "m.ckpt")
    model = build_model(small_cfg(seed=3))
    save_checkpoint(path, model)
    loaded, _ = load_checkpoint(path)
    gen = torch.Generator().manual_seed(2)
    x = torch.rand((5, 2, 9, 9), generator=gen, dtype=torch.float64)
    assert torch.equal(model.encode(x), loaded.encode(x))


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "m.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(FormatError):
        load_checkpoint(str(path))


def test_load_rejects_wrong_format_tag(tmp_path):
    path = str(tmp_path / "m.ckpt")
    torch.save({"format": 99, "config": {}, "state": {}}, path)
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_widths_coerced_to_ints():
    cfg = EncoderConfig(d_r=2, side=5, widths=[4.0, 8.0, 8.0])
    assert cfg.widths == (4, 8, 8)
    assert all(isinstance(w, int) for w in cfg.widths)


def test_model_class_direct_construction():
    model = ContractiveAutoencoder(small_cfg())
    assert model.cfg.side == 9
