"""Jacobian cross-checks: autodiff vs finite differences vs analytics."""

import numpy as np
import pytest
import torch
from torch import nn

from reachemb import EncoderConfig, build_model, check, jacobian_autodiff, jacobian_fd
from reachemb.errors import ConfigError
from reachemb.train import contractive_penalty

SIDE = 7


def small_model(seed=0):
    return build_model(
        EncoderConfig(d_r=3, side=SIDE, seed=seed, widths=(3, 4, 6))
    )


def sample(seed=0):
    gen = torch.Generator().manual_seed(seed)
    raw = torch.rand((SIDE, SIDE, 2), generator=gen, dtype=torch.float64)
    return torch.log1p(4.0 * raw).permute(2, 0, 1).contiguous()


def test_autodiff_matches_finite_differences():
    model = small_model(seed=1)
    report = check(model, sample(3))
    assert report.entries == 3 * 2 * SIDE * SIDE
    assert report.ok
    assert report.max_rel_error < 1e-3


def test_check_respects_tolerance():
    model = small_model(seed=1)
    report = check(model, sample(3), tolerance=0.0)
    assert not report.ok


def test_report_lines():
    report = check(small_model(seed=2), sample(4))
    lines = report.to_lines()
    assert lines[0] == "jacobian check: pass"
    assert any(line.startswith("max_rel_error=") for line in lines)


def test_fd_step_must_be_positive():
    with pytest.raises(ConfigError):
        jacobian_fd(small_model(), sample(), step=0.0)


def test_autodiff_requires_single_sample():
    with pytest.raises(ConfigError):
        jacobian_autodiff(small_model(), torch.zeros((2, 2, SIDE, SIDE)).double())


class _LinearEncoder(nn.Module):
    """h = W x' with no bias: the analytic contractive case."""

    def __init__(self, w):
        super().__init__()
        self.w = nn.Parameter(torch.as_tensor(w, dtype=torch.float64))

    def encode(self, x):
        return x.flatten(1) @ self.w.T


def test_linear_encoder_jacobian_is_weight_matrix():
    rng = np.random.default_rng(5)
    w = rng.normal(size=(3, 2 * SIDE * SIDE))
    model = _LinearEncoder(w)
    jac = jacobian_autodiff(model, sample(6))
    assert np.allclose(jac, w, rtol=1e-12, atol=1e-12)


def test_linear_encoder_penalty_is_squared_frobenius_norm():
    rng = np.random.default_rng(7)
    w = rng.normal(size=(4, 2 * SIDE * SIDE))
    model = _LinearEncoder(w)
    expected = float(np.sum(w * w))
    for seed in (1, 2):
        x = torch.stack([sample(seed), sample(seed + 10)])
        penalty = float(contractive_penalty(model, x))
        # input-independent for a linear map
        assert penalty == pytest.approx(expected, rel=1e-12)


def test_zero_weights_give_zero_penalty():
    model = small_model(seed=3)
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
    x = torch.stack([sample(8), sample(9)])
    assert float(contractive_penalty(model, x)) == 0.0
    assert np.all(jacobian_autodiff(model, sample(8)) == 0.0)


def test_fd_jacobian_shape():
    model = small_model(seed=4)
    jac = jacobian_fd(model, sample(5))
    assert jac.shape == (3, 2 * SIDE * SIDE)
