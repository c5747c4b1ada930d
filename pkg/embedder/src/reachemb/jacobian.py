"""Finite-difference cross-check of the contractive penalty's Jacobian.

The penalty is only as trustworthy as the autograd Jacobian it sums, so
this module rebuilds that Jacobian two ways: exactly (one backward pass
per embedding component) and numerically (central differences on the
log-normalized input). Entries are compared with a guarded relative
error so near-zero entries don't blow up the ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import ConfigError
from .model import ContractiveAutoencoder

DEFAULT_STEP = 1e-4
DEFAULT_TOLERANCE = 1e-3
_GUARD = 1e-8


@dataclass(frozen=True)
class JacobianReport:
    max_rel_error: float
    mean_rel_error: float
    entries: int
    step: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_rel_error < self.tolerance

    def to_lines(self) -> list[str]:
        verdict = "pass" if self.ok else "fail"
        return [
            f"jacobian check: {verdict}",
            f"entries={self.entries}",
            f"step={self.step:g}",
            f"max_rel_error={self.max_rel_error:.6e}",
            f"mean_rel_error={self.mean_rel_error:.6e}",
            f"tolerance={self.tolerance:g}",
        ]


def jacobian_autodiff(model: ContractiveAutoencoder, x: torch.Tensor) -> np.ndarray:
    """Exact (d_R, input_size) Jacobian of the embedding at one input.

    x is a single log-normalized sample shaped (2, L, L).
    """
    if x.dim() != 3:
        raise ConfigError(f"expected a single (2, L, L) sample, got shape {tuple(x.shape)}")
    xb = x.unsqueeze(0).detach().double().requires_grad_(True)
    h = model.encode(xb)
    rows = []
    for i in range(h.shape[1]):
        (grad,) = torch.autograd.grad(h[0, i], xb, retain_graph=True)
        rows.append(grad.reshape(-1).numpy().copy())
    return np.stack(rows, axis=0)


def jacobian_fd(
    model: ContractiveAutoencoder, x: torch.Tensor, step: float = DEFAULT_STEP
) -> np.ndarray:
    """Central-difference Jacobian, one forward pair per input entry."""
    if step <= 0:
        raise ConfigError("step must be positive")
    flat = x.detach().double().reshape(-1)
    size = flat.shape[0]
    shape = x.shape
    cols = []
    with torch.no_grad():
        for j in range(size):
            plus = flat.clone()
            plus[j] += step
            minus = flat.clone()
            minus[j] -= step
            h_plus = model.encode(plus.reshape(1, *shape))
            h_minus = model.encode(minus.reshape(1, *shape))
            cols.append(((h_plus - h_minus) / (2.0 * step))[0].numpy().copy())
    return np.stack(cols, axis=1)


def check(
    model: ContractiveAutoencoder,
    x: torch.Tensor,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> JacobianReport:
    """Compare the two Jacobians entry-wise at a single input sample."""
    exact = jacobian_autodiff(model, x)
    approx = jacobian_fd(model, x, step)
    denom = np.maximum(np.maximum(np.abs(exact), np.abs(approx)), _GUARD)
    rel = np.abs(exact - approx) / denom
    return JacobianReport(
        max_rel_error=float(np.max(rel)),
        mean_rel_error=float(np.mean(rel)),
        entries=int(rel.size),
        step=step,
        tolerance=tolerance,
    )
