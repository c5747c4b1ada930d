"""Training loop with an exact contractive penalty.

Summaries enter the network log-normalized (x' = ln(1+psi)) and the
decoder's log-space output r is mapped back through exp(r)-1 before the
reconstruction loss, so the heavy-tailed raw counts never hit the
weights directly. The contractive term is the exact squared Frobenius
norm of the embedding's Jacobian with respect to the network input,
assembled one embedding component at a time.

Per-sample losses:
    L_rec = sum((psi - (exp(r)-1))^2)
    L_con = sum_i ||d h_i / d x'||^2
    total = L_rec + lambda * L_con
Epoch rows report the dataset mean of each term, so the logged total
always equals rec + lambda * con.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .errors import ConfigError, TrainingError
from .formats import read_rten
from .model import ContractiveAutoencoder, EncoderConfig, build_model


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    rec: float
    con: float
    total: float


def load_training_tensors(path: str, cfg: EncoderConfig | None = None) -> np.ndarray:
    """Read an (N, L, L, 2) stack and validate it against the config."""
    tensors = read_rten(path)
    if tensors.ndim != 4 or tensors.shape[3] != 2 or tensors.shape[1] != tensors.shape[2]:
        raise ConfigError(f"expected an (N, L, L, 2) tensor, got {tensors.shape}")
    if tensors.shape[0] < 1:
        raise ConfigError("tensor stack is empty")
    if cfg is not None and tensors.shape[1] != cfg.side:
        raise ConfigError(
            f"summary side {tensors.shape[1]} does not match configured side {cfg.side}"
        )
    if np.min(tensors) < 0:
        raise TrainingError("summaries must be non-negative")
    return np.asarray(tensors, np.float64)


def to_network_input(tensors: np.ndarray) -> torch.Tensor:
    """(N, L, L, 2) raw counts -> (N, 2, L, L) log-normalized float64."""
    logged = np.log1p(tensors)
    return torch.from_numpy(logged).permute(0, 3, 1, 2).contiguous()


def contractive_penalty(
    model: ContractiveAutoencoder, x: torch.Tensor, create_graph: bool = False
) -> torch.Tensor:
    """Mean over the batch of sum_i ||grad of h_i wrt the input||^2."""
    x = x.detach().requires_grad_(True)
    h = model.encode(x)
    total = x.new_zeros(())
    for i in range(h.shape[1]):
        (grad,) = torch.autograd.grad(
            h[:, i].sum(), x, create_graph=create_graph, retain_graph=True
        )
        total = total + (grad * grad).sum()
    return total / x.shape[0]


def _batch_losses(
    model: ContractiveAutoencoder,
    x: torch.Tensor,
    psi: torch.Tensor,
    create_graph: bool,
) -> tuple[torch.Tensor, torch.Tensor]:
    x = x.detach().requires_grad_(True)
    h = model.encode(x)
    r = model.decode(h)
    rec = ((psi - torch.expm1(r)) ** 2).sum() / x.shape[0]
    con = x.new_zeros(())
    for i in range(h.shape[1]):
        (grad,) = torch.autograd.grad(
            h[:, i].sum(), x, create_graph=create_graph, retain_graph=True
        )
        con = con + (grad * grad).sum()
    return rec, con / x.shape[0]


def evaluate(
    model: ContractiveAutoencoder, tensors: np.ndarray, lam: float
) -> EpochStats:
    """Loss terms over a whole dataset without touching the weights."""
    x = to_network_input(tensors)
    psi = torch.from_numpy(tensors).permute(0, 3, 1, 2).contiguous()
    rec_sum = 0.0
    con_sum = 0.0
    for start in range(0, x.shape[0], 256):
        xb = x[start : start + 256]
        pb = psi[start : start + 256]
        rec, con = _batch_losses(model, xb, pb, create_graph=False)
        rec_sum += float(rec.detach()) * xb.shape[0]
        con_sum += float(con.detach()) * xb.shape[0]
    rec = rec_sum / x.shape[0]
    con = con_sum / x.shape[0]
    return EpochStats(0, rec, con, rec + lam * con)


def train(
    tensors: np.ndarray, cfg: EncoderConfig
) -> tuple[ContractiveAutoencoder, list[EpochStats]]:
    """Fit the autoencoder; returns the model and the per-epoch loss curve.

    Row 0 of the curve is the untrained model evaluated on the data, so
    improvement is always measured against a logged baseline.
    """
    if tensors.ndim != 4 or tensors.shape[1] != cfg.side or tensors.shape[3] != 2:
        raise ConfigError(
            f"tensor stack {tensors.shape} does not match side {cfg.side}"
        )
    if np.min(tensors) < 0:
        raise TrainingError("summaries must be non-negative")
    model = build_model(cfg)
    x_all = to_network_input(tensors)
    psi_all = torch.from_numpy(np.asarray(tensors, np.float64)).permute(0, 3, 1, 2).contiguous()
    n = x_all.shape[0]
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    order_rng = torch.Generator().manual_seed(cfg.seed)
    log = [evaluate(model, tensors, cfg.lam)]
    for epoch in range(1, cfg.epochs + 1):
        order = torch.randperm(n, generator=order_rng)
        rec_sum = 0.0
        con_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            rec, con = _batch_losses(
                model, x_all[idx], psi_all[idx], create_graph=True
            )
            loss = rec + cfg.lam * con
            if not math.isfinite(float(loss.detach())):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}: "
                    f"rec={float(rec.detach())!r} con={float(con.detach())!r} "
                    f"lr={cfg.learning_rate}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            rec_sum += float(rec.detach()) * idx.shape[0]
            con_sum += float(con.detach()) * idx.shape[0]
        rec = rec_sum / n
        con = con_sum / n
        log.append(EpochStats(epoch, rec, con, rec + cfg.lam * con))
    model.eval()
    return model, log
