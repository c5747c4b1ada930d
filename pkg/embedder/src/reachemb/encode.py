"""Turn summary stacks into fixed-width embedding files."""

from __future__ import annotations

import numpy as np
import torch

from .errors import ConfigError, FormatError
from .formats import read_index_sidecar, read_rten, write_remb
from .model import ContractiveAutoencoder, load_checkpoint
from .train import to_network_input

# embeddings travel as float32; keep the cast in one place
_CHUNK = 256


def encode_tensors(model: ContractiveAutoencoder, tensors: np.ndarray) -> np.ndarray:
    """(N, L, L, 2) raw counts -> (N, d_R) float32 embeddings."""
    x = to_network_input(np.asarray(tensors, np.float64))
    model.eval()
    rows = []
    with torch.no_grad():
        for start in range(0, x.shape[0], _CHUNK):
            rows.append(model.encode(x[start : start + _CHUNK]).numpy())
    return np.concatenate(rows, axis=0).astype(np.float32)


def encode_file(ckpt_path: str, tensors_path: str, out_path: str) -> int:
    """Checkpoint + tensor stack + index sidecar -> embedding file.

    Returns the number of embeddings written.
    """
    model, cfg = load_checkpoint(ckpt_path)
    tensors = read_rten(tensors_path)
    if tensors.ndim != 4 or tensors.shape[3] != 2:
        raise ConfigError(f"expected an (N, L, L, 2) tensor, got {tensors.shape}")
    if tensors.shape[1] != cfg.side or tensors.shape[2] != cfg.side:
        raise ConfigError(
            f"summary side {tensors.shape[1]} does not match checkpoint side {cfg.side}"
        )
    nodes = read_index_sidecar(tensors_path + ".idx")
    if len(nodes) != tensors.shape[0]:
        raise FormatError(
            f"index sidecar lists {len(nodes)} tiles but the stack holds {tensors.shape[0]}"
        )
    vectors = encode_tensors(model, tensors)
    write_remb(out_path, nodes, vectors)
    return vectors.shape[0]
