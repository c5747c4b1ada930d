"""Reachability-summary embedding trainer.

Consumes dense summary stacks (RTEN + .idx sidecar) produced by the
tile pipeline, trains a contractive convolutional autoencoder on them,
and writes per-tile embedding tables (REMB) back for rasterization.
"""

from .encode import encode_file, encode_tensors
from .errors import ConfigError, FormatError, ReachEmbError, TrainingError
from .formats import (
    read_index_sidecar,
    read_remb,
    read_rten,
    write_remb,
    write_rten,
)
from .jacobian import JacobianReport, check, jacobian_autodiff, jacobian_fd
from .model import (
    ContractiveAutoencoder,
    EncoderConfig,
    build_model,
    load_checkpoint,
    save_checkpoint,
)
from .train import (
    EpochStats,
    contractive_penalty,
    evaluate,
    load_training_tensors,
    to_network_input,
    train,
)

__all__ = [
    "ConfigError",
    "ContractiveAutoencoder",
    "EncoderConfig",
    "EpochStats",
    "FormatError",
    "JacobianReport",
    "ReachEmbError",
    "TrainingError",
    "build_model",
    "check",
    "contractive_penalty",
    "encode_file",
    "encode_tensors",
    "evaluate",
    "jacobian_autodiff",
    "jacobian_fd",
    "load_checkpoint",
    "load_training_tensors",
    "read_index_sidecar",
    "read_remb",
    "read_rten",
    "save_checkpoint",
    "to_network_input",
    "train",
    "write_remb",
    "write_rten",
]

__version__ = "0.1.0"
