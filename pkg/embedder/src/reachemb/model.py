"""Contractive convolutional autoencoder over reachability summaries.

The encoder is three conv/avg-pool blocks feeding a dense embedding
head; the decoder mirrors it with nearest-neighbor upsampling. Interior
activations are softplus so the embedding Jacobian is smooth enough to
cross-check against central finite differences; the head itself ends in
a ReLU, which is what keeps every emitted embedding component
non-negative. Weights are float64 throughout.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from .errors import ConfigError, FormatError

CHECKPOINT_FORMAT = 1


@dataclass(frozen=True)
class EncoderConfig:
    """Hyperparameters; defaults follow the trainer's CLI."""

    d_r: int = 16
    side: int = 25
    lam: float = 0.5
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    widths: tuple[int, int, int] = (16, 32, 64)

    def __post_init__(self) -> None:
        if self.d_r < 1:
            raise ConfigError("embedding dimension must be at least 1")
        if self.side < 1:
            raise ConfigError("summary side must be at least 1")
        if not (self.lam >= 0 and self.lam == self.lam and self.lam != float("inf")):
            raise ConfigError("contractive weight must be finite and non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be at least 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        widths = tuple(int(w) for w in self.widths)
        if len(widths) != 3 or any(w < 1 for w in widths):
            raise ConfigError("widths must be three positive channel counts")
        object.__setattr__(self, "widths", widths)


def _half(n: int) -> int:
    # ceil division by 2: AvgPool2d(2, ceil_mode=True) output size
    return (n - 1) // 2 + 1


class ContractiveAutoencoder(nn.Module):
    """Maps (batch, 2, side, side) log-space summaries to d_r embeddings."""

    def __init__(self, cfg: EncoderConfig) -> None:
        super().__init__()
        self.cfg = cfg
        w1, w2, w3 = cfg.widths
        s1 = _half(cfg.side)
        s2 = _half(s1)
        s3 = _half(s2)
        self._bottom = (w3, s3)
        self.encoder_conv = nn.Sequential(
            nn.Conv2d(2, w1, 3, padding=1),
            nn.Softplus(),
            nn.AvgPool2d(2, ceil_mode=True),
            nn.Conv2d(w1, w2, 3, padding=1),
            nn.Softplus(),
            nn.AvgPool2d(2, ceil_mode=True),
            nn.Conv2d(w2, w3, 3, padding=1),
            nn.Softplus(),
            nn.AvgPool2d(2, ceil_mode=True),
        )
        self.head = nn.Linear(w3 * s3 * s3, cfg.d_r)
        self.unhead = nn.Linear(cfg.d_r, w3 * s3 * s3)
        self.decoder_conv = nn.Sequential(
            nn.Upsample(size=(s2, s2)),
            nn.Conv2d(w3, w2, 3, padding=1),
            nn.Softplus(),
            nn.Upsample(size=(s1, s1)),
            nn.Conv2d(w2, w1, 3, padding=1),
            nn.Softplus(),
            nn.Upsample(size=(cfg.side, cfg.side)),
            nn.Conv2d(w1, 2, 3, padding=1),
        )
        # bias the ReLU head open: units that start dead stay dead under
        # the contractive penalty, and every tile must embed to signal
        nn.init.constant_(self.head.bias, 0.5)
        self.double()

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        z = self.encoder_conv(x)
        return torch.relu(self.head(z.flatten(1)))

    def decode(self, h: torch.Tensor) -> torch.Tensor:
        w3, s3 = self._bottom
        z = nn.functional.softplus(self.unhead(h)).view(-1, w3, s3, s3)
        return self.decoder_conv(z)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.encode(x)
        return h, self.decode(h)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def build_model(cfg: EncoderConfig) -> ContractiveAutoencoder:
    """Fresh model with seeded initialization."""
    torch.manual_seed(cfg.seed)
    return ContractiveAutoencoder(cfg)


def save_checkpoint(path: str, model: ContractiveAutoencoder) -> None:
    torch.save(
        {
            "format": CHECKPOINT_FORMAT,
            "config": asdict(model.cfg),
            "state": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path: str) -> tuple[ContractiveAutoencoder, EncoderConfig]:
    try:
        blob = torch.load(path, weights_only=True)
    except Exception as exc:
        raise FormatError(f"unreadable checkpoint {path!r}: {exc}") from exc
    if not isinstance(blob, dict) or blob.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"{path!r} is not a format-{CHECKPOINT_FORMAT} checkpoint")
    raw = dict(blob["config"])
    raw["widths"] = tuple(raw["widths"])
    cfg = EncoderConfig(**raw)
    model = ContractiveAutoencoder(cfg)
    model.load_state_dict(blob["state"])
    model.eval()
    return model, cfg
