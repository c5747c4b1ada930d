"""Exception types for the embedding trainer."""


class ReachEmbError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(ReachEmbError):
    """Invalid hyperparameter or shape configuration."""


class FormatError(ReachEmbError):
    """Malformed tensor, sidecar, or embedding file."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class TrainingError(ReachEmbError):
    """Training diverged or was fed unusable data."""
