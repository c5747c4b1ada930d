"""Exception types raised across the package."""


class TileReachError(Exception):
    """Base class for all errors raised by this package."""


class InvalidCoordinateError(TileReachError):
    """A latitude/longitude value is non-finite or otherwise unusable."""


class ParameterError(TileReachError):
    """A parameter is outside its documented domain (zoom, radius, sigma...)."""


class ZoomMismatchError(TileReachError):
    """Two tiles or structures at different zoom levels were combined."""


class NeighborhoodError(TileReachError):
    """A tile offset falls outside the requested Chebyshev neighborhood."""


class TrajectoryError(TileReachError):
    """A trajectory violates its invariants (time order, length, zoom)."""


class FormatError(TileReachError):
    """A binary or text input does not match its documented layout.

    Carries the byte offset (or line number) at which decoding failed
    when that is known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class MatrixSizeError(TileReachError):
    """The active-node set is too large for a dense transition matrix."""


class WindowError(TileReachError):
    """A raster window is degenerate or incompatible with its inputs."""
