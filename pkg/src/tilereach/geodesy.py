"""Spherical geodesy and web-mercator tile math.

Positions are WGS84-style latitude/longitude degrees treated as points on
a sphere of mean radius ``EARTH_RADIUS_M``. Tiles follow the slippy-map
convention: at zoom q the world is a 2^q x 2^q grid, tile (0, 0) at the
northwest corner, x growing east and y growing south.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidCoordinateError, ParameterError, ZoomMismatchError

EARTH_RADIUS_M = 6_371_000.0

# Latitude bound of the square web-mercator domain.
MAX_MERCATOR_LAT = 85.05112878

MIN_ZOOM = 1
MAX_ZOOM = 30


def _check_zoom(q: int) -> None:
    if not isinstance(q, int) or isinstance(q, bool) or not MIN_ZOOM <= q <= MAX_ZOOM:
        raise ParameterError(f"zoom must be an integer in [{MIN_ZOOM}, {MAX_ZOOM}], got {q!r}")


@dataclass(frozen=True)
class LatLon:
    """A point on the sphere, latitude and longitude in degrees.

    Longitude is normalized into [-180, 180); latitude is clamped into
    [-90, 90]. Non-finite inputs are rejected.
    """

    lat: float
    lon: float

    def __post_init__(self):
        lat = float(self.lat)
        lon = float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise InvalidCoordinateError(f"non-finite coordinate ({self.lat!r}, {self.lon!r})")
        lat = min(90.0, max(-90.0, lat))
        lon = math.remainder(lon, 360.0)  # lands in [-180, 180]
        if lon == 180.0:
            lon = -180.0
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)


@dataclass(frozen=True, order=True)
class TileCoord:
    """A tile address (q, x, y) with 0 <= x, y < 2^q."""

    q: int
    x: int
    y: int

    def __post_init__(self):
        _check_zoom(self.q)
        n = 1 << self.q
        if not (0 <= self.x < n and 0 <= self.y < n):
            raise ParameterError(f"tile ({self.x}, {self.y}) outside [0, {n}) at zoom {self.q}")


def latlon_to_tile(p: LatLon, q: int) -> TileCoord:
    """Project a point to its containing tile at zoom q.

    Latitudes beyond the mercator domain are clamped to +/-85.05112878
    degrees rather than rejected, so polar GPS noise maps to the edge row.
    """
    _check_zoom(q)
    n = 1 << q
    lat = min(MAX_MERCATOR_LAT, max(-MAX_MERCATOR_LAT, p.lat))
    lat_rad = math.radians(lat)
    x = math.floor((p.lon + 180.0) / 360.0 * n)
    y = math.floor((1.0 - math.asinh(math.tan(lat_rad)) / math.pi) / 2.0 * n)
    # Floating error at the domain edges can land exactly on n.
    x = min(n - 1, max(0, x))
    y = min(n - 1, max(0, y))
    return TileCoord(q, x, y)


def tile_nw_corner(t: TileCoord) -> LatLon:
    """Latitude/longitude of a tile's northwest corner."""
    n = 1 << t.q
    lon = t.x / n * 360.0 - 180.0
    lat = math.degrees(math.atan(math.sinh(math.pi * (1.0 - 2.0 * t.y / n))))
    return LatLon(lat, lon)


def tile_centroid(t: TileCoord) -> LatLon:
    """Latitude/longitude of a tile's center point."""
    n = 1 << t.q
    lon = (t.x + 0.5) / n * 360.0 - 180.0
    lat = math.degrees(math.atan(math.sinh(math.pi * (1.0 - 2.0 * (t.y + 0.5) / n))))
    return LatLon(lat, lon)


def haversine_m(a: LatLon, b: LatLon) -> float:
    """Great-circle distance in meters on the mean-radius sphere."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    h = min(1.0, h)
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def initial_bearing_deg(a: LatLon, b: LatLon) -> float:
    """Initial great-circle bearing from a to b, degrees in [0, 360).

    0 is north, angles grow clockwise (90 is east).
    """
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dlam = math.radians(b.lon - a.lon)
    y = math.sin(dlam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    theta = math.degrees(math.atan2(y, x))
    return theta % 360.0


def tile_offset(s: TileCoord, s2: TileCoord) -> tuple[int, int]:
    """Signed grid offset (dx, dy) from s to s2 at a shared zoom."""
    if s.q != s2.q:
        raise ZoomMismatchError(f"cannot offset tiles at zooms {s.q} and {s2.q}")
    return (s2.x - s.x, s2.y - s.y)


def in_neighborhood(s: TileCoord, s2: TileCoord, delta_r: int) -> bool:
    """True when s2 lies within Chebyshev radius delta_r of s."""
    dx, dy = tile_offset(s, s2)
    return max(abs(dx), abs(dy)) <= delta_r


def tile_edge_m(q: int) -> float:
    """Tile edge length in meters at the equator for zoom q."""
    _check_zoom(q)
    return 2.0 * math.pi * EARTH_RADIUS_M / (1 << q)
