"""Image-like raster windows derived from trajectories and road data.

A raster window covers a rectangle of tiles: pixel (row, col) is the tile
(origin.x + col, origin.y + row). Builders produce occupancy counts
(crm), heading-bucketed counts (hcrm), speed-bucketed counts (sc), a
binary road-network plane (rnp), and per-tile embedding planes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FormatError, ParameterError, WindowError, ZoomMismatchError
from .formats import atomic_write, read_rten, write_rten
from .geodesy import (
    LatLon,
    TileCoord,
    haversine_m,
    initial_bearing_deg,
    latlon_to_tile,
    tile_centroid,
)
from .trajectories import TrajectorySet

MPH_PER_MPS = 2.2369362921

HEADING_BUCKETS = 12
HEADING_BUCKET_DEG = 30.0
SPEED_BUCKETS = 14
SPEED_BUCKET_MPH = 5.0

DEFAULT_WINDOW_SIZE = 256


@dataclass(frozen=True)
class Window:
    """A rectangle of tiles: origin is the northwest corner."""

    origin: TileCoord
    h: int = DEFAULT_WINDOW_SIZE
    w: int = DEFAULT_WINDOW_SIZE

    def __post_init__(self):
        if self.h < 1 or self.w < 1:
            raise WindowError(f"window must be at least 1x1, got {self.h}x{self.w}")
        n = 1 << self.origin.q
        if self.origin.x + self.w > n or self.origin.y + self.h > n:
            raise WindowError("window extends past the tile grid edge")

    @property
    def q(self) -> int:
        return self.origin.q

    def contains(self, x: int, y: int) -> bool:
        return (
            self.origin.x <= x < self.origin.x + self.w
            and self.origin.y <= y < self.origin.y + self.h
        )


@dataclass(eq=False)
class RasterWindow:
    """A window plus its h x w x c data plane stack."""

    window: Window
    data: np.ndarray
    channel_names: tuple[str, ...]

    def __post_init__(self):
        self.data = np.asarray(self.data, np.float64)
        if self.data.shape != (self.window.h, self.window.w, len(self.channel_names)):
            raise WindowError(
                f"data shape {self.data.shape} does not match window "
                f"{self.window.h}x{self.window.w} with {len(self.channel_names)} channels"
            )
        self.channel_names = tuple(self.channel_names)

    @property
    def c(self) -> int:
        return self.data.shape[2]


def _check_zoom(s: TrajectorySet, window: Window) -> None:
    if len(s) and s.q != window.q:
        raise ZoomMismatchError(f"set at zoom {s.q}, window at zoom {window.q}")


def crm(s: TrajectorySet, window: Window) -> RasterWindow:
    """Record-count raster: pixel = number of GPS records in that tile."""
    _check_zoom(s, window)
    data = np.zeros((window.h, window.w, 1), np.float64)
    x0, y0 = window.origin.x, window.origin.y
    for tr in s:
        for k in range(len(tr)):
            x, y = int(tr.xs[k]), int(tr.ys[k])
            if window.contains(x, y):
                data[y - y0, x - x0, 0] += 1.0
    return RasterWindow(window, data, ("crm",))


def heading_bucket(bearing_deg: float) -> int:
    """Bucket index for a bearing: 12 buckets of 30 degrees from north."""
    b = int(bearing_deg % 360.0 // HEADING_BUCKET_DEG)
    return min(b, HEADING_BUCKETS - 1)


def speed_bucket(mph: float) -> int:
    """Bucket index for a speed: 14 buckets of 5 mph, last one open-ended."""
    if mph < 0:
        raise ParameterError(f"negative speed {mph}")
    return min(int(mph // SPEED_BUCKET_MPH), SPEED_BUCKETS - 1)


def hcrm(s: TrajectorySet, window: Window) -> RasterWindow:
    """Heading-bucketed record counts.

    A record's heading is the initial bearing from the previous record's
    tile centroid to its own. First records and records in the same tile
    as their predecessor have no heading and are skipped.
    """
    _check_zoom(s, window)
    data = np.zeros((window.h, window.w, HEADING_BUCKETS), np.float64)
    x0, y0 = window.origin.x, window.origin.y
    for tr in s:
        for k in range(1, len(tr)):
            x, y = int(tr.xs[k]), int(tr.ys[k])
            px, py = int(tr.xs[k - 1]), int(tr.ys[k - 1])
            if (x, y) == (px, py) or not window.contains(x, y):
                continue
            bearing = initial_bearing_deg(
                tile_centroid(TileCoord(s.q, px, py)), tile_centroid(TileCoord(s.q, x, y))
            )
            data[y - y0, x - x0, heading_bucket(bearing)] += 1.0
    names = tuple(f"hcrm_{int(i * HEADING_BUCKET_DEG):03d}" for i in range(HEADING_BUCKETS))
    return RasterWindow(window, data, names)


def sc(s: TrajectorySet, window: Window) -> RasterWindow:
    """Speed-bucketed record counts.

    A record's speed is centroid distance to the previous record divided
    by elapsed time, in mph. First records are skipped; stationary
    records (same tile) count as 0 mph in bucket 0.
    """
    _check_zoom(s, window)
    data = np.zeros((window.h, window.w, SPEED_BUCKETS), np.float64)
    x0, y0 = window.origin.x, window.origin.y
    for tr in s:
        for k in range(1, len(tr)):
            x, y = int(tr.xs[k]), int(tr.ys[k])
            if not window.contains(x, y):
                continue
            dd = haversine_m(
                tile_centroid(tr.tile(k - 1)), tile_centroid(tr.tile(k))
            )
            dt = float(tr.ts[k] - tr.ts[k - 1])
            mph = dd / dt * MPH_PER_MPS
            data[y - y0, x - x0, speed_bucket(mph)] += 1.0
    names = tuple(f"sc_{int(i * SPEED_BUCKET_MPH):02d}mph" for i in range(SPEED_BUCKETS))
    return RasterWindow(window, data, names)


def supercover_line(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Every grid cell touched by the segment between two cell centers.

    Corner crossings include both side cells (a touch counts), so the
    result covers the closed segment, not just a Bresenham walk. Cells
    are listed in traversal order without repeats.
    """
    cells = [(x0, y0)]
    seen = {(x0, y0)}

    def visit(cx, cy):
        if (cx, cy) not in seen:
            seen.add((cx, cy))
            cells.append((cx, cy))

    nx, ny = abs(x1 - x0), abs(y1 - y0)
    sx = 1 if x1 > x0 else -1
    sy = 1 if y1 > y0 else -1
    x, y = x0, y0
    ix = iy = 0
    while ix < nx or iy < ny:
        decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx
        if decision == 0:
            # Exact corner crossing: the segment touches both side cells.
            visit(x + sx, y)
            visit(x, y + sy)
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif decision < 0:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        visit(x, y)
    return cells


def rnp(roads: Sequence[Sequence[LatLon]], window: Window) -> RasterWindow:
    """Binary road-network plane: 1 where any road segment passes."""
    data = np.zeros((window.h, window.w, 1), np.float64)
    x0, y0 = window.origin.x, window.origin.y
    for line in roads:
        tiles = [latlon_to_tile(p, window.q) for p in line]
        for a, b in zip(tiles, tiles[1:]):
            for x, y in supercover_line(a.x, a.y, b.x, b.y):
                if window.contains(x, y):
                    data[y - y0, x - x0, 0] = 1.0
        if len(tiles) == 1 and window.contains(tiles[0].x, tiles[0].y):
            data[tiles[0].y - y0, tiles[0].x - x0, 0] = 1.0
    return RasterWindow(window, data, ("rnp",))


def embedding_raster(
    embeddings: Mapping[tuple[int, int], np.ndarray] | tuple,
    window: Window,
    d_r: int,
) -> RasterWindow:
    """Scatter per-tile embedding vectors; inactive pixels stay zero."""
    if not isinstance(embeddings, Mapping):
        nodes, vectors = embeddings
        embeddings = {tuple(n): vectors[i] for i, n in enumerate(nodes)}
    data = np.zeros((window.h, window.w, d_r), np.float64)
    x0, y0 = window.origin.x, window.origin.y
    for (x, y), vec in embeddings.items():
        vec = np.asarray(vec, np.float64)
        if vec.shape != (d_r,):
            raise ParameterError(
                f"embedding for tile ({x}, {y}) has shape {vec.shape}, expected ({d_r},)"
            )
        if window.contains(x, y):
            data[y - y0, x - x0, :] = vec
    names = tuple(f"emb_{i:02d}" for i in range(d_r))
    return RasterWindow(window, data, names)


def log_normalize(rw: RasterWindow) -> RasterWindow:
    """Elementwise ln(1 + x); requires non-negative data."""
    if np.any(rw.data < 0):
        raise ParameterError("log_normalize requires non-negative data")
    return RasterWindow(rw.window, np.log1p(rw.data), rw.channel_names)


def fuse_channels(rasters: Sequence[RasterWindow]) -> RasterWindow:
    """Concatenate rasters along the channel axis (early fusion)."""
    if not rasters:
        raise ParameterError("fuse_channels needs at least one raster")
    first = rasters[0]
    for rw in rasters[1:]:
        if rw.window != first.window:
            raise WindowError(f"window mismatch: {rw.window} vs {first.window}")
    data = np.concatenate([rw.data for rw in rasters], axis=2)
    names = tuple(n for rw in rasters for n in rw.channel_names)
    return RasterWindow(first.window, data, names)


_LINESTRING = re.compile(r"^\s*LINESTRING\s*\(\s*(.*?)\s*\)\s*$", re.IGNORECASE)


def parse_linestrings(stream: Iterable[str]) -> list[list[LatLon]]:
    """Parse `LINESTRING(lon lat, lon lat, ...)` lines (WKT axis order)."""
    roads = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        m = _LINESTRING.match(line)
        if not m:
            raise FormatError(f"line {lineno}: not a LINESTRING: {line[:60]!r}")
        points = []
        for pair in m.group(1).split(","):
            parts = pair.split()
            if len(parts) != 2:
                raise FormatError(f"line {lineno}: bad coordinate pair {pair!r}")
            try:
                lon, lat = float(parts[0]), float(parts[1])
            except ValueError:
                raise FormatError(f"line {lineno}: bad coordinate pair {pair!r}")
            points.append(LatLon(lat, lon))
        if points:
            roads.append(points)
    return roads


def write_raster(path: str, rw: RasterWindow, dtype: str = "f64") -> None:
    """Write a raster as RTEN plus a `.meta` sidecar with window info."""
    write_rten(path, rw.data, dtype=dtype)
    meta = (
        f"origin_x={rw.window.origin.x}\n"
        f"origin_y={rw.window.origin.y}\n"
        f"q={rw.window.q}\n"
        f"channels={','.join(rw.channel_names)}\n"
    )
    atomic_write(path + ".meta", meta.encode("ascii"))


def read_raster(path: str) -> RasterWindow:
    """Inverse of write_raster."""
    data = read_rten(path)
    if data.ndim != 3:
        raise FormatError(f"raster tensor must be 3-D, got shape {data.shape}")
    fields = {}
    with open(path + ".meta", "r", encoding="ascii") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            fields[key] = value
    try:
        origin = TileCoord(int(fields["q"]), int(fields["origin_x"]), int(fields["origin_y"]))
        names = tuple(fields["channels"].split(","))
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad raster sidecar {path + '.meta'}: {e}") from e
    window = Window(origin, data.shape[0], data.shape[1])
    return RasterWindow(window, np.asarray(data, np.float64), names)
