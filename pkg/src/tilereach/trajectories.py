"""Trajectory datasets: parsing, normalization, filtering, synthesis.

A trajectory is one mover's chronological tile sequence. Two text formats
are read: a generic CSV `mover_id,epoch_seconds,lat,lon` (header optional)
and raw T-Drive lines `taxi_id,YYYY-MM-DD HH:MM:SS,longitude,latitude`
with longitude before latitude and timestamps in Beijing local time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import FormatError, ParameterError, TrajectoryError
from .geodesy import LatLon, TileCoord, haversine_m, latlon_to_tile, tile_centroid

TDRIVE_TZ = timezone(timedelta(hours=8))

FORMAT_GENERIC = "generic"
FORMAT_TDRIVE = "tdrive"

# Fraction of malformed lines above which the input is rejected outright.
MALFORMED_LIMIT = 0.5


@dataclass(frozen=True)
class Trajectory:
    """One mover's tile sequence with strictly increasing timestamps."""

    id: str
    q: int
    xs: np.ndarray  # uint32 tile x per record
    ys: np.ndarray  # uint32 tile y per record
    ts: np.ndarray  # int64 epoch seconds per record

    def __post_init__(self):
        xs = np.ascontiguousarray(self.xs, dtype=np.uint32)
        ys = np.ascontiguousarray(self.ys, dtype=np.uint32)
        ts = np.ascontiguousarray(self.ts, dtype=np.int64)
        if not (len(xs) == len(ys) == len(ts)):
            raise TrajectoryError(f"trajectory {self.id!r}: ragged arrays")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise TrajectoryError(f"trajectory {self.id!r}: timestamps not strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "_cum", None)

    def __len__(self) -> int:
        return len(self.ts)

    def tile(self, k: int) -> TileCoord:
        return TileCoord(self.q, int(self.xs[k]), int(self.ys[k]))

    def cumulative_m(self) -> np.ndarray:
        """Cumulative haversine meters along consecutive tile centroids.

        First entry is 0; entry k adds the centroid distance from record
        k-1 to record k. Cached after the first call.
        """
        if self._cum is not None:
            return self._cum
        n = len(self)
        out = np.zeros(n, np.float64)
        prev = tile_centroid(self.tile(0)) if n else None
        for k in range(1, n):
            cur = tile_centroid(self.tile(k))
            out[k] = out[k - 1] + haversine_m(prev, cur)
            prev = cur
        object.__setattr__(self, "_cum", out)
        return out

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.id == other.id
            and self.q == other.q
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
            and np.array_equal(self.ts, other.ts)
        )


@dataclass(frozen=True)
class ParseStats:
    """Bookkeeping from one parse pass."""

    lines: int = 0
    malformed: int = 0
    duplicates_dropped: int = 0
    bad_line_samples: tuple[int, ...] = ()


@dataclass(frozen=True)
class TrajectorySet:
    """An immutable collection of trajectories sharing one zoom.

    t0 and dt describe the observation window in epoch seconds; when not
    supplied they are derived from the data's time extent.
    """

    trajectories: tuple[Trajectory, ...]
    q: int
    t0: int
    dt: int
    stats: ParseStats = field(default_factory=ParseStats, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        for tr in self.trajectories:
            if tr.q != self.q:
                raise TrajectoryError(
                    f"trajectory {tr.id!r} at zoom {tr.q}, set at zoom {self.q}"
                )

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def record_count(self) -> int:
        return sum(len(t) for t in self.trajectories)


def _window(trajectories: Sequence[Trajectory], t0: int | None, dt: int | None) -> tuple[int, int]:
    if t0 is not None and dt is not None:
        return int(t0), int(dt)
    lo, hi = None, None
    for tr in trajectories:
        if len(tr) == 0:
            continue
        a, b = int(tr.ts[0]), int(tr.ts[-1])
        lo = a if lo is None else min(lo, a)
        hi = b if hi is None else max(hi, b)
    if lo is None:
        return int(t0 or 0), int(dt or 0)
    if t0 is None:
        t0 = lo
    if dt is None:
        dt = max(0, hi - int(t0))
    return int(t0), int(dt)


def make_set(
    trajectories: Iterable[Trajectory],
    q: int,
    t0: int | None = None,
    dt: int | None = None,
    stats: ParseStats | None = None,
) -> TrajectorySet:
    """Assemble a TrajectorySet, deriving the window when not given."""
    trs = tuple(trajectories)
    t0v, dtv = _window(trs, t0, dt)
    return TrajectorySet(trs, q, t0v, dtv, stats or ParseStats())


def _parse_generic_line(parts: list[str]) -> tuple[str, int, float, float]:
    mover = parts[0].strip()
    t = int(float(parts[1]))
    lat = float(parts[2])
    lon = float(parts[3])
    return mover, t, lat, lon


def _parse_tdrive_line(parts: list[str]) -> tuple[str, int, float, float]:
    mover = parts[0].strip()
    stamp = datetime.strptime(parts[1].strip(), "%Y-%m-%d %H:%M:%S")
    t = int(stamp.replace(tzinfo=TDRIVE_TZ).timestamp())
    lon = float(parts[2])
    lat = float(parts[3])
    return mover, t, lat, lon


def parse_csv(
    stream: Iterable[str],
    format: str = FORMAT_GENERIC,
    q: int = 24,
    t0: int | None = None,
    dt: int | None = None,
) -> TrajectorySet:
    """Parse trajectory CSV text into a zoom-q TrajectorySet.

    Records are grouped by mover, sorted by time, deduplicated on equal
    timestamps (first occurrence wins), and converted to tiles. Malformed
    lines are counted and skipped; if more than half the non-empty lines
    are malformed the input is rejected as a format error, citing sample
    line numbers.
    """
    if format not in (FORMAT_GENERIC, FORMAT_TDRIVE):
        raise ParameterError(f"unknown format {format!r}")
    line_parser = _parse_generic_line if format == FORMAT_GENERIC else _parse_tdrive_line
    by_mover: dict[str, list[tuple[int, float, float]]] = {}
    lines = 0
    malformed = 0
    bad_samples: list[int] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        lines += 1
        parts = line.split(",")
        try:
            if len(parts) != 4:
                raise ValueError("wrong field count")
            mover, t, lat, lon = line_parser(parts)
            if t < 0:
                raise ValueError("negative timestamp")
            if not (math.isfinite(lat) and math.isfinite(lon)):
                raise ValueError("non-finite coordinate")
        except (ValueError, OverflowError):
            if lines == 1 and format == FORMAT_GENERIC and not _numeric(parts[1] if len(parts) > 1 else ""):
                continue  # optional header row
            malformed += 1
            if len(bad_samples) < 5:
                bad_samples.append(lineno)
            continue
        by_mover.setdefault(mover, []).append((t, lat, lon))
    if lines and malformed / lines > MALFORMED_LIMIT:
        raise FormatError(
            f"{malformed}/{lines} lines malformed for format {format!r}; "
            f"sample line numbers {bad_samples}"
        )
    duplicates = 0
    trajectories = []
    for mover in sorted(by_mover):
        recs = sorted(by_mover[mover], key=lambda r: r[0])  # stable: ties keep input order
        xs, ys, ts = [], [], []
        last_t = None
        for t, lat, lon in recs:
            if t == last_t:
                duplicates += 1
                continue
            last_t = t
            tile = latlon_to_tile(LatLon(lat, lon), q)
            xs.append(tile.x)
            ys.append(tile.y)
            ts.append(t)
        if ts:
            trajectories.append(
                Trajectory(mover, q, np.array(xs, np.uint32), np.array(ys, np.uint32), np.array(ts, np.int64))
            )
    stats = ParseStats(lines, malformed, duplicates, tuple(bad_samples))
    return make_set(trajectories, q, t0, dt, stats)


def _numeric(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def preprocess_tdrive(s: TrajectorySet) -> TrajectorySet:
    """Split each mover's records by Beijing calendar day.

    Each non-empty (mover, day) pair becomes one trajectory with id
    `mover_yyyymmdd`. Total record count is conserved.
    """
    out = []
    for tr in s.trajectories:
        days: dict[str, list[int]] = {}
        for k in range(len(tr)):
            day = datetime.fromtimestamp(int(tr.ts[k]), TDRIVE_TZ).strftime("%Y%m%d")
            days.setdefault(day, []).append(k)
        for day in sorted(days):
            idx = np.array(days[day], np.intp)
            out.append(Trajectory(f"{tr.id}_{day}", tr.q, tr.xs[idx], tr.ys[idx], tr.ts[idx]))
    return make_set(out, s.q, s.t0, s.dt, s.stats)


def speed_threshold_predicate(max_mps: float = 50.0) -> Callable[[Trajectory, int], bool]:
    """Keep a record unless the segment reaching it implies speed > max_mps."""

    def keep(tr: Trajectory, k: int) -> bool:
        if k == 0:
            return True
        dd = haversine_m(tile_centroid(tr.tile(k - 1)), tile_centroid(tr.tile(k)))
        dt = float(tr.ts[k] - tr.ts[k - 1])
        return dd / dt <= max_mps

    return keep


def modality_filter(
    s: TrajectorySet, predicate: Callable[[Trajectory, int], bool] | None = None
) -> TrajectorySet:
    """Drop records failing the predicate; drop trajectories left empty.

    The predicate sees the whole trajectory plus the record index, so it
    can use local context (previous record, speed). None keeps everything.
    """
    if predicate is None:
        return s
    out = []
    for tr in s.trajectories:
        keep = [k for k in range(len(tr)) if predicate(tr, k)]
        if not keep:
            continue
        idx = np.array(keep, np.intp)
        out.append(Trajectory(tr.id, tr.q, tr.xs[idx], tr.ys[idx], tr.ts[idx]))
    return make_set(out, s.q, s.t0, s.dt, s.stats)


def synth_trajectories(
    seed: int,
    m: int,
    n_range: tuple[int, int],
    grid: tuple[int, int, int, int, int],
    model: str = "road-grid",
    t0: int = 1_200_000_000,
    step_s: int = 30,
) -> TrajectorySet:
    """Generate a reproducible synthetic TrajectorySet.

    grid is (q, x0, y0, width, height) in tile coordinates. The
    `road-grid` model walks a Manhattan lattice whose streets run every
    8 tiles, giving summaries a realistic sparse street texture; the
    `random-walk` model takes unconstrained king-move steps. Same seed,
    same arguments, identical output.
    """
    q, x0, y0, w, h = grid
    if w <= 0 or h <= 0:
        raise ParameterError(f"empty grid {grid!r}")
    if model not in ("road-grid", "random-walk"):
        raise ParameterError(f"unknown model {model!r}")
    n_lo, n_hi = n_range
    if n_lo < 1 or n_hi < n_lo:
        raise ParameterError(f"bad n_range {n_range!r}")
    rng = np.random.default_rng(seed)
    spacing = 8
    trajectories = []
    for i in range(m):
        n = int(rng.integers(n_lo, n_hi + 1))
        if model == "road-grid":
            xs, ys = _road_grid_walk(rng, n, w, h, spacing)
        else:
            xs, ys = _random_walk(rng, n, w, h)
        start = t0 + int(rng.integers(0, 86_400))
        ts = start + step_s * np.arange(n, dtype=np.int64)
        trajectories.append(
            Trajectory(
                f"synth{i:06d}",
                q,
                (x0 + xs).astype(np.uint32),
                (y0 + ys).astype(np.uint32),
                ts,
            )
        )
    return make_set(trajectories, q, t0, 2 * 86_400)


def _random_walk(rng, n: int, w: int, h: int) -> tuple[np.ndarray, np.ndarray]:
    x = int(rng.integers(0, w))
    y = int(rng.integers(0, h))
    xs = np.empty(n, np.int64)
    ys = np.empty(n, np.int64)
    for k in range(n):
        xs[k], ys[k] = x, y
        x = min(w - 1, max(0, x + int(rng.integers(-1, 2))))
        y = min(h - 1, max(0, y + int(rng.integers(-1, 2))))
    return xs, ys


def _road_grid_walk(rng, n: int, w: int, h: int, spacing: int) -> tuple[np.ndarray, np.ndarray]:
    """Walk along a lattice of streets spaced `spacing` tiles apart."""
    n_vx = max(1, w // spacing)  # vertical streets (fixed x)
    n_hy = max(1, h // spacing)
    x = int(rng.integers(0, n_vx)) * spacing
    y = int(rng.integers(0, n_hy)) * spacing
    horizontal = bool(rng.integers(0, 2))
    direction = 1 if rng.integers(0, 2) else -1
    xs = np.empty(n, np.int64)
    ys = np.empty(n, np.int64)
    for k in range(n):
        xs[k], ys[k] = x, y
        step = int(rng.integers(1, 4))
        if horizontal:
            x += direction * step
            if not 0 <= x < w:
                x = min(w - 1, max(0, x))
                direction = -direction
        else:
            y += direction * step
            if not 0 <= y < h:
                y = min(h - 1, max(0, y))
                direction = -direction
        # At an intersection the mover may turn onto the crossing street.
        if x % spacing == 0 and y % spacing == 0 and rng.random() < 0.4:
            horizontal = not horizontal
            direction = 1 if rng.integers(0, 2) else -1
    return xs, ys
