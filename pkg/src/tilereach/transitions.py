"""Transition contributions between tiles of a trajectory.

A summary for node s is an L x L x 2 neighborhood tensor, L = 2*delta_r + 1.
Channel 0 counts emissions (transitions arriving at s), channel 1 counts
absorptions (transitions leaving s). Cells are addressed by a row-major
index over (dy, dx) offsets, row = dy + delta_r, col = dx + delta_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import NeighborhoodError, ParameterError, ZoomMismatchError
from .geodesy import MAX_ZOOM, MIN_ZOOM, TileCoord

EMISSION = 0
ABSORPTION = 1

WEIGHTING_UNIT = "unit"
WEIGHTING_GAUSSIAN = "gaussian"

DEFAULT_DELTA_R = 12
DEFAULT_SIGMA_D = 100.0
DEFAULT_SIGMA_T = 60.0

# Fast-path key packing budget: 26 + 26 + 10 + 1 = 63 bits.
FAST_PATH_MAX_ZOOM = 26
FAST_PATH_MAX_DELTA_R = 15
_IDX_BITS = 10
_FLAG_BITS = 1


@dataclass(frozen=True)
class SummaryParams:
    """Parameters shared by every summary in one reachability map."""

    q: int
    delta_r: int = DEFAULT_DELTA_R
    weighting: str = WEIGHTING_GAUSSIAN
    sigma_d: float | None = DEFAULT_SIGMA_D
    sigma_t: float | None = DEFAULT_SIGMA_T

    def __post_init__(self):
        if not MIN_ZOOM <= self.q <= MAX_ZOOM:
            raise ParameterError(f"zoom must be in [{MIN_ZOOM}, {MAX_ZOOM}], got {self.q}")
        if self.delta_r < 1:
            raise ParameterError(f"delta_r must be >= 1, got {self.delta_r}")
        if self.weighting not in (WEIGHTING_UNIT, WEIGHTING_GAUSSIAN):
            raise ParameterError(f"unknown weighting {self.weighting!r}")
        if self.weighting == WEIGHTING_GAUSSIAN:
            if self.sigma_d is None or self.sigma_t is None:
                raise ParameterError("gaussian weighting requires sigma_d and sigma_t")
            if not (self.sigma_d > 0 and self.sigma_t > 0):
                raise ParameterError("sigma_d and sigma_t must be positive")
        else:
            # Unit weighting carries no scales; normalize to None so two
            # parameter sets that behave identically compare equal.
            object.__setattr__(self, "sigma_d", None)
            object.__setattr__(self, "sigma_t", None)

    @property
    def side(self) -> int:
        """Neighborhood side length L = 2*delta_r + 1."""
        return 2 * self.delta_r + 1

    @property
    def cells(self) -> int:
        return self.side * self.side


def row_major_index_from_offset(dx: int, dy: int, delta_r: int) -> int:
    """Flat index of offset (dx, dy) in the L x L neighborhood grid."""
    if max(abs(dx), abs(dy)) > delta_r:
        raise NeighborhoodError(f"offset ({dx}, {dy}) outside Chebyshev radius {delta_r}")
    side = 2 * delta_r + 1
    return side * (dy + delta_r) + (dx + delta_r)


def row_major_index(s: TileCoord, s2: TileCoord, delta_r: int) -> int:
    """Flat neighborhood index of s2 relative to center tile s."""
    if s.q != s2.q:
        raise ZoomMismatchError(f"cannot index across zooms {s.q} and {s2.q}")
    return row_major_index_from_offset(s2.x - s.x, s2.y - s.y, delta_r)


def inverse_index(idx: int, delta_r: int) -> tuple[int, int]:
    """Inverse of row_major_index_from_offset: flat index -> (dx, dy)."""
    side = 2 * delta_r + 1
    if not 0 <= idx < side * side:
        raise NeighborhoodError(f"index {idx} outside [0, {side * side})")
    return (idx % side - delta_r, idx // side - delta_r)


def center_index(delta_r: int) -> int:
    """Index of the zero offset (the node's own tile)."""
    side = 2 * delta_r + 1
    return side * delta_r + delta_r


def mirror_index(idx: int, delta_r: int) -> int:
    """Index of the negated offset: (dx, dy) -> (-dx, -dy).

    Every transition recorded at idx in one node's absorption channel is
    recorded at mirror_index(idx) in the destination's emission channel.
    """
    side = 2 * delta_r + 1
    if not 0 <= idx < side * side:
        raise NeighborhoodError(f"index {idx} outside [0, {side * side})")
    return side * side - 1 - idx


def gaussian_density(mu: float, sigma: float) -> float:
    """Zero-mean normal density evaluated at mu."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    z = mu / sigma
    return math.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * sigma)


def gaussian_weight(
    dd_m: float, dt_s: float, sigma_d: float, sigma_t: float, rescaled: bool = False
) -> float:
    """Weight of a pair separated by dd_m meters and dt_s seconds.

    Product of two zero-mean normal densities. With rescaled=True the
    value is multiplied by 2*pi*sigma_d*sigma_t so the peak is 1.0;
    off by default, raw densities are what gets accumulated.
    """
    w = gaussian_density(dd_m, sigma_d) * gaussian_density(dt_s, sigma_t)
    if rescaled:
        w *= 2.0 * math.pi * sigma_d * sigma_t
    return w


def pair_weight(dd_m: float, dt_s: float, params: SummaryParams) -> float:
    """Contribution weight under a parameter set's weighting mode."""
    if params.weighting == WEIGHTING_UNIT:
        return 1.0
    return gaussian_weight(dd_m, dt_s, params.sigma_d, params.sigma_t)


class Contribution(NamedTuple):
    """One weighted increment to a node's summary cell."""

    node: tuple[int, int]
    index: int
    flag: int  # EMISSION or ABSORPTION
    count: float


def generate_contributions(traj, params: SummaryParams) -> Iterator[Contribution]:
    """Yield every contribution a trajectory makes, one pair at a time.

    For each ordered pair of records (k, l) with k <= l whose tiles lie
    within Chebyshev radius delta_r of each other, the pair contributes
    once to the absorption channel of the earlier tile and once to the
    emission channel of the later tile, at mirrored neighborhood indices.
    Pairs farther apart than delta_r are skipped. Scalar reference
    implementation; the engine uses the vectorized form below.
    """
    if traj.q != params.q:
        raise ZoomMismatchError(f"trajectory at zoom {traj.q}, params at zoom {params.q}")
    xs, ys, ts = traj.xs, traj.ys, traj.ts
    n = len(xs)
    gaussian = params.weighting == WEIGHTING_GAUSSIAN
    dist = traj.cumulative_m() if gaussian else None
    for k in range(n):
        for l in range(k, n):
            dx = int(xs[l]) - int(xs[k])
            dy = int(ys[l]) - int(ys[k])
            if max(abs(dx), abs(dy)) > params.delta_r:
                continue
            if gaussian:
                c = pair_weight(dist[l] - dist[k], float(ts[l] - ts[k]), params)
            else:
                c = 1.0
            side = params.side
            fwd = side * (dy + params.delta_r) + (dx + params.delta_r)
            bwd = side * (-dy + params.delta_r) + (-dx + params.delta_r)
            yield Contribution((int(xs[k]), int(ys[k])), fwd, ABSORPTION, c)
            yield Contribution((int(xs[l]), int(ys[l])), bwd, EMISSION, c)


def supports_fast_path(params: SummaryParams) -> bool:
    """True when (x, y, index, flag) keys fit the packed int64 layout."""
    return params.q <= FAST_PATH_MAX_ZOOM and params.delta_r <= FAST_PATH_MAX_DELTA_R


def pack_keys(x: np.ndarray, y: np.ndarray, idx: np.ndarray, flag: np.ndarray) -> np.ndarray:
    """Pack key components into one int64 per contribution."""
    return (
        (x.astype(np.int64) << (FAST_PATH_MAX_ZOOM + _IDX_BITS + _FLAG_BITS))
        | (y.astype(np.int64) << (_IDX_BITS + _FLAG_BITS))
        | (idx.astype(np.int64) << _FLAG_BITS)
        | flag.astype(np.int64)
    )


def unpack_keys(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of pack_keys: int64 keys -> (x, y, index, flag) arrays."""
    flag = keys & 1
    idx = (keys >> _FLAG_BITS) & ((1 << _IDX_BITS) - 1)
    y = (keys >> (_IDX_BITS + _FLAG_BITS)) & ((1 << FAST_PATH_MAX_ZOOM) - 1)
    x = keys >> (FAST_PATH_MAX_ZOOM + _IDX_BITS + _FLAG_BITS)
    return x, y, idx, flag


def contribution_keys(traj, params: SummaryParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized contribution generation for one trajectory.

    Returns (keys, counts): packed int64 keys (see pack_keys) and float64
    weights, two entries per in-range pair. Requires supports_fast_path.
    """
    if traj.q != params.q:
        raise ZoomMismatchError(f"trajectory at zoom {traj.q}, params at zoom {params.q}")
    xs = traj.xs.astype(np.int64)
    ys = traj.ys.astype(np.int64)
    n = len(xs)
    if n == 0:
        return np.empty(0, np.int64), np.empty(0, np.float64)
    ks, ls = np.triu_indices(n)
    dx = xs[ls] - xs[ks]
    dy = ys[ls] - ys[ks]
    keep = np.maximum(np.abs(dx), np.abs(dy)) <= params.delta_r
    ks, ls, dx, dy = ks[keep], ls[keep], dx[keep], dy[keep]
    if params.weighting == WEIGHTING_GAUSSIAN:
        dist = traj.cumulative_m()
        ts = traj.ts.astype(np.float64)
        dd = (dist[ls] - dist[ks]) / params.sigma_d
        dt = (ts[ls] - ts[ks]) / params.sigma_t
        norm = 1.0 / (2.0 * np.pi * params.sigma_d * params.sigma_t)
        counts = norm * np.exp(-0.5 * (dd * dd + dt * dt))
    else:
        counts = np.ones(len(ks), np.float64)
    side = params.side
    fwd = side * (dy + params.delta_r) + (dx + params.delta_r)
    bwd = (side * side - 1) - fwd
    k_abs = pack_keys(xs[ks], ys[ks], fwd, np.ones(len(ks), np.int64))
    k_emi = pack_keys(xs[ls], ys[ls], bwd, np.zeros(len(ls), np.int64))
    keys = np.concatenate([k_abs, k_emi])
    counts = np.concatenate([counts, counts])
    return keys, counts
