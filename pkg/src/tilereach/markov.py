"""Transition-probability view of the tile graph and its consistency check.

The absorption channels of a reachability map define a weighted directed
graph over active tiles. Normalizing each row by its sum yields a
transition matrix P. The verifier checks the one-step identity: the sum
of all entries of P squared equals, node by node, the product of the
column mass flowing into the node and the row mass flowing out, both
assembled from the sparse channels rather than from P itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .engine import ReachabilityMap
from .errors import MatrixSizeError, ParameterError, TileReachError
from .transitions import inverse_index

MAX_DENSE_NODES = 5_000

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class ActiveIndex:
    """Bijection between active tiles and dense matrix indices.

    Ordering is (y, x) lexicographic, matching the canonical file order.
    """

    tiles: tuple[tuple[int, int], ...]

    @classmethod
    def from_nodes(cls, nodes) -> "ActiveIndex":
        return cls(tuple(sorted(nodes, key=lambda n: (n[1], n[0]))))

    def __len__(self) -> int:
        return len(self.tiles)

    def index_of(self, tile: tuple[int, int]) -> int:
        pos = self._lookup.get(tile)
        if pos is None:
            raise TileReachError(f"tile {tile} is not active")
        return pos

    @property
    def _lookup(self) -> dict[tuple[int, int], int]:
        cached = getattr(self, "_lookup_cache", None)
        if cached is None:
            cached = {t: i for i, t in enumerate(self.tiles)}
            object.__setattr__(self, "_lookup_cache", cached)
        return cached


@dataclass
class TransitionMatrix:
    """Row-normalized transition matrix over active tiles."""

    p: np.ndarray
    index: ActiveIndex
    row_sums: np.ndarray  # pre-normalization out-mass Z per node

    def __post_init__(self):
        n = len(self.index)
        if self.p.shape != (n, n):
            raise ParameterError(f"matrix shape {self.p.shape} does not match {n} tiles")


def build_transition_matrix(source) -> TransitionMatrix:
    """Assemble P from a ReachabilityMap or from raw (src, dst) -> weight counts.

    Weights come from absorption channels scattered back to node pairs;
    each row is divided by its sum, empty rows stay zero.
    """
    if isinstance(source, ReachabilityMap):
        weights = _pairs_from_map(source)
    elif isinstance(source, Mapping):
        weights = dict(source)
    else:
        raise ParameterError(f"cannot build a transition matrix from {type(source).__name__}")
    if not weights:
        raise ParameterError("no transition counts to build a matrix from")
    tiles = {s for s, _ in weights} | {d for _, d in weights}
    if len(tiles) > MAX_DENSE_NODES:
        raise MatrixSizeError(
            f"{len(tiles)} active tiles exceed the dense limit of {MAX_DENSE_NODES}"
        )
    index = ActiveIndex.from_nodes(tiles)
    n = len(index)
    w = np.zeros((n, n), np.float64)
    for (src, dst), count in weights.items():
        if count < 0:
            raise ParameterError(f"negative weight for {src}->{dst}")
        w[index.index_of(src), index.index_of(dst)] += count
    z = w.sum(axis=1)
    p = np.divide(w, z[:, None], out=np.zeros_like(w), where=z[:, None] > 0)
    return TransitionMatrix(p, index, z)


def _pairs_from_map(m: ReachabilityMap) -> dict[tuple[tuple[int, int], tuple[int, int]], float]:
    delta_r = m.params.delta_r
    out: dict[tuple[tuple[int, int], tuple[int, int]], float] = {}
    for (x, y), ch in m.nodes.items():
        for idx, c in ch.absorption.items():
            dx, dy = inverse_index(idx, delta_r)
            key = ((x, y), (x + dx, y + dy))
            out[key] = out.get(key, 0.0) + c
    return out


def scale(x: np.ndarray) -> np.ndarray:
    """Normalize a matrix by the sum of its entries."""
    x = np.asarray(x, np.float64)
    total = x.sum()
    if not total > 0:
        raise ParameterError(f"scale requires a positive-sum input, got sum {total}")
    return x / total


def contribution(tm: TransitionMatrix | np.ndarray, s: int, s2: int, s3: int) -> float:
    """One intermediate node's share of the two-step mass s2 -> s3.

    Equals P[s2, s] * P[s, s3]; summing over every s gives the (s2, s3)
    entry of P squared.
    """
    p = tm.p if isinstance(tm, TransitionMatrix) else np.asarray(tm)
    n = p.shape[0]
    for arg in (s, s2, s3):
        if not 0 <= arg < n:
            raise IndexError(f"state {arg} outside [0, {n})")
    return float(p[s2, s] * p[s, s3])


@dataclass(frozen=True)
class CkeReport:
    """Result of the two-step consistency check."""

    lhs: float
    rhs: float
    residual: float
    status: str
    n_active: int
    truncated: bool
    psi_rhs: float
    tolerance: float

    def to_lines(self) -> list[str]:
        return [
            f"lhs={self.lhs!r}",
            f"rhs={self.rhs!r}",
            f"residual={self.residual!r}",
            f"status={self.status}",
            f"n_active={self.n_active}",
            f"truncated={str(self.truncated).lower()}",
            f"psi_rhs={self.psi_rhs!r}",
            f"tolerance={self.tolerance!r}",
        ]

    def as_text(self) -> str:
        head = (
            f"two-step identity over {self.n_active} active tiles: "
            f"sum(P^2) = {self.lhs!r}, channel-side = {self.rhs!r}, "
            f"|residual| = {self.residual:.3e} -> {self.status}"
        )
        if self.truncated:
            head += "\nneighborhood truncation detected; identity not applicable"
        head += f"\nscaled-count variant (not the gate): {self.psi_rhs!r}"
        return head


def detect_truncation(m: ReachabilityMap, trajectories=None) -> bool:
    """Whether any observed pair fell outside the Chebyshev neighborhood.

    With the trajectory set available the check is exact. From the map
    alone it is conservative: mass at the neighborhood boundary means a
    wider radius could have captured more, so truncation is possible.
    """
    delta_r = m.params.delta_r
    if trajectories is not None:
        for tr in trajectories:
            xs = tr.xs.astype(np.int64)
            ys = tr.ys.astype(np.int64)
            n = len(xs)
            ks, ls = np.triu_indices(n)
            cheb = np.maximum(np.abs(xs[ls] - xs[ks]), np.abs(ys[ls] - ys[ks]))
            if np.any(cheb > delta_r):
                return True
        return False
    for ch in m.nodes.values():
        for idx in list(ch.absorption) + list(ch.emission):
            dx, dy = inverse_index(idx, delta_r)
            if max(abs(dx), abs(dy)) == delta_r:
                return True
    return False


def cke_verify(m: ReachabilityMap, trajectories=None, tolerance: float = 1e-9) -> CkeReport:
    """Check the two-step identity between P and the sparse channels.

    Left side: sum of every entry of P @ P. Right side, assembled from
    the channels alone: for each node z, (incoming probability mass,
    each entry divided by its source row's total out-mass) times
    (outgoing probability mass, divided by z's own out-mass), summed
    over nodes. Also reports the scaled-count variant where the factors
    keep their raw channel masses instead of probabilities.
    """
    if not len(m.nodes):
        raise ParameterError("cannot verify an empty map")
    tm = build_transition_matrix(m)
    p = tm.p
    lhs = float((p @ p).sum())

    delta_r = m.params.delta_r
    z_out = {tile: sum(m.nodes[tile].absorption.values()) for tile in m.nodes}
    rhs = 0.0
    psi_rhs = 0.0
    for (x, y), ch in m.nodes.items():
        in_mass = 0.0
        nu_e = 0.0
        for idx, c in ch.emission.items():
            dx, dy = inverse_index(idx, delta_r)
            src = (x + dx, y + dy)
            z_src = z_out.get(src, 0.0)
            if z_src <= 0:
                raise TileReachError(f"emission from inactive or sink tile {src}")
            in_mass += c / z_src
            nu_e += c
        own_z = z_out[(x, y)]
        out_mass = sum(ch.absorption.values()) / own_z if own_z > 0 else 0.0
        nu_a = sum(ch.absorption.values())
        rhs += in_mass * out_mass
        psi_rhs += nu_e * nu_a * in_mass * out_mass
    residual = abs(lhs - rhs)

    truncated = detect_truncation(m, trajectories)
    if truncated:
        status = NOT_APPLICABLE
    else:
        status = PASS if residual < tolerance else FAIL
    return CkeReport(
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        status=status,
        n_active=len(tm.index),
        truncated=truncated,
        psi_rhs=psi_rhs,
        tolerance=tolerance,
    )
