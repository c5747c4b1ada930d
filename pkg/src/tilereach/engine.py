"""Deterministic aggregation of transition contributions into a reachability map.

The map S sends each active tile to a pair of sparse channels (emission,
absorption) over the L x L neighborhood. Aggregation partitions
trajectories across workers, reduces per worker by keyed addition, then
merges partials in fixed worker order, so results do not depend on the
worker count: exactly in unit mode, to float addition reordering (1e-9
relative) in gaussian mode.
"""

from __future__ import annotations

import atexit
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import multiprocessing as mp
import numpy as np

from .errors import FormatError, ParameterError, TileReachError, ZoomMismatchError
from .formats import _Reader, atomic_write, write_index_sidecar, write_rten
from .geodesy import TileCoord
from .trajectories import Trajectory, TrajectorySet
from .transitions import (
    EMISSION,
    SummaryParams,
    WEIGHTING_GAUSSIAN,
    WEIGHTING_UNIT,
    contribution_keys,
    generate_contributions,
    supports_fast_path,
    unpack_keys,
)

RSUM_MAGIC = b"RSUM1"

# Compress accumulated per-trajectory key arrays once they exceed this.
_FLUSH_ENTRIES = 4_000_000


@dataclass
class NodeChannels:
    """Sparse emission/absorption cells for one active tile."""

    emission: dict[int, float]
    absorption: dict[int, float]


class ReachabilityMap:
    """Immutable result of aggregating one trajectory set.

    Nodes are keyed by (x, y) tile coordinates at params.q. The node set
    is exactly the active tiles; every node has at least its center
    self-transition in both channels.
    """

    def __init__(
        self,
        params: SummaryParams,
        t0: int,
        dt: int,
        nodes: dict[tuple[int, int], NodeChannels] | None = None,
        packed: tuple[np.ndarray, np.ndarray] | None = None,
    ):
        if nodes is None and packed is None:
            nodes = {}
        self.params = params
        self.t0 = int(t0)
        self.dt = int(dt)
        self._nodes = nodes
        self._packed = packed

    @property
    def nodes(self) -> dict[tuple[int, int], NodeChannels]:
        if self._nodes is None:
            self._nodes = _materialize(*self._packed)
            self._packed = None
        return self._nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node) -> bool:
        return _node_key(node) in self.nodes

    def channels(self, node) -> NodeChannels:
        key = _node_key(node)
        try:
            return self.nodes[key]
        except KeyError:
            raise TileReachError(f"tile {key} is not active in this map") from None

    def sorted_nodes(self) -> list[tuple[int, int]]:
        """Active tiles in canonical (y, x) order."""
        return sorted(self.nodes, key=lambda n: (n[1], n[0]))

    def total_weight(self) -> tuple[float, float]:
        """(sum of all emission counts, sum of all absorption counts)."""
        e = sum(sum(ch.emission.values()) for ch in self.nodes.values())
        a = sum(sum(ch.absorption.values()) for ch in self.nodes.values())
        return e, a

    def __eq__(self, other):
        if not isinstance(other, ReachabilityMap):
            return NotImplemented
        if (self.params, self.t0, self.dt) != (other.params, other.t0, other.dt):
            return False
        a, b = self.nodes, other.nodes
        if a.keys() != b.keys():
            return False
        return all(
            a[k].emission == b[k].emission and a[k].absorption == b[k].absorption for k in a
        )

    def allclose(self, other: "ReachabilityMap", rtol: float = 1e-9) -> bool:
        """Equality up to per-entry relative tolerance on the counts."""
        if (self.params, self.t0, self.dt) != (other.params, other.t0, other.dt):
            return False
        a, b = self.nodes, other.nodes
        if a.keys() != b.keys():
            return False
        for k in a:
            for mine, theirs in ((a[k].emission, b[k].emission), (a[k].absorption, b[k].absorption)):
                if mine.keys() != theirs.keys():
                    return False
                for idx, c in mine.items():
                    if abs(c - theirs[idx]) > rtol * max(abs(c), abs(theirs[idx])):
                        return False
        return True


def _node_key(node) -> tuple[int, int]:
    if isinstance(node, TileCoord):
        return (node.x, node.y)
    x, y = node
    return (int(x), int(y))


def _materialize(keys: np.ndarray, counts: np.ndarray) -> dict[tuple[int, int], NodeChannels]:
    """Expand sorted packed keys into the per-node channel dicts."""
    nodes: dict[tuple[int, int], NodeChannels] = {}
    if len(keys) == 0:
        return nodes
    xs, ys, idxs, flags = unpack_keys(keys)
    node_part = keys >> 11
    starts = np.flatnonzero(np.diff(node_part)) + 1
    bounds = np.concatenate([[0], starts, [len(keys)]])
    for b in range(len(bounds) - 1):
        lo, hi = int(bounds[b]), int(bounds[b + 1])
        emission: dict[int, float] = {}
        absorption: dict[int, float] = {}
        for i in range(lo, hi):
            c = float(counts[i])
            if c == 0.0:
                continue
            if flags[i] == EMISSION:
                emission[int(idxs[i])] = c
            else:
                absorption[int(idxs[i])] = c
        if emission or absorption:
            nodes[(int(xs[lo]), int(ys[lo]))] = NodeChannels(emission, absorption)
    return nodes


def _reduce_chunk_fast(trajectories: Sequence[Trajectory], params: SummaryParams):
    """Worker body: reduce one trajectory chunk to (sorted keys, counts)."""
    pending_k: list[np.ndarray] = []
    pending_c: list[np.ndarray] = []
    blocks: list[tuple[np.ndarray, np.ndarray]] = []
    pending_n = 0
    for traj in trajectories:
        k, c = contribution_keys(traj, params)
        pending_k.append(k)
        pending_c.append(c)
        pending_n += len(k)
        if pending_n >= _FLUSH_ENTRIES:
            blocks.append(_combine(pending_k, pending_c))
            pending_k, pending_c, pending_n = [], [], 0
    if pending_k:
        blocks.append(_combine(pending_k, pending_c))
    if not blocks:
        return np.empty(0, np.int64), np.empty(0, np.float64)
    if len(blocks) == 1:
        return blocks[0]
    return _combine([b[0] for b in blocks], [b[1] for b in blocks])


def _combine(key_arrays: list[np.ndarray], count_arrays: list[np.ndarray]):
    keys = np.concatenate(key_arrays)
    counts = np.concatenate(count_arrays)
    uniq, inverse = np.unique(keys, return_inverse=True)
    summed = np.bincount(inverse, weights=counts, minlength=len(uniq))
    return uniq, summed


def _reduce_chunk_slow(trajectories: Sequence[Trajectory], params: SummaryParams):
    """Worker body for parameter sets outside the packed-key domain."""
    acc: dict[tuple[int, int, int, int], float] = {}
    for traj in trajectories:
        for node, idx, flag, count in generate_contributions(traj, params):
            key = (node[0], node[1], idx, flag)
            acc[key] = acc.get(key, 0.0) + count
    return acc


def _reduce_chunk(args):
    trajectories, params, fast = args
    if fast:
        return _reduce_chunk_fast(trajectories, params)
    return _reduce_chunk_slow(trajectories, params)


_pools: dict[int, ProcessPoolExecutor] = {}


def _get_pool(workers: int) -> ProcessPoolExecutor:
    pool = _pools.get(workers)
    if pool is None:
        ctx = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else "spawn")
        pool = ProcessPoolExecutor(max_workers=workers, mp_context=ctx)
        _pools[workers] = pool
    return pool


@atexit.register
def _shutdown_pools():
    for pool in _pools.values():
        pool.shutdown(wait=False, cancel_futures=True)
    _pools.clear()


def build_reachability_map(
    s: TrajectorySet, params: SummaryParams, workers: int = 1
) -> ReachabilityMap:
    """Aggregate a trajectory set into its reachability map.

    Trajectories are partitioned round-robin across workers (a trajectory
    is never split); each worker reduces its chunk by keyed addition and
    the partials are merged in worker order. workers=1 runs in-process.
    """
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    if len(s) and s.q != params.q:
        raise ZoomMismatchError(f"set at zoom {s.q}, params at zoom {params.q}")
    fast = supports_fast_path(params)
    chunks = [list(s.trajectories[w::workers]) for w in range(workers)]
    chunks = [c for c in chunks if c]
    if len(chunks) <= 1:
        partials = [_reduce_chunk((chunks[0] if chunks else [], params, fast))]
    else:
        pool = _get_pool(len(chunks))
        futures = [pool.submit(_reduce_chunk, (c, params, fast)) for c in chunks]
        partials = [f.result() for f in futures]
    if fast:
        keys, counts = _combine([p[0] for p in partials], [p[1] for p in partials])
        keep = counts != 0.0
        if not np.all(keep):
            keys, counts = keys[keep], counts[keep]
        return ReachabilityMap(params, s.t0, s.dt, packed=(keys, counts))
    merged: dict[tuple[int, int, int, int], float] = {}
    for p in partials:
        for key, val in p.items():
            merged[key] = merged.get(key, 0.0) + val
    return ReachabilityMap(params, s.t0, s.dt, nodes=_nodes_from_dict(merged))


def _nodes_from_dict(acc: dict[tuple[int, int, int, int], float]):
    nodes: dict[tuple[int, int], NodeChannels] = {}
    for (x, y, idx, flag), count in acc.items():
        if count == 0.0:
            continue
        ch = nodes.get((x, y))
        if ch is None:
            ch = nodes[(x, y)] = NodeChannels({}, {})
        target = ch.emission if flag == EMISSION else ch.absorption
        target[idx] = target.get(idx, 0.0) + count
    return nodes


def brute_force_reference(s: TrajectorySet, params: SummaryParams) -> ReachabilityMap:
    """Sequential, allocation-simple aggregation used as the testing oracle.

    Walks the scalar contribution stream trajectory by trajectory and
    accumulates into plain dicts. Intended for small inputs; shares no
    code with the vectorized path beyond the index definitions.
    """
    if len(s) and s.q != params.q:
        raise ZoomMismatchError(f"set at zoom {s.q}, params at zoom {params.q}")
    acc: dict[tuple[int, int, int, int], float] = {}
    for traj in s.trajectories:
        for node, idx, flag, count in generate_contributions(traj, params):
            key = (node[0], node[1], idx, flag)
            acc[key] = acc.get(key, 0.0) + count
    return ReachabilityMap(params, s.t0, s.dt, nodes=_nodes_from_dict(acc))


def densify(m: ReachabilityMap, node) -> np.ndarray:
    """Scatter one node's sparse channels into an L x L x 2 tensor.

    Channel 0 is emission, channel 1 absorption; row = dy + delta_r,
    column = dx + delta_r. Raises for inactive nodes.
    """
    ch = m.channels(node)
    side = m.params.side
    out = np.zeros((side, side, 2), np.float64)
    flat = out.reshape(side * side, 2)
    for idx, c in ch.emission.items():
        flat[idx, 0] = c
    for idx, c in ch.absorption.items():
        flat[idx, 1] = c
    return out


def densify_or_zero(m: ReachabilityMap, node) -> np.ndarray:
    """Like densify, but inactive tiles yield the all-zeros tensor."""
    if node in m:
        return densify(m, node)
    side = m.params.side
    return np.zeros((side, side, 2), np.float64)


def export_dense_tensors(
    m: ReachabilityMap,
    path: str,
    nodes: Iterable | str = "all",
    dtype: str = "f64",
) -> list[tuple[int, int]]:
    """Write stacked dense summaries as an RTEN file plus `.idx` sidecar.

    nodes="all" exports every active tile in canonical (y, x) order;
    otherwise the given nodes are exported in the given order. Returns
    the node list actually written, matching sidecar line order.
    """
    if isinstance(nodes, str):
        if nodes != "all":
            raise ParameterError(f"nodes must be 'all' or an iterable, got {nodes!r}")
        node_list = m.sorted_nodes()
    else:
        node_list = [_node_key(n) for n in nodes]
    side = m.params.side
    stack = np.zeros((len(node_list), side, side, 2), np.float64)
    for i, node in enumerate(node_list):
        stack[i] = densify(m, node)
    write_rten(path, stack, dtype=dtype)
    write_index_sidecar(path + ".idx", node_list)
    return node_list


_HEAD = struct.Struct("<IIBddqqQ")
_NODE_HEAD = struct.Struct("<III")
_ENTRY = struct.Struct("<Id")
_NNZ = struct.Struct("<I")


def write_rsum(m: ReachabilityMap, path: str) -> None:
    """Serialize a map canonically: nodes by (y, x), entries by index."""
    params = m.params
    weighting = 0 if params.weighting == WEIGHTING_UNIT else 1
    parts = [
        RSUM_MAGIC,
        _HEAD.pack(
            params.q,
            params.delta_r,
            weighting,
            params.sigma_d or 0.0,
            params.sigma_t or 0.0,
            m.t0,
            m.dt,
            len(m.nodes),
        ),
    ]
    for x, y in m.sorted_nodes():
        ch = m.nodes[(x, y)]
        parts.append(_NODE_HEAD.pack(x, y, len(ch.emission)))
        for idx in sorted(ch.emission):
            parts.append(_ENTRY.pack(idx, ch.emission[idx]))
        parts.append(_NNZ.pack(len(ch.absorption)))
        for idx in sorted(ch.absorption):
            parts.append(_ENTRY.pack(idx, ch.absorption[idx]))
    atomic_write(path, b"".join(parts))


def read_rsum(path: str) -> ReachabilityMap:
    """Read a map back; exact inverse of write_rsum."""
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data, "RSUM")
    r.expect_magic(RSUM_MAGIC)
    q, delta_r, weighting, sigma_d, sigma_t, t0, dt, node_count = r.take(_HEAD.format)
    if weighting not in (0, 1):
        raise FormatError(f"unknown weighting code {weighting}", offset=13)
    try:
        if weighting == 0:
            params = SummaryParams(q, delta_r, WEIGHTING_UNIT)
        else:
            params = SummaryParams(q, delta_r, WEIGHTING_GAUSSIAN, sigma_d, sigma_t)
    except ParameterError as e:
        raise FormatError(f"invalid header parameters: {e}", offset=5) from e
    cells = params.cells
    nodes: dict[tuple[int, int], NodeChannels] = {}
    for _ in range(node_count):
        x, y, nnz_e = r.take(_NODE_HEAD.format)
        emission = _read_entries(r, nnz_e, cells)
        (nnz_a,) = r.take(_NNZ.format)
        absorption = _read_entries(r, nnz_a, cells)
        nodes[(x, y)] = NodeChannels(emission, absorption)
    r.done()
    return ReachabilityMap(params, t0, dt, nodes=nodes)


def _read_entries(r: _Reader, nnz: int, cells: int) -> dict[int, float]:
    out: dict[int, float] = {}
    for _ in range(nnz):
        idx, count = r.take(_ENTRY.format)
        if idx >= cells:
            raise FormatError(f"entry index {idx} outside [0, {cells})", offset=r.pos - 12)
        if not count > 0:
            raise FormatError(f"non-positive count {count!r}", offset=r.pos - 8)
        out[idx] = count
    return out
