"""Strong-scaling benchmark harness for the aggregation engine.

Times build_reachability_map over a worker-count sweep on synthetic (or
supplied) trajectory sets. Efficiency compares each run against the ideal
time extrapolated from the baseline worker count: with t_c0 measured at
the baseline c0, the ideal at c workers is t_c0 * (c0 / c), and
efficiency is ideal / measured, paired per repeat index.
"""

from __future__ import annotations

import hashlib
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from .engine import build_reachability_map
from .errors import ParameterError
from .trajectories import TrajectorySet, synth_trajectories
from .transitions import SummaryParams

# Synthetic presets mirror the scaling study's trip counts. The window
# sits on a 256x256 tile block centered near the Beijing regression tile.
PRESET_SIZES = (2000, 8000, 64000)
PRESET_GRID = (24, 13813586 - 128, 6357328 - 128, 256, 256)
PRESET_N_RANGE = (16, 48)
DEFAULT_REPEATS = 7


@dataclass(frozen=True)
class BenchRow:
    dataset: int
    workers: int
    run: int
    seconds: float
    efficiency: float


@dataclass
class BenchReport:
    """Per-run timing rows plus the input digest they were measured on."""

    rows: list[BenchRow]
    digest: str

    def csv(self) -> str:
        out = io.StringIO()
        out.write("dataset,workers,run,seconds,efficiency\n")
        for r in self.rows:
            out.write(f"{r.dataset},{r.workers},{r.run},{r.seconds:.6f},{r.efficiency:.6f}\n")
        return out.getvalue()

    def median_seconds(self, dataset: int, workers: int) -> float:
        vals = [r.seconds for r in self.rows if r.dataset == dataset and r.workers == workers]
        if not vals:
            raise ParameterError(f"no rows for dataset={dataset}, workers={workers}")
        return float(np.median(vals))

    def mean_seconds(self, dataset: int, workers: int) -> float:
        vals = [r.seconds for r in self.rows if r.dataset == dataset and r.workers == workers]
        if not vals:
            raise ParameterError(f"no rows for dataset={dataset}, workers={workers}")
        return float(np.mean(vals))


def preset_set(size: int, seed: int) -> TrajectorySet:
    """Synthesize one of the standard benchmark datasets."""
    if size not in PRESET_SIZES:
        raise ParameterError(f"preset must be one of {PRESET_SIZES}, got {size}")
    return synth_trajectories(seed, size, PRESET_N_RANGE, PRESET_GRID, model="road-grid")


def dataset_digest(s: TrajectorySet) -> str:
    """Stable content hash of a trajectory set."""
    h = hashlib.sha256()
    h.update(f"{s.q},{s.t0},{s.dt},{len(s)}".encode())
    for tr in s.trajectories:
        h.update(tr.id.encode())
        h.update(tr.xs.tobytes())
        h.update(tr.ys.tobytes())
        h.update(tr.ts.tobytes())
    return h.hexdigest()


def run_scaling(
    s: TrajectorySet,
    params: SummaryParams,
    workers_list: list[int],
    repeats: int = DEFAULT_REPEATS,
    dataset_label: int | None = None,
    warmup: bool = True,
) -> BenchReport:
    """Time the build across worker counts; rows are per (workers, run)."""
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    if not workers_list or any(w < 1 for w in workers_list):
        raise ParameterError(f"bad workers list {workers_list!r}")
    label = dataset_label if dataset_label is not None else len(s)
    c0 = min(workers_list)
    times: dict[int, list[float]] = {}
    for workers in workers_list:
        if warmup:
            warm = TrajectorySet(s.trajectories[: 4 * workers], s.q, s.t0, s.dt)
            build_reachability_map(warm, params, workers=workers)
        runs = []
        for _ in range(repeats):
            start = time.perf_counter()
            build_reachability_map(s, params, workers=workers)
            runs.append(time.perf_counter() - start)
        times[workers] = runs
    rows = []
    for workers in workers_list:
        for r in range(repeats):
            ideal = times[c0][r] * (c0 / workers)
            rows.append(
                BenchRow(
                    dataset=label,
                    workers=workers,
                    run=r + 1,
                    seconds=times[workers][r],
                    efficiency=ideal / times[workers][r],
                )
            )
    return BenchReport(rows, dataset_digest(s))


def run_trajectory_sweep(
    sizes: list[int],
    workers: int,
    seed: int,
    params: SummaryParams,
    repeats: int = DEFAULT_REPEATS,
    n_range: tuple[int, int] = PRESET_N_RANGE,
    grid: tuple[int, int, int, int, int] = PRESET_GRID,
) -> tuple[BenchReport, float]:
    """Time the build across dataset sizes at a fixed worker count.

    Returns the report plus the fitted power-law exponent of median
    runtime against trajectory count (least squares in log-log space).
    """
    if any(m < 1 for m in sizes) or len(sizes) < 1:
        raise ParameterError(f"bad sizes list {sizes!r}")
    all_rows: list[BenchRow] = []
    digests = []
    medians = []
    for m in sizes:
        s = synth_trajectories(seed, m, n_range, grid, model="road-grid")
        report = run_scaling(
            s, params, [workers], repeats=repeats, dataset_label=m, warmup=True
        )
        all_rows.extend(report.rows)
        digests.append(report.digest)
        medians.append(report.median_seconds(m, workers))
    if len(sizes) >= 2:
        logs = np.log(np.asarray(sizes, np.float64))
        logt = np.log(np.asarray(medians, np.float64))
        exponent = float(np.polyfit(logs, logt, 1)[0])
    else:
        exponent = math.nan
    combined = hashlib.sha256(",".join(digests).encode()).hexdigest()
    return BenchReport(all_rows, combined), exponent
