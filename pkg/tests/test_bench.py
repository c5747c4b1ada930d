"""Benchmark harness: row layout, efficiency pairing, digests."""

import math

import pytest

from tilereach.bench import (
    PRESET_GRID,
    PRESET_N_RANGE,
    BenchReport,
    BenchRow,
    dataset_digest,
    preset_set,
    run_scaling,
    run_trajectory_sweep,
)
from tilereach.errors import ParameterError
from tilereach.trajectories import Trajectory, make_set, synth_trajectories
from tilereach.transitions import SummaryParams

PARAMS = SummaryParams(24, 2, "unit")


def small_set(seed=3, m=6):
    return synth_trajectories(seed, m, (4, 8), (24, 100, 200, 64, 64))


class TestDigest:
    def test_stable_across_calls(self):
        s = small_set()
        assert dataset_digest(s) == dataset_digest(s)

    def test_same_seed_same_digest(self):
        assert dataset_digest(small_set(9)) == dataset_digest(small_set(9))

    def test_different_seed_different_digest(self):
        assert dataset_digest(small_set(1)) != dataset_digest(small_set(2))

    def test_sensitive_to_coordinates(self):
        s = small_set()
        tr = s.trajectories[0]
        moved = Trajectory(tr.id, tr.q, tr.xs + 1, tr.ys, tr.ts)
        altered = make_set((moved,) + s.trajectories[1:], s.q, s.t0, s.dt)
        assert dataset_digest(altered) != dataset_digest(s)

    def test_sensitive_to_ids(self):
        s = small_set()
        tr = s.trajectories[0]
        renamed = Trajectory("other", tr.q, tr.xs, tr.ys, tr.ts)
        altered = make_set((renamed,) + s.trajectories[1:], s.q, s.t0, s.dt)
        assert dataset_digest(altered) != dataset_digest(s)


class TestPresets:
    def test_rejects_unknown_size(self):
        with pytest.raises(ParameterError):
            preset_set(3000, 0)

    def test_preset_is_seeded(self):
        a = preset_set(2000, 5)
        b = preset_set(2000, 5)
        assert dataset_digest(a) == dataset_digest(b)
        assert len(a) == 2000

    def test_preset_grid_bounds(self):
        q, x0, y0, w, h = PRESET_GRID
        s = preset_set(2000, 1)
        lo, hi = PRESET_N_RANGE
        for tr in s.trajectories:
            assert lo <= len(tr) <= hi
            assert x0 <= tr.xs.min() and tr.xs.max() < x0 + w
            assert y0 <= tr.ys.min() and tr.ys.max() < y0 + h


class TestRunScaling:
    def test_row_grid(self):
        report = run_scaling(small_set(), PARAMS, [1, 2], repeats=3)
        assert len(report.rows) == 6
        assert [(r.workers, r.run) for r in report.rows] == [
            (1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3),
        ]
        assert all(r.dataset == 6 for r in report.rows)
        assert all(r.seconds > 0 for r in report.rows)

    def test_baseline_efficiency_is_exactly_one(self):
        report = run_scaling(small_set(), PARAMS, [1, 2], repeats=2)
        for row in report.rows:
            if row.workers == 1:
                assert row.efficiency == 1.0

    def test_efficiency_paired_by_run(self):
        # efficiency must be computable from the published seconds alone
        report = run_scaling(small_set(), PARAMS, [2, 4], repeats=2)
        base = {r.run: r.seconds for r in report.rows if r.workers == 2}
        for row in report.rows:
            ideal = base[row.run] * (2 / row.workers)
            assert row.efficiency == pytest.approx(ideal / row.seconds, rel=1e-12)

    def test_dataset_label_override(self):
        report = run_scaling(small_set(), PARAMS, [1], repeats=1, dataset_label=999)
        assert report.rows[0].dataset == 999

    def test_digest_matches_input(self):
        s = small_set()
        report = run_scaling(s, PARAMS, [1], repeats=1)
        assert report.digest == dataset_digest(s)

    def test_rejects_bad_repeats(self):
        with pytest.raises(ParameterError):
            run_scaling(small_set(), PARAMS, [1], repeats=0)

    def test_rejects_bad_workers(self):
        with pytest.raises(ParameterError):
            run_scaling(small_set(), PARAMS, [], repeats=1)
        with pytest.raises(ParameterError):
            run_scaling(small_set(), PARAMS, [1, 0], repeats=1)

    def test_no_warmup_path(self):
        report = run_scaling(small_set(), PARAMS, [1], repeats=1, warmup=False)
        assert len(report.rows) == 1


class TestReport:
    def rows(self):
        return [
            BenchRow(10, 1, 1, 2.0, 1.0),
            BenchRow(10, 1, 2, 4.0, 1.0),
            BenchRow(10, 1, 3, 3.0, 1.0),
            BenchRow(10, 2, 1, 1.5, 0.666667),
        ]

    def test_csv_layout(self):
        text = BenchReport(self.rows(), "deadbeef").csv()
        lines = text.strip().split("\n")
        assert lines[0] == "dataset,workers,run,seconds,efficiency"
        assert lines[1] == "10,1,1,2.000000,1.000000"
        assert lines[4] == "10,2,1,1.500000,0.666667"

    def test_median_and_mean(self):
        report = BenchReport(self.rows(), "deadbeef")
        assert report.median_seconds(10, 1) == 3.0
        assert report.mean_seconds(10, 1) == 3.0
        assert report.median_seconds(10, 2) == 1.5

    def test_missing_rows_raise(self):
        report = BenchReport(self.rows(), "deadbeef")
        with pytest.raises(ParameterError):
            report.median_seconds(10, 7)


class TestSweep:
    def test_rows_cover_all_sizes(self):
        report, exponent = run_trajectory_sweep(
            [2, 4], 1, 11, PARAMS, repeats=2, n_range=(4, 6), grid=(24, 0, 0, 32, 32)
        )
        assert sorted({r.dataset for r in report.rows}) == [2, 4]
        assert len(report.rows) == 4
        assert math.isfinite(exponent)

    def test_single_size_has_nan_exponent(self):
        _, exponent = run_trajectory_sweep(
            [3], 1, 11, PARAMS, repeats=1, n_range=(4, 6), grid=(24, 0, 0, 32, 32)
        )
        assert math.isnan(exponent)

    def test_rejects_empty_sizes(self):
        with pytest.raises(ParameterError):
            run_trajectory_sweep([], 1, 0, PARAMS)
