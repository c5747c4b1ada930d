"""Parsing, normalization, splitting, filtering, and synthesis."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tilereach.errors import FormatError, ParameterError, TrajectoryError
from tilereach.geodesy import LatLon, latlon_to_tile, tile_centroid
from tilereach.trajectories import (
    Trajectory,
    make_set,
    modality_filter,
    parse_csv,
    preprocess_tdrive,
    speed_threshold_predicate,
    synth_trajectories,
)


def generic(lines):
    return parse_csv(io.StringIO("\n".join(lines) + "\n"), format="generic", q=24)


class TestGenericParsing:
    def test_out_of_order_records_sorted(self):
        s = generic(
            [
                "m1,300,39.9042,116.4074",
                "m1,100,39.9042,116.4074",
                "m1,200,39.9042,116.4074",
            ]
        )
        assert len(s) == 1
        assert list(s.trajectories[0].ts) == [100, 200, 300]

    def test_duplicate_timestamp_keeps_first(self):
        s = generic(
            [
                "m1,100,10.0,10.0",
                "m1,200,10.0,10.0",
                "m1,200,50.0,50.0",
            ]
        )
        tr = s.trajectories[0]
        assert len(tr) == 2
        assert s.stats.duplicates_dropped == 1
        expected = latlon_to_tile(LatLon(10.0, 10.0), 24)
        assert tr.tile(1) == expected  # the first of the two t=200 rows won

    def test_header_detected_and_skipped(self):
        s = generic(["mover_id,epoch_seconds,lat,lon", "m1,100,10.0,10.0"])
        assert s.stats.malformed == 0
        assert s.record_count() == 1

    def test_malformed_lines_skipped_and_counted(self):
        s = generic(
            [
                "m1,100,10.0,10.0",
                "garbage line",
                "m1,200,10.0,10.0",
                "m1,250,not_a_number,10.0",
            ]
        )
        assert s.stats.malformed == 2
        assert s.record_count() == 2

    def test_mostly_malformed_rejected_with_samples(self):
        lines = ["m1,100,10.0,10.0"] + ["junk"] * 5
        with pytest.raises(FormatError) as e:
            generic(lines)
        assert "sample" in str(e.value)

    def test_movers_grouped(self):
        s = generic(["a,1,10,10", "b,1,11,11", "a,2,10,10"])
        assert len(s) == 2
        assert {t.id for t in s} == {"a", "b"}

    def test_window_derived_from_data(self):
        s = generic(["a,100,10,10", "a,400,10,10"])
        assert s.t0 == 100
        assert s.dt == 300

    def test_unknown_format_rejected(self):
        with pytest.raises(ParameterError):
            parse_csv(io.StringIO(""), format="tsv", q=24)


class TestTdriveParsing:
    def test_column_order_is_lon_before_lat(self):
        s = parse_csv(
            io.StringIO("1368,2008-02-02 13:30:44,116.45,39.91\n"),
            format="tdrive",
            q=24,
        )
        tr = s.trajectories[0]
        assert tr.id == "1368"
        assert tr.tile(0) == latlon_to_tile(LatLon(39.91, 116.45), 24)

    def test_timestamps_are_beijing_local(self):
        s = parse_csv(
            io.StringIO("1,2008-02-02 08:00:00,116.0,39.0\n"),
            format="tdrive",
            q=24,
        )
        # 2008-02-02T08:00+08:00 == 2008-02-02T00:00Z == epoch 1201910400.
        assert int(s.trajectories[0].ts[0]) == 1_201_910_400

    def test_day_split(self):
        text = (
            "7,2008-02-02 23:50:00,116.0,39.0\n"
            "7,2008-02-03 00:10:00,116.0,39.0\n"
            "7,2008-02-03 00:20:00,116.0,39.0\n"
        )
        s = preprocess_tdrive(parse_csv(io.StringIO(text), format="tdrive", q=24))
        assert len(s) == 2
        ids = sorted(t.id for t in s)
        assert ids == ["7_20080202", "7_20080203"]
        assert s.record_count() == 3

    def test_split_conserves_record_count(self):
        rng = np.random.default_rng(3)
        lines = []
        for taxi in range(5):
            for _ in range(20):
                day = int(rng.integers(1, 5))
                hh = int(rng.integers(0, 24))
                mm = int(rng.integers(0, 60))
                lines.append(f"{taxi},2008-02-0{day} {hh:02d}:{mm:02d}:00,116.4,39.9")
        s = parse_csv(io.StringIO("\n".join(lines)), format="tdrive", q=24)
        before = s.record_count()
        split = preprocess_tdrive(s)
        assert split.record_count() == before
        assert all("_2008" in t.id for t in split)


class TestInvariants:
    def test_strict_monotonicity_enforced(self):
        with pytest.raises(TrajectoryError):
            Trajectory(
                "x",
                24,
                np.array([1, 2], np.uint32),
                np.array([1, 2], np.uint32),
                np.array([5, 5], np.int64),
            )

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=10_000),
                st.floats(min_value=-60, max_value=60),
                st.floats(min_value=-170, max_value=170),
            ),
            min_size=1,
            max_size=40,
        )
    )
    @settings(max_examples=80, deadline=None)
    def test_parsed_trajectories_strictly_monotone(self, rows):
        lines = [f"m,{t},{lat},{lon}" for t, lat, lon in rows]
        s = generic(lines)
        for tr in s:
            diffs = np.diff(tr.ts)
            assert np.all(diffs > 0)

    def test_reparse_idempotent(self):
        lines = ["a,5,10.5,20.5", "a,3,10.6,20.4", "b,9,0.0,0.0", "a,5,99,99"]
        s1 = generic(lines)
        serialized = []
        for tr in s1:
            for k in range(len(tr)):
                c = tile_centroid(tr.tile(k))
                serialized.append(f"{tr.id},{int(tr.ts[k])},{c.lat!r},{c.lon!r}")
        s2 = parse_csv(io.StringIO("\n".join(serialized) + "\n"), format="generic", q=24)
        assert [t.id for t in s2] == [t.id for t in s1]
        for a, b in zip(s1, s2):
            assert np.array_equal(a.xs, b.xs)
            assert np.array_equal(a.ys, b.ys)
            assert np.array_equal(a.ts, b.ts)

    def test_cumulative_distance_monotone_and_zero_based(self):
        tr = Trajectory(
            "c",
            24,
            np.array([100, 101, 101, 150], np.uint32),
            np.array([100, 100, 101, 150], np.uint32),
            np.array([0, 10, 20, 30], np.int64),
        )
        d = tr.cumulative_m()
        assert d[0] == 0.0
        assert np.all(np.diff(d) >= 0)
        assert d[1] > 0


class TestModalityFilter:
    def test_identity_default(self):
        s = generic(["a,1,10,10", "a,2,10.001,10"])
        assert modality_filter(s) == s

    def test_speed_glitch_removed(self):
        # Second record jumps ~111 km in 10 s: far over 50 m/s.
        s = generic(["a,0,10.0,10.0", "a,10,11.0,10.0", "a,20,10.0,10.0"])
        filtered = modality_filter(s, speed_threshold_predicate(50.0))
        tr = filtered.trajectories[0]
        assert len(tr) < 3

    def test_drop_all_yields_empty_set(self):
        s = generic(["a,1,10,10"])
        out = modality_filter(s, lambda tr, k: False)
        assert len(out) == 0


class TestSynthesis:
    def test_seed_reproducibility(self):
        grid = (24, 13813000, 6357000, 256, 256)
        a = synth_trajectories(7, 20, (2, 10), grid, model="road-grid")
        b = synth_trajectories(7, 20, (2, 10), grid, model="road-grid")
        assert a == b

    def test_different_seeds_differ(self):
        grid = (24, 1000, 1000, 64, 64)
        a = synth_trajectories(1, 10, (2, 10), grid)
        b = synth_trajectories(2, 10, (2, 10), grid)
        assert a != b

    def test_single_record_range(self):
        grid = (24, 1000, 1000, 64, 64)
        s = synth_trajectories(5, 10, (1, 1), grid, model="random-walk")
        assert all(len(t) == 1 for t in s)

    def test_empty_grid_rejected(self):
        with pytest.raises(ParameterError):
            synth_trajectories(1, 5, (1, 2), (24, 0, 0, 0, 10))

    def test_road_grid_stays_in_window(self):
        grid = (24, 500, 600, 80, 40)
        s = synth_trajectories(11, 50, (5, 30), grid)
        for tr in s:
            assert np.all((tr.xs >= 500) & (tr.xs < 580))
            assert np.all((tr.ys >= 600) & (tr.ys < 640))

    def test_zoom_recorded(self):
        s = synth_trajectories(3, 4, (2, 5), (20, 10, 10, 32, 32))
        assert s.q == 20
        assert make_set(s.trajectories, 20).q == 20
