"""
Strong-scaling measurements
===========================

run_scaling times the reduce at several worker counts and reports
per-run efficiency against the ideal extrapolated from the baseline.
On a single-core box the numbers only show overhead; on real hardware
the 64000-trip preset is the interesting one.
"""

from tilereach import SummaryParams, synth_trajectories
from tilereach.bench import run_scaling, run_trajectory_sweep

params = SummaryParams(q=24, delta_r=8, weighting="unit")
trips = synth_trajectories(seed=5, m=400, n_range=(16, 48),
                           grid=(24, 13813458, 6357200, 256, 256))

report = run_scaling(trips, params, [1, 2], repeats=3)
print(report.csv())
print("dataset digest:", report.digest[:16], "...")
print("median 1 worker :", f"{report.median_seconds(400, 1):.4f}s")
print("median 2 workers:", f"{report.median_seconds(400, 2):.4f}s")

# Runtime versus dataset size at a fixed worker count; the fitted
# log-log slope summarizes how cost grows with trip count.
sweep, exponent = run_trajectory_sweep([100, 200, 400], workers=1, seed=5,
                                       params=params, repeats=3)
print(f"runtime ~ trips^{exponent:.2f}")
