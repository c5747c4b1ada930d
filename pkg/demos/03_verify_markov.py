"""
Markov-chain verification of the channels
=========================================

Normalizing absorption channels row-wise gives a transition matrix P
over active tiles. Summing P squared must then match a quantity
assembled purely from per-node channel masses; a residual above
tolerance means the channel construction is broken.
"""

from tilereach import SummaryParams, build_reachability_map, synth_trajectories
from tilereach.markov import build_transition_matrix, cke_verify, contribution

trips = synth_trajectories(seed=3, m=60, n_range=(8, 20),
                           grid=(24, 5000, 6000, 64, 64))

# The identity only applies when no observed pair falls outside the
# neighborhood, so size delta_r from the data's largest coordinate span.
span = max(
    max(int(tr.xs.max()) - int(tr.xs.min()), int(tr.ys.max()) - int(tr.ys.min()))
    for tr in trips
)
params = SummaryParams(q=24, delta_r=max(span, 1), weighting="unit")
print("widest trajectory span:", span, "tiles")
m = build_reachability_map(trips, params)

report = cke_verify(m, trajectories=trips)
print(report.as_text())

# The same decomposition at the single-entry level: a two-step
# transition through one intermediate state.
tm = build_transition_matrix(m)
n = tm.p.shape[0]
s2, s3 = 0, min(1, n - 1)
total = sum(contribution(tm, mid, s2, s3) for mid in range(n))
direct = float((tm.p @ tm.p)[s2, s3])
print(f"two-step mass via contributions: {total:.12f}")
print(f"two-step mass via P squared:     {direct:.12f}")
