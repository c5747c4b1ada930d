"""
Parsing taxi logs
=================

Raw taxi logs arrive as `id,timestamp,longitude,latitude` lines in
Beijing local time. Parsing sorts and deduplicates per mover; the
preprocessing step then splits each mover at local midnight so one
trajectory never spans two days.
"""

import io

from tilereach import parse_csv, preprocess_tdrive

LOG = """\
1,2008-02-02 15:36:08,116.51172,39.92123
1,2008-02-02 15:46:08,116.51135,39.93883
1,2008-02-02 23:55:00,116.52000,39.92000
1,2008-02-03 00:05:00,116.52010,39.92010
2,2008-02-02 13:30:44,116.36422,39.88781
2,2008-02-02 13:30:44,116.36500,39.88800
2,2008-02-02 13:35:44,116.37007,39.89008
"""

per_taxi = parse_csv(io.StringIO(LOG), format="tdrive", q=24)
print("taxis:", len(per_taxi))
print("duplicate timestamps dropped:", per_taxi.stats.duplicates_dropped)

daily = preprocess_tdrive(per_taxi)
for tr in daily:
    print(f"  {tr.id}: {len(tr)} records, first tile ({tr.xs[0]}, {tr.ys[0]})")

# The generic CSV format is the lingua franca for everything else:
# mover_id,epoch_seconds,lat,lon with an optional header.
generic = io.StringIO("mover_id,epoch_seconds,lat,lon\nbike7,1000,39.90,116.40\nbike7,1060,39.91,116.41\n")
print("generic records:", parse_csv(generic, q=24).record_count())
