"""
Activity rasters over a tile window
===================================

Rasters aggregate records per tile into image-like arrays: plain counts
(CRM), heading-bucketed counts (HCRM, 12 channels of 30 degrees),
speed-bucketed counts (SC, 14 channels of 5 mph), and a binary road
network presence mask traced from WKT linestrings (RNP).
"""

import io

import numpy as np

from tilereach import TileCoord, synth_trajectories, tile_centroid
from tilereach.rasters import (
    Window,
    crm,
    embedding_raster,
    fuse_channels,
    hcrm,
    log_normalize,
    parse_linestrings,
    rnp,
    sc,
    write_raster,
)

window = Window(TileCoord(24, 5000, 6000), 64, 64)
trips = synth_trajectories(seed=11, m=120, n_range=(8, 24),
                           grid=(24, 5000, 6000, 64, 64))

counts = crm(trips, window)
print("CRM:", counts.data.shape, "records in window:", int(counts.data.sum()))

headings = hcrm(trips, window)
speeds = sc(trips, window)
print("HCRM:", headings.data.shape, "SC:", speeds.data.shape)
print("busiest heading bucket:", headings.channel_names[int(headings.data.sum((0, 1)).argmax())])
print("busiest speed bucket:", speeds.channel_names[int(speeds.data.sum((0, 1)).argmax())])

# Roads come in as WKT; the tracer marks every tile the segment passes
# through, including both side cells at exact corner crossings.
a = tile_centroid(TileCoord(24, 5004, 6010))
b = tile_centroid(TileCoord(24, 5050, 6030))
wkt = io.StringIO(f"LINESTRING({a.lon} {a.lat}, {b.lon} {b.lat})\n")
roads = rnp(parse_linestrings(wkt), window)
print("RNP tiles touched:", int(roads.data.sum()))

# Compress heavy-tailed counts and stack everything into one cube.
fused = fuse_channels([log_normalize(counts), headings, speeds, roads])
print("fused channels:", fused.c, "=", fused.channel_names[:3], "...")

write_raster("/tmp/demo_fused.rten", fused)
print("wrote /tmp/demo_fused.rten (+ .meta sidecar)")
print("nonzero cells:", int(np.count_nonzero(fused.data.sum(axis=2))))

# Learned per-tile vectors (normally read from a REMB file) scatter into
# a d_R-channel plane; tiles without a vector stay exactly zero.
table = {(5010, 6010): np.array([1.0, 0.0, 0.5]),
         (5011, 6010): np.array([0.9, 0.1, 0.4])}
emb = embedding_raster(table, window, d_r=3)
lit = np.argwhere(emb.data.any(axis=2))
print("embedding raster:", emb.data.shape, "lit pixels:", lit.tolist())
