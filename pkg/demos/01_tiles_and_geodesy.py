"""
Tile coordinates and geodesy basics
===================================

Every other capability builds on the zoom-q tile grid: a 2^q by 2^q
partition of the Web Mercator plane. This walks the coordinate helpers.
"""

from tilereach import (
    LatLon,
    TileCoord,
    haversine_m,
    initial_bearing_deg,
    latlon_to_tile,
    tile_centroid,
    tile_edge_m,
)

# A point in central Beijing, and the tile that contains it at zoom 24.
p = LatLon(39.9042, 116.4074)
tile = latlon_to_tile(p, 24)
print("point:", p)
print("zoom-24 tile:", tile)

# Tiles know their centroid; re-projecting the centroid lands back in
# the same tile, which is what makes centroid round trips safe.
c = tile_centroid(tile)
print("centroid:", c)
print("round trip:", latlon_to_tile(c, 24) == tile)

# Tile edge length at the equator halves with every zoom level.
for q in (14, 18, 24):
    print(f"edge at zoom {q}: {tile_edge_m(q):.2f} m")

# Great-circle distance and initial bearing between two points.
q2 = LatLon(39.9100, 116.4200)
print(f"distance: {haversine_m(p, q2):.1f} m")
print(f"bearing: {initial_bearing_deg(p, q2):.1f} deg (0 = north, clockwise)")

# Neighborhoods: offsets are (dx, dy) with y growing southward.
a = TileCoord(24, 1000, 2000)
b = TileCoord(24, 1003, 1998)
from tilereach import in_neighborhood, tile_offset

print("offset a->b:", tile_offset(a, b))
print("within radius 3:", in_neighborhood(a, b, 3))
print("within radius 2:", in_neighborhood(a, b, 2))
