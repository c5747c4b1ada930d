"""Per-tile reachability summaries and geospatial rasters from GPS trajectories.

Pipeline: parse trajectory CSVs into tile sequences, aggregate weighted
transition contributions into a reachability map with a deterministic
parallel reduce, then derive dense summaries, raster layers, and
verification reports from the map.
"""

from .engine import (
    ReachabilityMap,
    brute_force_reference,
    build_reachability_map,
    densify,
    densify_or_zero,
    export_dense_tensors,
    read_rsum,
    write_rsum,
)
from .errors import (
    FormatError,
    InvalidCoordinateError,
    MatrixSizeError,
    NeighborhoodError,
    ParameterError,
    TileReachError,
    TrajectoryError,
    WindowError,
    ZoomMismatchError,
)
from .geodesy import (
    EARTH_RADIUS_M,
    LatLon,
    TileCoord,
    haversine_m,
    in_neighborhood,
    initial_bearing_deg,
    latlon_to_tile,
    tile_centroid,
    tile_edge_m,
    tile_nw_corner,
    tile_offset,
)
from .trajectories import (
    Trajectory,
    TrajectorySet,
    modality_filter,
    parse_csv,
    preprocess_tdrive,
    synth_trajectories,
)
from .transitions import (
    SummaryParams,
    gaussian_weight,
    generate_contributions,
    inverse_index,
    mirror_index,
    row_major_index,
)

__version__ = "0.1.0"

__all__ = [
    "EARTH_RADIUS_M",
    "FormatError",
    "InvalidCoordinateError",
    "LatLon",
    "MatrixSizeError",
    "NeighborhoodError",
    "ParameterError",
    "ReachabilityMap",
    "SummaryParams",
    "TileCoord",
    "TileReachError",
    "Trajectory",
    "TrajectoryError",
    "TrajectorySet",
    "WindowError",
    "ZoomMismatchError",
    "brute_force_reference",
    "build_reachability_map",
    "densify",
    "densify_or_zero",
    "export_dense_tensors",
    "gaussian_weight",
    "generate_contributions",
    "haversine_m",
    "in_neighborhood",
    "initial_bearing_deg",
    "inverse_index",
    "latlon_to_tile",
    "mirror_index",
    "modality_filter",
    "parse_csv",
    "preprocess_tdrive",
    "read_rsum",
    "row_major_index",
    "synth_trajectories",
    "tile_centroid",
    "tile_edge_m",
    "tile_nw_corner",
    "tile_offset",
    "write_rsum",
]
