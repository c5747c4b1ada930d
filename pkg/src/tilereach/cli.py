"""Command-line front end for the tile reachability pipeline.

Subcommands cover the full workflow: preprocess raw taxi logs, build
reachability summaries, export dense tensors, render rasters, verify
the Chapman-Kolmogorov identity, synthesize datasets, and benchmark
the reduce engine. Every command is deterministic given its flags and
seed; benchmark wall times are the one exception.

Exit codes: 0 success, 1 verification failure, 2 input or format
error, 3 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .bench import (
    DEFAULT_REPEATS,
    PRESET_SIZES,
    dataset_digest,
    preset_set,
    run_scaling,
    run_trajectory_sweep,
)
from .engine import build_reachability_map, export_dense_tensors, read_rsum, write_rsum
from .errors import FormatError, TileReachError
from .formats import atomic_write, read_remb
from .geodesy import TileCoord, tile_centroid
from .markov import FAIL, cke_verify
from .rasters import (
    Window,
    crm,
    embedding_raster,
    hcrm,
    log_normalize,
    parse_linestrings,
    rnp,
    sc,
    write_raster,
)
from .trajectories import (
    TrajectorySet,
    make_set,
    parse_csv,
    preprocess_tdrive,
    synth_trajectories,
)
from .transitions import (
    DEFAULT_DELTA_R,
    DEFAULT_SIGMA_D,
    DEFAULT_SIGMA_T,
    WEIGHTING_GAUSSIAN,
    WEIGHTING_UNIT,
    SummaryParams,
)

WORKERS_ENV = "REACH_WORKERS"


class UsageError(Exception):
    """Bad flag combination caught after parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; this CLI reserves 2 for
    # input errors, so remap parse failures to 3.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


def _workers(args) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError(f"--workers must be >= 1, got {args.workers}")
        return args.workers
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    if n < 1:
        raise UsageError(f"{WORKERS_ENV} must be >= 1, got {n}")
    return n


def _summary_params(args) -> SummaryParams:
    if args.weighting == WEIGHTING_GAUSSIAN:
        if args.sigma_d is None or args.sigma_t is None:
            raise UsageError("gaussian weighting requires --sigma-d and --sigma-t")
        return SummaryParams(args.zoom, args.delta_r, WEIGHTING_GAUSSIAN,
                             args.sigma_d, args.sigma_t)
    if args.sigma_d is not None or args.sigma_t is not None:
        raise UsageError("--sigma-d/--sigma-t only apply to gaussian weighting")
    return SummaryParams(args.zoom, args.delta_r, WEIGHTING_UNIT)


def _load_set(path: str, fmt: str, q: int, t0=None, dt=None) -> TrajectorySet:
    with open(path, "r", encoding="utf-8") as fh:
        s = parse_csv(fh, format=fmt, q=q, t0=t0, dt=dt)
    if fmt == "tdrive":
        s = preprocess_tdrive(s)
    return s


def _parse_window(text: str, q: int) -> Window:
    parts = text.split(",")
    if len(parts) not in (2, 4):
        raise UsageError(f"--window takes X,Y or X,Y,H,W, got {text!r}")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"--window components must be integers, got {text!r}")
    x, y = nums[0], nums[1]
    h, w = (nums[2], nums[3]) if len(nums) == 4 else (256, 256)
    return Window(TileCoord(q, x, y), h, w)


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        vals = [int(p) for p in text.split(",") if p]
    except ValueError:
        raise UsageError(f"{flag} takes a comma-separated integer list, got {text!r}")
    if not vals:
        raise UsageError(f"{flag} list is empty")
    return vals


def _write_generic_csv(s: TrajectorySet, path: str) -> None:
    # Coordinates are written as tile centroids: they reparse to the
    # same tile at the same zoom, so the round trip is lossless.
    lines = ["mover_id,epoch_seconds,lat,lon"]
    for tr in s.trajectories:
        for k in range(len(tr)):
            p = tile_centroid(tr.tile(k))
            lines.append(f"{tr.id},{tr.ts[k]},{p.lat!r},{p.lon!r}")
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def cmd_summarize(args) -> int:
    params = _summary_params(args)
    s = _load_set(args.input, args.format, args.zoom, t0=args.t0, dt=args.dt)
    start = time.perf_counter()
    m = build_reachability_map(s, params, workers=_workers(args))
    elapsed = time.perf_counter() - start
    write_rsum(m, args.output)
    emission, absorption = m.total_weight()
    print(f"nodes={len(m)}")
    print(f"total_mass={emission + absorption:.12g}")
    print(f"elapsed_s={elapsed:.3f}")
    print(f"wrote {args.output}")
    return 0


def cmd_rasterize(args) -> int:
    window = _parse_window(args.window, args.zoom)
    kind = args.kind
    if kind in ("crm", "hcrm", "sc"):
        if args.input is None:
            raise UsageError(f"--kind {kind} requires --input")
        s = _load_set(args.input, args.format, args.zoom)
        raster = {"crm": crm, "hcrm": hcrm, "sc": sc}[kind](s, window)
    elif kind == "rnp":
        if args.roads is None:
            raise UsageError("--kind rnp requires --roads")
        with open(args.roads, "r", encoding="utf-8") as fh:
            roads = parse_linestrings(fh)
        raster = rnp(roads, window)
    else:  # embedding
        if args.embeddings is None:
            raise UsageError("--kind embedding requires --embeddings")
        nodes, vectors = read_remb(args.embeddings)
        raster = embedding_raster((nodes, vectors), window, args.dr)
    if args.log_normalize:
        raster = log_normalize(raster)
    write_raster(args.output, raster)
    print(f"kind={kind}")
    print(f"shape={raster.data.shape[0]}x{raster.data.shape[1]}x{raster.c}")
    print(f"wrote {args.output}")
    return 0


def cmd_preprocess_tdrive(args) -> int:
    if os.path.isdir(args.input):
        paths = sorted(
            os.path.join(args.input, name)
            for name in os.listdir(args.input)
            if os.path.isfile(os.path.join(args.input, name))
        )
        if not paths:
            raise FormatError(f"no files in directory {args.input}")
    else:
        paths = [args.input]
    merged = []
    taxis = set()
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            part = parse_csv(fh, format="tdrive", q=args.zoom)
        merged.extend(part.trajectories)
        taxis.update(tr.id for tr in part.trajectories)
    s = preprocess_tdrive(make_set(merged, args.zoom))
    _write_generic_csv(s, args.output)
    print(f"taxis={len(taxis)}")
    print(f"trajectories={len(s)}")
    print(f"records={s.record_count()}")
    print(f"wrote {args.output}")
    return 0


def cmd_verify_cke(args) -> int:
    if (args.rsum is None) == (args.input is None):
        raise UsageError("pass exactly one of --rsum or --input")
    if args.rsum is not None:
        m = read_rsum(args.rsum)
        report = cke_verify(m, tolerance=args.tolerance)
    else:
        s = _load_set(args.input, args.format, args.zoom)
        # Widen the neighborhood until every observed transition fits,
        # so truncation cannot mask a real failure.
        delta = 1
        for tr in s.trajectories:
            if len(tr) > 1:
                span = max(
                    int(tr.xs.max()) - int(tr.xs.min()),
                    int(tr.ys.max()) - int(tr.ys.min()),
                )
                delta = max(delta, span)
        params = SummaryParams(args.zoom, delta, WEIGHTING_UNIT)
        m = build_reachability_map(s, params, workers=_workers(args))
        report = cke_verify(m, trajectories=s, tolerance=args.tolerance)
    for line in report.to_lines():
        print(line)
    return 1 if report.status == FAIL else 0


def cmd_bench(args) -> int:
    workers_list = _parse_int_list(args.workers, "--workers")
    if any(w < 1 for w in workers_list):
        raise UsageError("--workers entries must be >= 1")
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    params = SummaryParams(args.zoom, args.delta_r, WEIGHTING_UNIT)
    if args.sweep_trajectories:
        sizes = _parse_int_list(args.sweep_trajectories, "--sweep-trajectories")
        fixed = max(workers_list)
        report, exponent = run_trajectory_sweep(
            sizes, fixed, args.seed, params, repeats=args.repeats
        )
        print(f"sweep_workers={fixed}")
        print(f"power_law_exponent={exponent:.4f}")
    else:
        if args.input is not None:
            s = _load_set(args.input, args.format, args.zoom)
        else:
            s = preset_set(args.preset, args.seed)
        report = run_scaling(s, params, workers_list, repeats=args.repeats)
        for w in workers_list:
            label = report.rows[0].dataset
            print(f"workers={w} median_s={report.median_seconds(label, w):.4f}")
    atomic_write(args.output, report.csv().encode())
    print(f"digest={report.digest}")
    print(f"wrote {args.output}")
    return 0


def cmd_gen_synthetic(args) -> int:
    n_range = tuple(_parse_int_list(args.n_range, "--n-range"))
    if len(n_range) != 2:
        raise UsageError(f"--n-range takes LO,HI, got {args.n_range!r}")
    grid_vals = _parse_int_list(args.grid, "--grid")
    if len(grid_vals) != 4:
        raise UsageError(f"--grid takes X0,Y0,W,H, got {args.grid!r}")
    grid = (args.zoom, *grid_vals)
    s = synth_trajectories(args.seed, args.count, n_range, grid, model=args.model)
    _write_generic_csv(s, args.output)
    print(f"trajectories={len(s)}")
    print(f"records={s.record_count()}")
    print(f"digest={dataset_digest(s)}")
    print(f"wrote {args.output}")
    return 0


def cmd_export_tensors(args) -> int:
    m = read_rsum(args.rsum)
    nodes = export_dense_tensors(m, args.output, dtype=args.dtype)
    side = 2 * m.params.delta_r + 1
    print(f"nodes={len(nodes)}")
    print(f"tensor_dims={len(nodes)}x{side}x{side}x2")
    print(f"wrote {args.output}")
    return 0


def _add_input_flags(p, required=True):
    p.add_argument("--input", required=required, help="trajectory CSV path")
    p.add_argument("--format", choices=("generic", "tdrive"), default="generic")
    p.add_argument("--zoom", type=int, default=24, help="tile zoom level")


def _add_sigma_flags(p):
    p.add_argument("--weighting", choices=(WEIGHTING_UNIT, WEIGHTING_GAUSSIAN),
                   default=WEIGHTING_UNIT)
    p.add_argument("--sigma-d", type=float, default=None,
                   help=f"distance kernel width in meters (e.g. {DEFAULT_SIGMA_D:g})")
    p.add_argument("--sigma-t", type=float, default=None,
                   help=f"time kernel width in seconds (e.g. {DEFAULT_SIGMA_T:g})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tilereach", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", parents=[], help="build a reachability summary map")
    _add_input_flags(p)
    p.add_argument("--delta-r", type=int, default=DEFAULT_DELTA_R,
                   help="neighborhood radius in tiles")
    _add_sigma_flags(p)
    p.add_argument("--workers", type=int, default=None,
                   help=f"parallel workers (default ${WORKERS_ENV} or 1)")
    p.add_argument("--t0", type=int, default=None, help="window start epoch seconds")
    p.add_argument("--dt", type=int, default=None, help="window length seconds")
    p.add_argument("--output", required=True, help="RSUM output path")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("rasterize", help="render a raster over a tile window")
    p.add_argument("--kind", required=True,
                   choices=("crm", "hcrm", "sc", "rnp", "embedding"))
    p.add_argument("--window", required=True, help="X,Y or X,Y,H,W tile window")
    _add_input_flags(p, required=False)
    p.add_argument("--roads", default=None, help="WKT LINESTRING file for rnp")
    p.add_argument("--embeddings", default=None, help="REMB file for embedding rasters")
    p.add_argument("--dr", type=int, default=16, help="embedding dimension")
    p.add_argument("--log-normalize", action="store_true",
                   help="apply ln(1+x) to every cell")
    p.add_argument("--output", required=True, help="raster output path")
    p.set_defaults(func=cmd_rasterize)

    p = sub.add_parser("preprocess-tdrive", help="split taxi logs into daily trajectories")
    p.add_argument("--input", required=True, help="taxi log file or directory")
    p.add_argument("--zoom", type=int, default=24)
    p.add_argument("--output", required=True, help="generic CSV output path")
    p.set_defaults(func=cmd_preprocess_tdrive)

    p = sub.add_parser("verify-cke", help="check the Chapman-Kolmogorov identity")
    p.add_argument("--rsum", default=None, help="verify an existing RSUM file")
    p.add_argument("--input", default=None, help="build from trajectories, then verify")
    p.add_argument("--format", choices=("generic", "tdrive"), default="generic")
    p.add_argument("--zoom", type=int, default=24)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_verify_cke)

    p = sub.add_parser("bench", help="strong-scaling benchmark of the reduce engine")
    p.add_argument("--preset", type=int, choices=PRESET_SIZES, default=8000,
                   help="synthetic dataset size")
    p.add_argument("--input", default=None, help="benchmark a real CSV instead")
    p.add_argument("--format", choices=("generic", "tdrive"), default="generic")
    p.add_argument("--zoom", type=int, default=24)
    p.add_argument("--delta-r", type=int, default=DEFAULT_DELTA_R)
    p.add_argument("--workers", default="1,2,4,8", help="comma-separated worker counts")
    p.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep-trajectories", default=None,
                   help="comma-separated dataset sizes; fit runtime vs size instead")
    p.add_argument("--output", required=True, help="CSV output path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-synthetic", help="write a synthetic trajectory CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, required=True, help="number of trajectories")
    p.add_argument("--model", choices=("random-walk", "road-grid"), default="road-grid")
    p.add_argument("--zoom", type=int, default=24)
    p.add_argument("--n-range", default="16,48", help="LO,HI records per trajectory")
    p.add_argument("--grid", default="13813458,6357200,256,256",
                   help="X0,Y0,W,H tile region")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("export-tensors", help="densify an RSUM into an RTEN tensor")
    p.add_argument("--rsum", required=True)
    p.add_argument("--dtype", choices=("f32", "f64"), default="f64")
    p.add_argument("--output", required=True, help="RTEN output path (writes .idx too)")
    p.set_defaults(func=cmd_export_tensors)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tilereach: error: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"tilereach: format error: {exc}", file=sys.stderr)
        return 2
    except (OSError, UnicodeDecodeError) as exc:
        print(f"tilereach: input error: {exc}", file=sys.stderr)
        return 2
    except TileReachError as exc:
        print(f"tilereach: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
