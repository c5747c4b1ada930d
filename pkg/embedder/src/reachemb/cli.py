"""Command line front end for the embedding trainer.

Subcommands:
    train           fit the autoencoder on a dense summary stack
    encode          run a checkpoint's encoder over a stack -> REMB
    check-jacobian  compare autodiff and finite-difference Jacobians

Exit codes: 0 success, 1 check failure, 2 unreadable or malformed
input, 3 usage error.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np
import torch

from .encode import encode_file
from .errors import ConfigError, FormatError, ReachEmbError
from .formats import read_rten
from .jacobian import DEFAULT_STEP, DEFAULT_TOLERANCE, check
from .model import EncoderConfig, load_checkpoint, save_checkpoint
from .train import load_training_tensors, to_network_input, train


class UsageError(ReachEmbError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; this tool reserves 2 for bad
    # input files, so remap parse failures to 3
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(3)


def cmd_train(args: argparse.Namespace) -> int:
    tensors = load_training_tensors(args.tensors)
    side = args.side if args.side is not None else int(tensors.shape[1])
    try:
        cfg = EncoderConfig(
            d_r=args.dr,
            side=side,
            lam=args.lam,
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            seed=args.seed,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    start = time.perf_counter()
    model, log = train(tensors, cfg)
    elapsed = time.perf_counter() - start
    print(f"samples={tensors.shape[0]}")
    print(f"side={cfg.side} dr={cfg.d_r} lambda={cfg.lam:g}")
    print(f"parameters={model.parameter_count()}")
    for row in log:
        print(
            f"epoch={row.epoch} rec={row.rec:.6e} con={row.con:.6e} "
            f"total={row.total:.6e}"
        )
    print(f"elapsed_s={elapsed:.3f}")
    save_checkpoint(args.out, model)
    print(f"wrote {args.out}")
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    count = encode_file(args.ckpt, args.tensors, args.out)
    print(f"embeddings={count}")
    print(f"wrote {args.out}")
    return 0


def cmd_check_jacobian(args: argparse.Namespace) -> int:
    model, cfg = load_checkpoint(args.ckpt)
    if args.tensors is not None:
        stack = read_rten(args.tensors)
        if stack.ndim != 4 or stack.shape[1] != cfg.side:
            raise ConfigError(
                f"tensor stack {stack.shape} does not match checkpoint side {cfg.side}"
            )
        samples = to_network_input(np.asarray(stack, np.float64))
    else:
        gen = torch.Generator().manual_seed(args.seed)
        raw = torch.rand((args.samples, cfg.side, cfg.side, 2), generator=gen, dtype=torch.float64)
        samples = torch.log1p(4.0 * raw).permute(0, 3, 1, 2).contiguous()
    n = min(args.samples, samples.shape[0])
    worst = None
    for i in range(n):
        report = check(model, samples[i], step=args.step, tolerance=args.tolerance)
        if worst is None or report.max_rel_error > worst.max_rel_error:
            worst = report
    assert worst is not None
    print(f"samples={n}")
    for line in worst.to_lines():
        print(line)
    return 0 if worst.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reachemb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the autoencoder on a summary stack")
    p.add_argument("--tensors", required=True, help="dense summary stack (with .idx sidecar)")
    p.add_argument("--dr", type=int, default=16, help="embedding dimension")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5, help="contractive weight")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--side", type=int, default=None, help="expected summary side (default: inferred)")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="emit embeddings for a summary stack")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--tensors", required=True)
    p.add_argument("--out", required=True, help="embedding table path")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("check-jacobian", help="autodiff vs finite differences")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--tensors", default=None, help="take samples from this stack instead of synthetic ones")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_jacobian)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReachEmbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
