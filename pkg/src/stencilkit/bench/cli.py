"""``bench`` command line: Jacobi runs, weak scaling, and variant cross-checks."""

import argparse
import sys

from ..arch import make_arch
from ..context import library
from ..errors import StencilError
from .jacobi import VARIANTS, BenchmarkConfig, run_jacobi, run_weak_scaling, verify
from .report import emit_csv


def _ints(text):
    try:
        vals = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _common(p, with_variant=True):
    if with_variant:
        p.add_argument("--variant", choices=VARIANTS, default="fused")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--size", type=_ints, default=(256,),
                   help="core extent per dimension, one value for a cube")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--arch", default=None, help="comma separated levels, e.g. tiled,sequential")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default="-", help="output path, '-' for stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="bench", description=__doc__)
    parser.add_argument("--print-arch", action="store_true",
                        help="print the resolved architecture, one level per line, and exit")
    sub = parser.add_subparsers(dest="command")

    _common(sub.add_parser("jacobi", help="run one Jacobi variant"))

    weak = sub.add_parser("weak", help="weak scaling with one tile per worker")
    weak.add_argument("--tile", type=_ints, default=(256, 256))
    weak.add_argument("--workers-list", type=_ints, default=(1, 2, 4))
    weak.add_argument("--iters", type=int, default=100)
    weak.add_argument("--arch", default="tiled,sequential")
    weak.add_argument("--seed", type=int, default=0)
    weak.add_argument("--reps", type=int, default=1)
    weak.add_argument("--csv", default="-")

    _common(sub.add_parser("verify", help="cross-check fused, two-pass and baseline"),
            with_variant=False)
    return parser


def _config(args, variant):
    size = args.size * args.dim if len(args.size) == 1 else args.size
    return BenchmarkConfig(variant=variant, dim=args.dim, extents=size, epsilon=args.epsilon,
                           max_iters=args.max_iters, arch=args.arch, workers=args.workers,
                           reps=args.reps, seed=args.seed)


def _dispatch(args):
    if args.print_arch:
        arch = make_arch(args.arch, args.workers) if getattr(args, "arch", None) else \
            library().default_arch()
        print(arch.report())
        return 0
    if args.command == "jacobi":
        emit_csv([run_jacobi(_config(args, args.variant))], args.csv)
        return 0
    if args.command == "weak":
        base = BenchmarkConfig(dim=len(args.tile), extents=args.tile, arch=args.arch,
                               reps=args.reps, seed=args.seed)
        emit_csv(run_weak_scaling(args.tile, args.workers_list, base, args.iters), args.csv)
        return 0
    if args.command == "verify":
        report = verify(_config(args, "fused"))
        emit_csv(list(report.records.values()), args.csv)
        for line in report.lines():
            print(line, file=sys.stderr)
        return 0 if report.ok else 1
    return None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.print_arch and args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    lib = library()
    lib.init()
    try:
        return _dispatch(args)
    except (StencilError, ValueError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2
    finally:
        lib.finalize()


if __name__ == "__main__":
    sys.exit(main())
