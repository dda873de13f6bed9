"""Compare the compiled (numba) and pure-numpy kernel paths.

Runs the fused and baseline Jacobi variants under both kernel modes and prints
per-element times. Usage::

    python3 benchmarks/bench_kernels.py --size 1000 --reps 5
"""

import argparse

from stencilkit import library, set_kernel_mode
from stencilkit.bench import BenchmarkConfig, run_jacobi


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--reps", type=int, default=5)
    args = p.parse_args(argv)

    lib = library()
    lib.init()
    print(f"{'mode':<7}{'variant':<10}{'iters':>6}{'per_element_s':>16}  checksum")
    try:
        for mode in ("numba", "numpy"):
            previous = set_kernel_mode(mode)
            for variant in ("fused", "two-pass", "baseline"):
                cfg = BenchmarkConfig(variant=variant, dim=args.dim, extents=(args.size,),
                                      arch="sequential", reps=args.reps)
                rec = run_jacobi(cfg)
                print(f"{mode:<7}{variant:<10}{rec.iterations:>6}{rec.per_element_s:>16.4e}"
                      f"  {rec.checksum}")
            set_kernel_mode(previous)
    finally:
        lib.finalize()


if __name__ == "__main__":
    main()
