"""Compare the compiled convolution kernels against the pure-Python fallback.

Runs each kernel on a few representative workloads with both backends and
prints per-call times plus the compiled-over-python speedup.  If the
extension is not built, only the python column is reported.

Usage:
    python3 benchmarks/bench_kernels.py [--reps 20] [--seed 0]
"""

import argparse
import time

import numpy as np

from primsel.kernels.api import (
    HAVE_COMPILED,
    conv_direct,
    conv_im2col,
    conv_sum2d,
)
from primsel.kernels.tensors import random_kernel, random_tensor, transform_layout
from primsel.model import DataFormat, Scenario

WORKLOADS = (
    ("3x32x32 k11 s4 m12", Scenario(3, 32, 32, 4, 11, 12)),
    ("12x16x16 k5 s1 m24", Scenario(12, 16, 16, 1, 5, 24)),
    ("24x8x8 k3 s1 m36", Scenario(24, 8, 8, 1, 3, 36)),
)


def _time_call(fn, reps):
    fn()  # warm up
    best = None
    for _ in range(reps):
        start = time.perf_counter_ns()
        fn()
        elapsed = time.perf_counter_ns() - start
        best = elapsed if best is None else min(best, elapsed)
    return best / 1000.0  # us


def _kernel_calls(s, rng):
    chw = random_tensor(s.input_shape, DataFormat("chw"), rng)
    hwc = transform_layout(chw, DataFormat("hwc"))
    kern = random_kernel(s.m, s.c, s.k, rng)
    return (
        ("direct chw", lambda b: conv_direct(chw, kern, s.delta, backend=b)),
        ("direct hwc", lambda b: conv_direct(hwc, kern, s.delta, backend=b)),
        ("im2col chw", lambda b: conv_im2col(chw, kern, s.delta, backend=b)),
        ("sum2d  chw", lambda b: conv_sum2d(chw, kern, s.delta, backend=b)),
    )


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=20,
                        help="timed repetitions per kernel (best-of)")
    parser.add_argument("--seed", type=int, default=0, help="input tensor seed")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    if not HAVE_COMPILED:
        print("note: compiled extension not built, timing the fallback only")
    header = f"{'workload':<20} {'kernel':<12} {'python us':>12}"
    if HAVE_COMPILED:
        header += f" {'compiled us':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, s in WORKLOADS:
        for kname, call in _kernel_calls(s, rng):
            py = _time_call(lambda: call("python"), args.reps)
            row = f"{label:<20} {kname:<12} {py:>12.1f}"
            if HAVE_COMPILED:
                cc = _time_call(lambda: call("compiled"), args.reps)
                row += f" {cc:>12.1f} {'x%.2f' % (py / cc):>9}"
            print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
