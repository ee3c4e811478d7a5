"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat N] [--size N]

The first numba call (compilation or cache load) is done before timing.
"""
import argparse
import timeit

import numpy as np

from fronthaul_mimo import kernels
from fronthaul_mimo.quantizer import calibrate_step


def cases(size, rng):
    x = rng.normal(size=size)
    var = rng.uniform(0.5, 2.0, size=max(size // 1000, 1))
    for bits in (1, 4, 8):
        step = calibrate_step(bits, 2.0, 1e-4)
        L = 2 ** bits
        yield f"quantize      Q={bits} n={size}", kernels.quantize_flat_numba, kernels.quantize_flat_numpy, (x, step, L)
        yield (f"bussgang_gain Q={bits} n={var.size}", kernels.bussgang_gain_flat_numba,
               kernels.bussgang_gain_flat_numpy, (var, step, L))
        yield (f"output_power  Q={bits} n={var.size}", kernels.output_power_flat_numba,
               kernels.output_power_flat_numpy, (var, step, L))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=1_000_000)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, fast, ref, a in cases(args.size, rng):
        np.testing.assert_allclose(fast(*a), ref(*a), rtol=1e-12)
        t_fast = min(timeit.repeat(lambda: fast(*a), number=1, repeat=args.repeat))
        t_ref = min(timeit.repeat(lambda: ref(*a), number=1, repeat=args.repeat))
        print(f"{name:32s} {1e3 * t_fast:10.3f} {1e3 * t_ref:10.3f} {t_ref / t_fast:8.2f}")


if __name__ == "__main__":
    main()
