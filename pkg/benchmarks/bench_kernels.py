"""Compiled versus NumPy kernel timings on link-sized workloads.

    python benchmarks/bench_kernels.py [--batch 64] [--K 1023] [--repeats 7]
"""

import argparse
import statistics
import time

import numpy as np

from afpulse import kernels
from afpulse.pulse_filters import PulseKind, PulseShape, design


def _median_time(fn, repeats):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--K", type=int, default=1023)
    ap.add_argument("--M", type=int, default=24)
    ap.add_argument("--mu", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args(argv)

    taps = design(PulseShape(PulseKind.SRRC, 0.05), args.M, args.mu).taps
    rng = np.random.default_rng(0)
    k1 = args.K + 1
    sym = rng.standard_normal((args.batch, k1))
    wave = rng.standard_normal((args.batch, args.mu * k1))
    col = rng.standard_normal(k1)
    col[0] += k1

    cases = {
        "interp_filter": lambda impl: kernels.interp_filter(sym, taps, args.mu, impl=impl),
        "fir_same": lambda impl: kernels.fir_same(wave, taps, impl=impl),
        "decim_filter": lambda impl: kernels.decim_filter(wave, taps, args.mu, k1, impl=impl),
        "trench_block": lambda impl: kernels.trench_block(col, 0, 2 * args.M // args.mu + 1, impl=impl),
    }
    py = kernels.backend_module("python")
    try:
        cy = kernels.backend_module("cython")
    except ImportError:
        cy = None
    print(f"{'kernel':<14} {'python_s':>12} {'cython_s':>12} {'speedup':>8}")
    for name, run in cases.items():
        t_py = _median_time(lambda: run(py), args.repeats)
        if cy is not None:
            t_c = _median_time(lambda: run(cy), args.repeats)
            print(f"{name:<14} {t_py:12.3e} {t_c:12.3e} {t_py / t_c:8.2f}")
        else:
            print(f"{name:<14} {t_py:12.3e} {'n/a':>12} {'':>8}")


if __name__ == "__main__":
    main()
