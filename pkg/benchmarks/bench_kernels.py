"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N wall time of each backend,
the speedup and the maximum difference between their outputs.
"""

import argparse
import timeit

import numpy as np

from driftdiff import fft, kernels
from driftdiff import _kernels_py


def cases():
    rng = np.random.default_rng(0)
    src1 = rng.random(4096)
    src3 = rng.random(32 ** 3)
    walk_start = rng.integers(0, 64, size=65536).astype(np.int64)
    walk_u = rng.random((65536, 50))
    thr = np.array([0.2, 0.6])
    buf = (rng.standard_normal((1, 1024, 256)) + 0j)
    rev, tw = fft._plan(1024, -1)
    yield "evolve 1-D n=4096 x200", lambda k: k.evolve(src1, 200, 4096, 1, 0.2, 0.45, 0.35)
    yield "evolve 3-D n=32 x20", lambda k: k.evolve(src3, 20, 32, 3, 0.1, 0.16, 0.14)
    yield "walk 65536 walkers x50", lambda k: k.walk(walk_start, walk_u, thr, 64, 1)

    def run_fft(k):
        b = buf.copy()
        k.fft_axis(b, rev, tw)
        return b

    yield "fft axis n=1024 x256", run_fft


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.compiled_available():
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    ext = kernels.get_backend("cython")
    print(f"{'kernel':<26}{'cython [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}{'max diff':>11}")
    for name, fn in cases():
        tc = min(timeit.repeat(lambda: fn(ext), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        diff = float(np.abs(np.asarray(fn(ext)) - np.asarray(fn(_kernels_py))).max())
        print(f"{name:<26}{tc * 1e3:>12.2f}{tp * 1e3:>12.2f}{tp / tc:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
