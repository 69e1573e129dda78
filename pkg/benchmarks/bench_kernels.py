"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints, per kernel and problem size, the best wall time of each variant,
the speed-up and the largest difference between the two results.  The
last block times a whole arrival-time distribution with each backend.
"""
import argparse
import time

import numpy as np

from toarrival import _accel, kernels
from toarrival import arrival as ar


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_chirp(repeat, rng):
    print("chirp_sum  (targets x nodes)")
    for K, J in ((64, 20_000), (512, 20_000), (2048, 100_000)):
        p = np.sort(rng.uniform(0, 20, J))
        A = rng.normal(size=J) + 1j * rng.normal(size=J)
        a = rng.uniform(-5, 5, K)
        b = rng.uniform(-2, 2, K)
        kernels.chirp_sum_numba(p[:10], A[:10], a[:2], b[:2])  # compile outside the timing
        tn, vn = best_of(lambda: kernels.chirp_sum_numba(p, A, a, b), repeat)
        tp, vp = best_of(lambda: kernels.chirp_sum_numpy(p, A, a, b), repeat)
        diff = np.max(np.abs(vn - vp)) / np.max(np.abs(vp))
        print(f"  {K:5d} x {J:7d}   numba {tn:8.4f} s   numpy {tp:8.4f} s   x{tp / tn:6.1f}   rel.diff {diff:.1e}")


def bench_horner(repeat, rng):
    print("horner  (terms x points)")
    for n, N in ((40, 10_000), (40, 1_000_000)):
        c = rng.normal(size=n)
        z = rng.normal(size=N) * 0.3 + 0.3j * rng.normal(size=N)
        kernels.horner_numba(c, z[:4])
        tn, vn = best_of(lambda: kernels.horner_numba(c, z), repeat)
        tp, vp = best_of(lambda: kernels.horner_numpy(c, z), repeat)
        diff = np.max(np.abs(vn - vp)) / np.max(np.abs(vp))
        print(f"  {n:3d} x {N:8d}   numba {tn:8.4f} s   numpy {tp:8.4f} s   x{tp / tn:6.1f}   rel.diff {diff:.1e}")


def bench_distribution(repeat):
    print("toa_distribution  (monomial k=2 on its suggested grid)")
    state = ar.monomial(2)
    grid = ar.suggest_time_grid(state)
    rows = {}
    saved = _accel.USE_NUMBA
    try:
        for flag in (True, False):
            if flag and not _accel.HAVE_NUMBA:
                continue
            _accel.USE_NUMBA = flag
            rows[flag] = best_of(lambda: ar.toa_distribution(grid, state).values, max(1, repeat // 2))
    finally:
        _accel.USE_NUMBA = saved
    for flag, (t, _) in rows.items():
        print(f"  {'numba' if flag else 'numpy':5s}  {grid.size} times   {t:8.3f} s")
    if len(rows) == 2:
        d = np.max(np.abs(rows[True][1] - rows[False][1]))
        print(f"  speed-up x{rows[False][0] / rows[True][0]:.1f}   max |dPi| {d:.1e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        print("numba unavailable (or TOARRIVAL_DISABLE_NUMBA set): both columns run the same code")
    rng = np.random.default_rng(7)
    bench_chirp(args.repeat, rng)
    bench_horner(args.repeat, rng)
    bench_distribution(args.repeat)


if __name__ == "__main__":
    main()
