"""Time the compiled slot loop against the pure-Python fallback.

    python benchmarks/bench_kernel.py [--slots N] [--repeat R]

Reports the kernel alone (flags pre-generated) and a full ``simulate`` call,
and checks that both backends return identical counters.
"""
import argparse
import time

import numpy as np

from cogrelay import sim
from cogrelay import _slots_py as K
from cogrelay._backend import get_kernel
from cogrelay.model import SystemConfig

CONFIG = SystemConfig.from_flat(p_pp=0.6, p_ps=0.2, p_sp=0.3, p_ss=0.2, p_d=0.9,
                                p_f=0.1, m=2, lambda_p=0.25, lambda_s=0.1)


def kernel_run(run_chunk, flags, m):
    state = np.zeros(3, dtype=np.int64)
    counts = np.zeros(K.N_COUNTERS, dtype=np.int64)
    hist = np.zeros(m + 1, dtype=np.int64)
    win = np.zeros((3, 1), dtype=np.int64)
    run_chunk(flags, state, m, True, counts, hist, 0, len(flags), win[0], win[1], win[2])
    return counts


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--slots", type=int, default=10 ** 6)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    flags = sim.slot_flags(CONFIG, 42, 0, args.slots)
    rows = []
    counters = {}
    for name in ("python", "cython"):
        try:
            _, run_chunk = get_kernel(name)
        except ImportError:
            print(f"{name}: not available")
            continue
        t_kernel, counters[name] = best_of(
            lambda: kernel_run(run_chunk, flags, CONFIG.m), args.repeat)
        t_full, _ = best_of(
            lambda: sim.simulate(CONFIG, args.slots, 42, backend=name), args.repeat)
        rows.append((name, t_kernel, t_full))

    print(f"{'backend':<8} {'kernel s':>10} {'simulate s':>11} {'Mslots/s':>9}")
    for name, tk, tf in rows:
        print(f"{name:<8} {tk:>10.4f} {tf:>11.4f} {args.slots / tk / 1e6:>9.2f}")
    if len(rows) == 2:
        print(f"kernel speedup: {rows[0][1] / rows[1][1]:.1f}x, "
              f"end-to-end: {rows[0][2] / rows[1][2]:.1f}x")
        same = np.array_equal(counters["python"], counters["cython"])
        print(f"identical counters: {same}")


if __name__ == "__main__":
    main()
