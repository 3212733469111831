"""Compiled vs pure-Python kernel timings on simulated logs.

    python benchmarks/bench_kernels.py --sizes 1000 4000 --repeat 3
"""

import argparse
import time

import numpy as np

from ledgerlens import kernels
from ledgerlens.kernels import _pure
from ledgerlens.metrics import index_keys
from ledgerlens.simulator import SimConfig, run

WORKLOADS = {
    "uniform": dict(),
    "hot-key": dict(scenario="dv"),
    "update-heavy": dict(workload_type="update_heavy", key_space_size=200),
}


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench(name, n, repeat):
    log, _ = run(SimConfig(n_transactions=n, seed=1, **WORKLOADS[name]))
    idx = index_keys(log)
    rows = []
    for label, impl in (("python", _pure), (kernels.BACKEND, kernels)):
        t_pairs, (xs, ys) = best_of(lambda: impl.correlated_pairs(idx.all_ptr, idx.all_ids, idx.failed, len(idx.keys)),
                                    repeat)
        t_flags, flags = best_of(lambda: impl.pair_flags(xs, ys, idx.write_ptr, idx.write_ids, idx.read_ptr,
                                                         idx.read_ids), repeat)
        rows.append((label, t_pairs, t_flags, xs, ys, flags))
    (_, tp0, tf0, x0, y0, f0), (label, tp1, tf1, x1, y1, f1) = rows
    same = np.array_equal(x0, x1) and np.array_equal(y0, y1) and np.array_equal(f0, f1)
    print(f"{name:>12} {n:>6} {len(x0):>10} {tp0 * 1e3:>10.1f} {tp1 * 1e3:>10.1f} {tp0 / max(tp1, 1e-9):>8.1f}x "
          f"{tf0 * 1e3:>10.1f} {tf1 * 1e3:>10.1f} {tf0 / max(tf1, 1e-9):>8.1f}x  {'ok' if same else 'MISMATCH'}")
    return same


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--workloads", nargs="+", default=list(WORKLOADS), choices=list(WORKLOADS))
    args = ap.parse_args(argv)
    if kernels.BACKEND == "python":
        print("compiled kernels are not built; both columns time the pure-Python code")
    print(f"{'workload':>12} {'n':>6} {'pairs':>10} {'py ms':>10} {'c ms':>10} {'speedup':>9} "
          f"{'flags py':>10} {'flags c':>10} {'speedup':>9}  check")
    ok = all(bench(w, n, args.repeat) for w in args.workloads for n in args.sizes)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
