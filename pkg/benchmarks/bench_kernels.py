"""Benchmark the subset-streaming walk kernels: numba vs pure numpy.

The certificate row-max and the implicit matrix-vector product stream all
2^L subsets; numba compiles the bit-scan loops, while the numpy fallback
vectorizes them with precomputed frontier tables.  Run:

    python3 benchmarks/bench_kernels.py [--lmax 18]

Backend selection for the package follows LIGHTCONES_NUMBA (auto by
default); this script times both implementations in-process.
"""

import argparse
import time

import numpy as np

from lightcones import _kernels
from lightcones.walk import _entry_weights, collatz_wielandt_closed


def time_call(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_row_max(L, alpha=3.0, variant="state_transfer"):
    w_add, w_swap, w_gap = _entry_weights(L, alpha, variant)
    prods = np.concatenate([[0.0], np.cumsum(w_add[1:] * w_gap[1:])])
    add_tail = prods[L - np.arange(L + 1)]
    swap_tab = np.zeros((L + 1, L + 1))
    for j2 in range(L):
        for j in range(j2 + 1, L + 1):
            n = np.arange(j2 + 1, L + 1)
            n = n[n != j]
            if n.size:
                swap_tab[j2, j] = float(
                    np.sum(w_swap[np.abs(j - n)] * w_gap[n - j2] / w_gap[j - j2])
                )

    def numpy_path():
        top1, top2 = _kernels.subset_tops_numpy(L)
        rows = np.where(top1 > 0, 1.0, 0.0) + add_tail[top1]
        rows = rows + np.where(top1 > 0, swap_tab[top2, top1], 0.0)
        return rows.max()

    results = {"numpy": time_call(numpy_path)}
    if _kernels.NUMBA_ENABLED:
        _kernels._row_max_numba(L, 1.0, add_tail, swap_tab, True)  # warm up
        results["numba"] = time_call(
            _kernels._row_max_numba, L, 1.0, add_tail, swap_tab, True
        )
    return results


def bench_matvec(L, alpha=3.0):
    w_add, w_swap, _ = _entry_weights(L, alpha, "state_transfer")
    x = np.random.default_rng(0).uniform(0.5, 1.0, size=1 << L)
    results = {"numpy": time_call(_kernels._matvec_numpy, x, L, 1.0, w_add, w_swap)}
    if _kernels.NUMBA_ENABLED:
        _kernels._matvec_numba(x, L, 1.0, w_add, w_swap, True)  # warm up
        results["numba"] = time_call(
            _kernels._matvec_numba, x, L, 1.0, w_add, w_swap, True
        )
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lmax", type=int, default=18)
    args = parser.parse_args()
    if not _kernels.NUMBA_ENABLED:
        print("numba backend unavailable (LIGHTCONES_NUMBA=0 or not installed);")
        print("timing the numpy path only\n")
    print(f"{'kernel':<12} {'L':>3} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}")
    for L in range(12, args.lmax + 1, 2):
        for name, bench in (("row_max", bench_row_max), ("matvec", bench_matvec)):
            res = bench(L)
            np_ms = res["numpy"] * 1e3
            if "numba" in res:
                nb_ms = res["numba"] * 1e3
                print(f"{name:<12} {L:>3} {np_ms:>12.2f} {nb_ms:>12.2f} {np_ms / nb_ms:>7.1f}x")
            else:
                print(f"{name:<12} {L:>3} {np_ms:>12.2f} {'-':>12} {'-':>8}")
    # sanity: both paths agree with the closed-form certificate
    val = collatz_wielandt_closed(14, 3.0, 1.0, "state_transfer")
    print(f"\ncross-check: closed-form certificate at L=14: {val:.12f}")


if __name__ == "__main__":
    main()
