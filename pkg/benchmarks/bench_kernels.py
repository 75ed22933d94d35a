"""Time the numba and numpy kernel paths side by side.

Usage:
    python benchmarks/bench_kernels.py [--repeats N]

Covers the three hot spots: the likelihood fold over samples, the
max-eigenvalue scan over pair deflations, and the transitivity triple scan.
Numba timings exclude compilation (one warmup call per kernel).  Run with
SALIENTPREF_NO_NUMBA=1 to confirm the fallback path alone.
"""

import argparse
import time

import numpy as np

from salientpref import _kernels


def timeit(fn, args, repeats):
    fn(*args)  # warmup: triggers jit compilation on the numba path
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(name, args, repeats, fmt):
    rows = []
    for label, fn in _kernels.implementations(name):
        rows.append((label, timeit(fn, args, repeats)))
    base = dict(rows).get("numpy")
    for label, secs in rows:
        speedup = "" if label == "numpy" or base is None else f"  ({base / secs:5.1f}x vs numpy)"
        print(f"  {name:<18} {fmt:<22} {label:<6} {secs * 1e3:10.3f} ms{speedup}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"numba enabled: {_kernels.NUMBA_ENABLED}")
    print(f"{'kernel':<20} {'problem size':<22} {'path':<6} {'best time':>13}")

    for m, d in ((20_000, 5), (200_000, 10)):
        X = np.ascontiguousarray(rng.normal(size=(m, d)))
        y = (rng.random(m) < 0.5).astype(np.float64)
        w = rng.normal(size=d)
        size = f"m={m}, d={d}"
        bench("nll_value", (X, y, w, 0.1), args.repeats, size)
        bench("nll_grad", (X, y, w, 0.1), args.repeats, size)
        bench("nll_hess", (X, y, w, 0.1), args.repeats, size)

    for n, d in ((100, 10), (200, 8)):
        U = rng.normal(size=(d, n))
        ii, jj = np.triu_indices(n, k=1)
        X = np.ascontiguousarray(U[:, ii].T - U[:, jj].T)
        EZ = np.ascontiguousarray(X.T @ X / X.shape[0])
        bench("zeta_scan", (EZ, X), args.repeats, f"pairs={X.shape[0]}, d={d}")

    for n in (60, 120):
        probs = rng.random(n * (n - 1) // 2)
        pi, pj = np.triu_indices(n, k=1)
        P = np.full((n, n), 0.5)
        P[pi, pj] = probs
        P[pj, pi] = 1.0 - probs
        present = ~np.eye(n, dtype=bool)
        bench(
            "transitivity_scan",
            (P, present),
            args.repeats,
            f"n={n} ({n * (n - 1) * (n - 2) // 6} triples)",
        )


if __name__ == "__main__":
    main()
