"""Compare the compiled kernel backend against the numpy fallback.

Runs each hot kernel on workloads shaped like the real call sites
(closest-pair scans, feature distances, trace-MLE scoring, channel
sampling), checks that both backends agree, and prints best-of-N
timings with the speedup.

Usage: python3 benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from tracelab import rng
from tracelab.kernels import BACKEND, IMPLEMENTATIONS


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads(quick: bool):
    gen = rng.generator(rng.derive_seed(20260819, "bench"))
    members = 2048 if quick else 8192
    grid = 129
    pairs = 200_000 if quick else 1_000_000
    U = (gen.normal(size=(members, grid)) + 1j * gen.normal(size=(members, grid)))
    ia = gen.integers(0, members, size=pairs).astype(np.int64)
    ib = gen.integers(0, members, size=pairs).astype(np.int64)
    V = gen.normal(size=(members, 61))

    n = 12
    cands = ((np.arange(1 << n)[:, None] >> np.arange(n)[::-1]) & 1).astype(np.uint8)
    t = gen.integers(0, 2, size=7).astype(np.uint8)

    x = gen.integers(0, 2, size=64).astype(np.uint8)
    keep = gen.uniform(size=(20_000 if quick else 100_000, 64)) < 0.5

    return {
        "pair_sups": lambda impl: impl.pair_sups(U, ia, ib),
        "pair_l1_dists": lambda impl: impl.pair_l1_dists(V, ia, ib),
        "subsequence_count_batch": lambda impl: impl.subsequence_count_batch(cands, t),
        "scatter_traces": lambda impl: impl.scatter_traces(x, keep),
    }


def _agree(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_agree(u, v) for u, v in zip(a, b))
    return bool(np.allclose(np.asarray(a, dtype=np.float64),
                            np.asarray(b, dtype=np.float64), rtol=1e-12, atol=0.0))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    print(f"active backend: {BACKEND}; available: {', '.join(IMPLEMENTATIONS)}")
    if len(IMPLEMENTATIONS) < 2:
        print("compiled backend not built; timing the numpy fallback only")

    repeats = 3 if args.quick else 5
    rows = []
    for name, call in _workloads(args.quick).items():
        results = {}
        times = {}
        for backend, impl in IMPLEMENTATIONS.items():
            call(impl)  # warm up
            times[backend] = _best_of(lambda: call(impl), repeats)
            results[backend] = call(impl)
        if len(results) == 2 and not _agree(*results.values()):
            print(f"MISMATCH between backends in {name}")
            return 1
        rows.append((name, times))

    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in IMPLEMENTATIONS)
    if len(IMPLEMENTATIONS) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, times in rows:
        line = f"{name:<{width}}  " + "".join(
            f"{times[b] * 1e3:>10.2f}ms" for b in IMPLEMENTATIONS
        )
        if len(times) == 2:
            line += f"{times['python'] / times['compiled']:>9.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
