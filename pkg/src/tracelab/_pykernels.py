"""Pure numpy implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable.
Semantics must match tracelab._ckernels exactly; tests/test_kernels.py
checks the two backends against each other.
"""

import numpy as np

# Pair chunk size: bounds the (chunk, width) temporary at a few MB.
_CHUNK = 1 << 14


def pair_sups(U: np.ndarray, ia: np.ndarray, ib: np.ndarray) -> np.ndarray:
    """Per-pair max_t |U[ia] - U[ib]| for a complex evaluation matrix U.

    U has one row per family member and one column per grid point.
    """
    out = np.empty(len(ia), dtype=np.float64)
    for lo in range(0, len(ia), _CHUNK):
        hi = min(lo + _CHUNK, len(ia))
        diff = U[ia[lo:hi]] - U[ib[lo:hi]]
        np.abs(diff, out=diff)
        out[lo:hi] = diff.real.max(axis=1) if hi > lo else 0.0
    return out


def pair_l1_dists(V: np.ndarray, ia: np.ndarray, ib: np.ndarray) -> np.ndarray:
    """Per-pair l1 distance between rows of a real feature matrix V."""
    out = np.empty(len(ia), dtype=np.float64)
    for lo in range(0, len(ia), _CHUNK):
        hi = min(lo + _CHUNK, len(ia))
        out[lo:hi] = np.abs(V[ia[lo:hi]] - V[ib[lo:hi]]).sum(axis=1)
    return out


def subsequence_count_batch(cands: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Distinct-embedding counts N(c, t) for every row c of cands.

    Exact as long as every count stays below 2**53 (true for n <= 50).
    """
    C, n = cands.shape
    m = len(t)
    if m > n:
        return np.zeros(C, dtype=np.float64)
    dp = np.zeros((C, m + 1), dtype=np.float64)
    dp[:, 0] = 1.0
    for i in range(n):
        col = cands[:, i]
        for j in range(min(i, m - 1), -1, -1):
            dp[:, j + 1] += dp[:, j] * (col == t[j])
    return dp[:, m]


def scatter_traces(x: np.ndarray, keep: np.ndarray):
    """Extract surviving bits into zero-padded rows.

    keep is a (T, n) boolean retention mask; returns (traces, lengths)
    where traces is (T, n) uint8 with each trace left-justified.
    """
    T, n = keep.shape
    traces = np.zeros((T, n), dtype=np.uint8)
    lengths = keep.sum(axis=1).astype(np.int64)
    if n:
        rows, cols = np.nonzero(keep)
        pos = keep.cumsum(axis=1)[rows, cols] - 1
        traces[rows, pos] = x[cols]
    return traces, lengths
