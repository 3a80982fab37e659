"""Statistic-based distinguishers between two candidate sources.

Two observable statistics over traces zero-padded to the source length:
the per-position mean, and per-position frequencies of contiguous
width-k trace windows.  Each has an exactly computable expectation
under the channel, so a distinguisher can pick whichever candidate's
expected statistic sits closer in l1 to the empirical one.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from tracelab import rng
from tracelab.channel import ChannelParams, bits_to_array, check_bits, sample_trace_batch
from tracelab.errors import EmptyTraceSetError, InvalidKError, ShapeMismatchError
from tracelab.kmers import mean_trace, survival_weight

_ALL_KINDS = ("mean", "kgram")


@dataclass(frozen=True)
class StatisticVector:
    """A mean vector, or a {(window, position): value} table."""

    kind: str
    n: int
    k: int = 1
    mean: np.ndarray | None = None
    table: dict = field(default_factory=dict)

    def l1(self, other: "StatisticVector") -> float:
        if self.kind != other.kind or self.n != other.n or self.k != other.k:
            raise ShapeMismatchError("statistic vectors are not comparable")
        if self.kind == "mean":
            return float(np.abs(self.mean - other.mean).sum())
        keys = set(self.table) | set(other.table)
        return float(
            sum(abs(self.table.get(t, 0.0) - other.table.get(t, 0.0)) for t in keys)
        )


def _padded_matrix(traces, n: int) -> np.ndarray:
    rows = []
    if not len(traces):
        raise EmptyTraceSetError("no traces")
    for t in traces:
        bits = getattr(t, "bits", t)
        check_bits(bits)
        if len(bits) > n:
            raise ShapeMismatchError(f"trace longer than n = {n}")
        row = np.zeros(n, dtype=np.uint8)
        if bits:
            row[: len(bits)] = bits_to_array(bits)
        rows.append(row)
    return np.stack(rows)


def contiguous_windows(x: str, k: int):
    """The width-k windows occurring contiguously in x, sorted."""
    return sorted({x[j : j + k] for j in range(len(x) - k + 1)})


def empirical_statistic(traces, n: int, kind: str, k: int = 1, wset=None) -> StatisticVector:
    """Observed statistic of a trace set, zero-padded to length n.

    kind "mean": per-position average.  kind "kgram": frequency of each
    width-k window at each padded position; wset restricts the windows
    tabulated (default: every window observed in the padded traces).
    """
    if kind not in _ALL_KINDS:
        raise ValueError(f"kind must be one of {_ALL_KINDS}")
    mat = _padded_matrix(traces, n)
    if kind == "mean":
        return StatisticVector(kind="mean", n=n, mean=mat.mean(axis=0))
    if not 1 <= k <= n:
        raise InvalidKError(f"window width {k} invalid for n = {n}")
    wins = np.lib.stride_tricks.sliding_window_view(mat, k, axis=1)
    if wset is None:
        wset = sorted(
            {"".join(map(str, wins[t, i])) for t in range(wins.shape[0])
             for i in range(wins.shape[1])}
        )
    table = {}
    for w in wset:
        hits = (wins == bits_to_array(w)).all(axis=2)
        for i in range(wins.shape[1]):
            table[(w, i)] = float(hits[:, i].mean())
    return StatisticVector(kind="kgram", n=n, k=k, table=table)


def expected_kgram_statistic(x: str, w: str, i: int, params: ChannelParams) -> float:
    """Probability that the trace spells w at positions i..i+k-1.

    Exact sum over increasing source index tuples spelling w: the tuple
    survives (q^k), everything between its entries is deleted, and
    exactly i earlier bits survive.  Linear-time DP in |x| per window.
    """
    check_bits(x)
    check_bits(w)
    n, k = len(x), len(w)
    if not 1 <= k <= n:
        raise InvalidKError(f"window width {k} invalid for |x| = {n}")
    if i < 0 or i + k > n:
        return 0.0
    p, q = params.p, params.q

    # A[j] = weighted tuples spelling w[:l+1] ending exactly at j;
    # R[j] = A[j] + p * R[j-1] extends a tuple across deleted bits.
    A = np.array(
        [survival_weight(j, i, params) if x[j] == w[0] else 0.0 for j in range(n)]
    )
    for l in range(1, k):
        R = np.zeros(n)
        acc = 0.0
        for j in range(n):
            acc = A[j] + p * (acc if j else 0.0)
            R[j] = acc
        A = np.array([R[j - 1] if j and x[j] == w[l] else 0.0 for j in range(n)])
    return float(q**k * A.sum())


def expected_statistic(
    x: str, kind: str, k: int, params: ChannelParams, wset=None
) -> StatisticVector:
    """Exact channel expectation of the observable statistic for x."""
    if kind not in _ALL_KINDS:
        raise ValueError(f"kind must be one of {_ALL_KINDS}")
    n = len(check_bits(x))
    if kind == "mean":
        return StatisticVector(kind="mean", n=n, mean=mean_trace(x, params))
    if wset is None:
        wset = contiguous_windows(x, k)
    table = {
        (w, i): expected_kgram_statistic(x, w, i, params)
        for w in wset
        for i in range(n - k + 1)
    }
    return StatisticVector(kind="kgram", n=n, k=k, table=table)


def distinguish(traces, x: str, y: str, params: ChannelParams,
                method: str = "mean", k: int = 2) -> str:
    """Return whichever candidate's expected statistic is l1-closer.

    Ties go to x.  The kgram method tabulates the windows occurring
    contiguously in either candidate.
    """
    check_bits(x)
    check_bits(y)
    if len(x) != len(y):
        raise ShapeMismatchError("candidates differ in length")
    n = len(x)
    wset = None
    if method == "kgram":
        wset = sorted(set(contiguous_windows(x, k)) | set(contiguous_windows(y, k)))
    emp = empirical_statistic(traces, n, method, k, wset=wset)
    ex = expected_statistic(x, method, k, params, wset=wset)
    ey = expected_statistic(y, method, k, params, wset=wset)
    return x if emp.l1(ex) <= emp.l1(ey) else y


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    """Wilson score interval for a binomial rate."""
    rate = successes / trials
    denom = 1.0 + z * z / trials
    center = (rate + z * z / (2 * trials)) / denom
    half = z * math.sqrt(rate * (1 - rate) / trials + z * z / (4 * trials**2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def success_rate(
    x: str, y: str, params: ChannelParams, method: str, T: int,
    trials: int, seed: int, k: int = 2,
) -> dict:
    """Monte-Carlo success frequency of the distinguisher, with a
    Wilson interval.  Each trial draws the true source fairly, samples
    T traces from it under a derived seed, and scores a correct pick.
    """
    if trials < 30:
        raise ValueError("need trials >= 30 for a meaningful interval")
    check_bits(x)
    check_bits(y)
    if len(x) != len(y):
        raise ShapeMismatchError("candidates differ in length")
    n = len(x)
    wset = None
    if method == "kgram":
        wset = sorted(set(contiguous_windows(x, k)) | set(contiguous_windows(y, k)))
    ex = expected_statistic(x, method, k, params, wset=wset)
    ey = expected_statistic(y, method, k, params, wset=wset)

    wins = 0
    for trial in range(trials):
        pick = rng.generator(rng.derive_seed(seed, "truth", trial))
        truth = x if pick.random() < 0.5 else y
        mat, lengths = sample_trace_batch(
            truth, params, rng.derive_seed(seed, "traces", trial), T
        )
        emp = (
            StatisticVector(kind="mean", n=n, mean=mat.mean(axis=0))
            if method == "mean"
            else empirical_statistic(
                [  # rows are already zero-padded to n
                    "".join(map(str, mat[t, : lengths[t]])) for t in range(T)
                ],
                n, "kgram", k, wset=wset,
            )
        )
        choice = x if emp.l1(ex) <= emp.l1(ey) else y
        wins += choice == truth
    lo, hi = wilson_interval(wins, trials)
    return {
        "method": method,
        "n": n,
        "p": params.p,
        "T": T,
        "rate": wins / trials,
        "ci_low": lo,
        "ci_high": hi,
        "trials": trials,
        "seed": seed,
    }
