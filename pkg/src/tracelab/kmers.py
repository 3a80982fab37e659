"""Position-weighted k-mer densities of a source string.

For a width-k window w and a trace position i, the density entry is

    D[w][i] = sum_j  C(j, i) p^(j-i) q^i * [x[j:j+k] == w],

the expected contribution of w's occurrences to position i of a trace:
C(j, i) p^(j-i) q^i is the probability that exactly i of the j bits in
front of an occurrence survive the channel.  Rows therefore sum to the
occurrence count of w, and the per-position expectation of a 0-padded
trace is q * D["1"].
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from tracelab import rng
from tracelab.channel import ChannelParams, bits_to_array, check_bits
from tracelab.errors import InvalidKError, ShapeMismatchError

# density_entry switches from the multiplicative row recurrence to
# log-gamma evaluation beyond this length.
_ENTRY_RECURRENCE_LIMIT = 50


def occurrence_indicator(x: str, j: int, w: str) -> int:
    """1 if the window of x starting at j spells w, else 0."""
    check_bits(x)
    check_bits(w)
    k = len(w)
    if k < 1 or k > len(x):
        raise InvalidKError(f"window width {k} invalid for |x| = {len(x)}")
    if j < 0 or j > len(x) - k:
        raise IndexError(f"window start {j} outside [0, {len(x) - k}]")
    return 1 if x[j : j + k] == w else 0


def survival_weight(j: int, i: int, params: ChannelParams) -> float:
    """C(j, i) p^(j-i) q^i, the chance i of j leading bits survive."""
    if i < 0 or i > j:
        return 0.0
    p, q = params.p, params.q
    if j <= _ENTRY_RECURRENCE_LIMIT:
        # Multiplicative recurrence along fixed i: stable, no factorials.
        if p == 0.0:
            return q**i if i == j else 0.0
        w = q**i
        for jj in range(i, j):
            w *= p * (jj + 1) / (jj + 1 - i)
        return w
    if p == 0.0:
        return q**i if i == j else 0.0
    if q == 0.0:
        return p**j if i == 0 else 0.0
    log_c = math.lgamma(j + 1) - math.lgamma(i + 1) - math.lgamma(j - i + 1)
    return math.exp(log_c + (j - i) * math.log(p) + i * math.log(q))


def survival_weight_matrix(j_max: int, params: ChannelParams) -> np.ndarray:
    """Matrix B with B[j, i] = C(j, i) p^(j-i) q^i for 0 <= i, j <= j_max.

    Built by the Pascal-style recurrence B[j] = p*B[j-1] + q*shift(B[j-1]);
    every entry is a binomial probability, so the recurrence never leaves
    [0, 1] and is stable at any size.
    """
    B = np.zeros((j_max + 1, j_max + 1))
    B[0, 0] = 1.0
    p, q = params.p, params.q
    for j in range(1, j_max + 1):
        B[j, : j + 1] = p * B[j - 1, : j + 1]
        B[j, 1 : j + 1] += q * B[j - 1, :j]
    return B


def density_entry(x: str, w: str, i: int, params: ChannelParams) -> float:
    """Single density value D[w][i], by direct summation over windows."""
    check_bits(x)
    n = len(x)
    if i < 0 or i >= n:
        raise IndexError(f"position {i} outside [0, {n - 1}]")
    k = len(w)
    if k < 1 or k > n:
        raise InvalidKError(f"window width {k} invalid for |x| = {n}")
    total = 0.0
    for j in range(n - k + 1):
        if x[j : j + k] == w:
            total += survival_weight(j, i, params)
    return total


@dataclass(frozen=True)
class KmerDensityMap:
    """Sparse density map: one length-n row per occurring k-mer."""

    n: int
    k: int
    p: float
    rows: dict[str, np.ndarray]

    def row(self, w: str) -> np.ndarray:
        """Row for w; all-zero when w never occurs."""
        got = self.rows.get(w)
        return got if got is not None else np.zeros(self.n)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "k": self.k,
                "p": self.p,
                "rows": {w: self.rows[w].tolist() for w in sorted(self.rows)},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "KmerDensityMap":
        d = json.loads(text)
        rows = {w: np.asarray(v, dtype=np.float64) for w, v in d["rows"].items()}
        return cls(n=d["n"], k=d["k"], p=d["p"], rows=rows)


def density_map(x: str, k: int, params: ChannelParams) -> KmerDensityMap:
    """All density rows of x at window width k, vectorized."""
    check_bits(x)
    n = len(x)
    if k < 1 or k > n:
        raise InvalidKError(f"window width {k} invalid for |x| = {n}")
    B = survival_weight_matrix(n - k, params)
    windows: dict[str, list[int]] = {}
    for j in range(n - k + 1):
        windows.setdefault(x[j : j + k], []).append(j)
    rows = {}
    for w, starts in windows.items():
        row = np.zeros(n)
        row[: n - k + 1] = B[starts].sum(axis=0)
        rows[w] = row
    return KmerDensityMap(n=n, k=k, p=params.p, rows=rows)


def _check_compatible(A: KmerDensityMap, B: KmerDensityMap) -> None:
    if (A.n, A.k) != (B.n, B.k) or A.p != B.p:
        raise ShapeMismatchError(
            f"maps disagree: (n,k,p) = {(A.n, A.k, A.p)} vs {(B.n, B.k, B.p)}"
        )


def map_l1_distance(A: KmerDensityMap, B: KmerDensityMap) -> float:
    """Entrywise l1 distance over the union of the sparse supports."""
    _check_compatible(A, B)
    total = 0.0
    for w in set(A.rows) | set(B.rows):
        total += float(np.abs(A.row(w) - B.row(w)).sum())
    return total


def map_linf_distance(A: KmerDensityMap, B: KmerDensityMap) -> float:
    """Largest entrywise deviation over the union of supports."""
    _check_compatible(A, B)
    worst = 0.0
    for w in set(A.rows) | set(B.rows):
        worst = max(worst, float(np.abs(A.row(w) - B.row(w)).max()))
    return worst


def mean_trace(x: str, params: ChannelParams) -> np.ndarray:
    """Expected value of each position of the 0-padded trace.

    Equals q * D["1"][i]: a padded position i reads 1 exactly when some
    occurrence of "1" survives with i earlier survivors.
    """
    check_bits(x)
    if len(x) == 0:
        return np.zeros(0)
    return params.q * density_map(x, 1, params).row("1")


def contiguous_origin_frequency(
    x: str, w: str, i: int, params: ChannelParams, seed: int, trials: int
):
    """Monte-Carlo frequency of w surviving intact into trace window i.

    Counts traces where some occurrence of w keeps all k bits while
    exactly i earlier bits survive, so the occurrence lands contiguously
    at trace positions i..i+k-1.  Expectation is q^k * D[w][i].
    Returns (estimate, standard_error).
    """
    check_bits(x)
    check_bits(w)
    n, k = len(x), len(w)
    if k < 1 or k > n:
        raise InvalidKError(f"window width {k} invalid for |x| = {n}")
    if i < 0 or i >= n:
        raise IndexError(f"position {i} outside [0, {n - 1}]")
    starts = [j for j in range(n - k + 1) if x[j : j + k] == w]
    gen = rng.generator(seed)
    keep = gen.random((trials, n)) >= params.p
    if not starts:
        return 0.0, 0.0
    before = np.zeros((trials, n + 1), dtype=np.int64)
    np.cumsum(keep, axis=1, out=before[:, 1:])
    hit = np.zeros(trials, dtype=bool)
    for j in starts:
        intact = keep[:, j : j + k].all(axis=1)
        hit |= intact & (before[:, j] == i)
    est = float(hit.mean())
    return est, math.sqrt(est * (1.0 - est) / trials)


def marginalization_report(x: str, k: int, params: ChannelParams) -> dict:
    """How width-(k-1) densities relate to width-k densities.

    The window identity is exact: for j >= 1 the (k-1)-window at j
    spells w iff the k-window at j-1 spells 0w or 1w.  The tempting
    density-level analogue D_(k-1)[w] = D_k[0w] + D_k[1w] shifts the
    survival weights by one position, so it generally fails; this
    reports the measured deviation instead of asserting it.
    """
    check_bits(x)
    n = len(x)
    if k < 2 or k > n:
        raise InvalidKError(f"need 2 <= k <= |x|, got k = {k}")
    narrow = density_map(x, k - 1, params)
    wide = density_map(x, k, params)
    indicator_ok = True
    for j in range(1, n - k + 2):
        w = x[j : j + k - 1]
        lhs = occurrence_indicator(x, j, w)
        rhs = occurrence_indicator(x, j - 1, "0" + w) + occurrence_indicator(
            x, j - 1, "1" + w
        )
        indicator_ok &= lhs == rhs
    deviation = 0.0
    for w in narrow.rows:
        stacked = wide.row("0" + w) + wide.row("1" + w)
        deviation = max(deviation, float(np.abs(narrow.row(w) - stacked).max()))
    return {
        "indicator_identity_holds": indicator_ok,
        "density_identity_max_deviation": deviation,
    }
