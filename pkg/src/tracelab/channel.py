"""Independent-deletion channel: sampling and exact trace probabilities.

A source string x in {0,1}^n goes through a channel that deletes each
bit independently with probability p; the surviving bits, in order,
form the trace.  The probability of observing a particular trace t is

    P[trace = t] = N(x, t) * p^(n - m) * (1 - p)^m,   m = |t|,

where N(x, t) counts the distinct ways t embeds into x as a
subsequence.  Everything here is exact: N is computed with integer
dynamic programming and full distributions are enumerated over the
distinct-subsequence trie.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from tracelab import rng
from tracelab.errors import LengthGuardError
from tracelab.kernels import scatter_traces

# Exact enumeration guard: 2^n keep-sets / subsequence tries stay small.
EXACT_ENUMERATION_LIMIT = 20


def check_bits(s: str) -> str:
    """Validate that s is a 0/1 string and return it unchanged."""
    if not isinstance(s, str) or s.strip("01") != "":
        raise ValueError(f"not a 0/1 string: {s!r}")
    return s


def bits_to_array(s: str) -> np.ndarray:
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


def array_to_bits(a) -> str:
    return "".join("1" if int(b) else "0" for b in a)


@dataclass(frozen=True)
class ChannelParams:
    """Deletion probability p and retention probability q = 1 - p."""

    p: float
    q: float = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"deletion probability out of [0, 1]: {self.p}")
        object.__setattr__(self, "q", 1.0 - self.p)


@dataclass(frozen=True)
class Trace:
    """A channel output, optionally with the surviving source indices."""

    bits: str
    origins: tuple[int, ...] | None = None

    def __post_init__(self):
        check_bits(self.bits)
        if self.origins is not None and len(self.origins) != len(self.bits):
            raise ValueError("origins length does not match bits")

    def validate_against(self, x: str) -> None:
        """Check origins are strictly increasing and consistent with x."""
        if self.origins is None:
            return
        prev = -1
        for j, idx in enumerate(self.origins):
            if idx <= prev or idx >= len(x):
                raise ValueError("origins not strictly increasing within x")
            if x[idx] != self.bits[j]:
                raise ValueError("origin bit disagrees with trace bit")
            prev = idx


class DistributionTable:
    """Finite distribution: ordered outcomes plus a probability vector."""

    __slots__ = ("domain", "probs", "_index")

    def __init__(self, domain, probs):
        self.domain = tuple(domain)
        self.probs = np.asarray(probs, dtype=np.float64)
        if len(self.domain) != len(self.probs):
            raise ValueError("domain and probability vector sizes differ")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError("duplicate outcomes in domain")
        if np.any(self.probs < -1e-15):
            raise ValueError("negative probability entry")
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self._index = {outcome: i for i, outcome in enumerate(self.domain)}

    def prob_of(self, outcome) -> float:
        i = self._index.get(outcome)
        return float(self.probs[i]) if i is not None else 0.0

    def __contains__(self, outcome) -> bool:
        return outcome in self._index

    def __len__(self) -> int:
        return len(self.domain)

    def to_json(self) -> str:
        return json.dumps(
            {_outcome_label(o): p for o, p in zip(self.domain, self.probs.tolist())}
        )

    @classmethod
    def from_json(cls, text: str) -> "DistributionTable":
        data = json.loads(text)
        return cls(list(data.keys()), list(data.values()))


def _outcome_label(outcome) -> str:
    return outcome if isinstance(outcome, str) else repr(outcome)


# ---------- Sampling ----------


def sample_trace(x: str, params: ChannelParams, seed: int) -> Trace:
    """One channel draw; deterministic given (x, p, seed)."""
    check_bits(x)
    gen = rng.generator(seed)
    u = gen.random(len(x))
    keep = u >= params.p
    origins = tuple(int(i) for i in np.nonzero(keep)[0])
    bits = "".join(x[i] for i in origins)
    return Trace(bits=bits, origins=origins)


def sample_trace_batch(x: str, params: ChannelParams, seed: int, count: int):
    """count channel draws from one Philox stream.

    Returns (traces, lengths): a (count, n) uint8 matrix of zero-padded
    traces and the true trace lengths.  Row t of the matrix is the same
    trace a per-draw loop would produce; batching only amortizes the
    generator setup.
    """
    check_bits(x)
    n = len(x)
    gen = rng.generator(seed)
    keep = (gen.random((count, n)) >= params.p).astype(np.uint8)
    return scatter_traces(bits_to_array(x), keep)


# ---------- Exact probabilities ----------


def subsequence_count(x: str, t: str) -> int:
    """Number of distinct embeddings of t into x, as an exact integer."""
    check_bits(x)
    check_bits(t)
    m = len(t)
    if m > len(x):
        return 0
    # dp[j] = embeddings of t[:j] into the prefix of x scanned so far.
    dp = [0] * (m + 1)
    dp[0] = 1
    for ch in x:
        for j in range(m - 1, -1, -1):
            if t[j] == ch:
                dp[j + 1] += dp[j]
    return dp[m]


def trace_log_probability(x: str, t: str, params: ChannelParams) -> float:
    """log P[trace = t | source = x], -inf when t is not a subsequence."""
    n, m = len(x), len(t)
    if m > n:
        return -math.inf
    count = subsequence_count(x, t)
    if count == 0:
        return -math.inf
    out = math.log(count)
    if n > m:
        if params.p == 0.0:
            return -math.inf
        out += (n - m) * math.log(params.p)
    if m > 0:
        if params.q == 0.0:
            return -math.inf
        out += m * math.log(params.q)
    return out


def trace_probability(x: str, t: str, params: ChannelParams) -> float:
    """P[trace = t | source = x]; exact in linear domain for short x.

    Long strings (n > 64) are computed in log domain and exponentiated,
    trading ulps for underflow resistance.
    """
    n, m = len(x), len(t)
    if n > 64:
        lp = trace_log_probability(x, t, params)
        return 0.0 if lp == -math.inf else math.exp(lp)
    count = subsequence_count(x, t)
    if count == 0:
        return 0.0
    return count * params.p ** (n - m) * params.q**m


def trace_distribution(
    x: str, params: ChannelParams, allow_large: bool = False
) -> DistributionTable:
    """Full trace distribution of x as a DistributionTable.

    Walks the trie of distinct subsequences (children via first
    occurrence, so each subsequence appears exactly once) while carrying
    the integer embedding-count row, then applies the closed form per
    subsequence.  Domain is sorted by (length, lex) for determinism.
    Guarded at n = 20; pass allow_large=True to override.
    """
    check_bits(x)
    n = len(x)
    if n > EXACT_ENUMERATION_LIMIT and not allow_large:
        raise LengthGuardError(
            f"n = {n} exceeds exact-enumeration guard {EXACT_ENUMERATION_LIMIT}"
        )
    p, q = params.p, params.q

    # next_occ[i][b]: first index >= i where bit b occurs, or n.
    next_occ = [[n, n] for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        next_occ[i] = next_occ[i + 1].copy()
        next_occ[i][int(x[i])] = i

    out: dict[str, float] = {}
    # Row v[i] = embeddings of the current subsequence into x[:i].
    root_row = [1] * (n + 1)
    stack = [("", 0, root_row)]
    while stack:
        t, start, v = stack.pop()
        m = len(t)
        prob = v[n] * p ** (n - m) * q**m if n <= 64 else None
        if prob is None:
            lp = math.log(v[n])
            if p > 0.0:
                lp += (n - m) * math.log(p)
            elif n > m:
                lp = -math.inf
            if q > 0.0:
                lp += m * math.log(q)
            elif m > 0:
                lp = -math.inf
            prob = 0.0 if lp == -math.inf else math.exp(lp)
        out[t] = prob
        for b in (0, 1):
            j = next_occ[start][b]
            if j < n:
                w = [0] * (n + 1)
                ch = str(b)
                for i in range(n):
                    w[i + 1] = w[i] + (v[i] if x[i] == ch else 0)
                stack.append((t + ch, j + 1, w))

    domain = sorted(out, key=lambda s: (len(s), s))
    return DistributionTable(domain, [out[t] for t in domain])


def tv_distance(P: DistributionTable, Q: DistributionTable) -> float:
    """Total variation distance between two finite distributions."""
    outcomes = set(P.domain) | set(Q.domain)
    return 0.5 * sum(abs(P.prob_of(o) - Q.prob_of(o)) for o in outcomes)
