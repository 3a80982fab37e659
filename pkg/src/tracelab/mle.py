"""Maximum-likelihood selection over finite distribution families.

Everything here is exact and deterministic: likelihoods in log space,
ties broken to the smallest index, batches with no surviving candidate
flagged as degenerate instead of erroring.  The module also carries the
two constructions that bracket MLE's power on finite families (the
uniform-versus-point-masses family where the m-fold loss is tight, and
the subset family where MLE provably never returns the truth while a
trivial distinguisher succeeds), and a Monte-Carlo harness measuring
trace reconstruction by likelihood over the full candidate space.
"""

import functools
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from tracelab import rng
from tracelab.channel import (
    ChannelParams,
    DistributionTable,
    array_to_bits,
    bits_to_array,
    check_bits,
    sample_trace_batch,
    tv_distance,
)
from tracelab.errors import (
    BoundViolationError,
    DomainMismatchError,
    EmptyFamilyError,
    SizeGuardError,
)
from tracelab.kernels import subsequence_count_batch

FULL_SPACE_LIMIT = 20  # largest n for an implicit all-strings candidate set
EXACT_OUTCOME_LIMIT = 10**5  # largest |domain|^T summed exactly
SUBSET_FAMILY_CELL_LIMIT = 10**7  # member-by-outcome cells in the subset family


def _sort_key(outcome):
    return (type(outcome).__name__, repr(outcome))


@dataclass(frozen=True)
class DistributionFamily:
    """Ordered distributions over one shared outcome domain.

    Index 0 is the designated null when the family is adversarial.
    """

    domain: tuple
    members: tuple[DistributionTable, ...]

    def __post_init__(self):
        if not self.members:
            raise EmptyFamilyError("family needs at least one member")
        for d in self.members:
            if d.domain != self.domain:
                raise DomainMismatchError("member domain differs from family domain")

    @classmethod
    def build(cls, tables) -> "DistributionFamily":
        """Align tables onto the union of their domains, zero-filling."""
        tables = list(tables)
        if not tables:
            raise EmptyFamilyError("family needs at least one member")
        domain = tuple(
            sorted({o for t in tables for o in t.domain}, key=_sort_key)
        )
        aligned = tuple(
            DistributionTable(domain, [t.prob_of(o) for o in domain]) for t in tables
        )
        return cls(domain=domain, members=aligned)

    def __len__(self) -> int:
        return len(self.members)

    def prob_matrix(self) -> np.ndarray:
        return np.stack([d.probs for d in self.members])

    def to_json(self) -> str:
        return json.dumps(
            {
                "domain": [_encode_outcome(o) for o in self.domain],
                "members": [d.probs.tolist() for d in self.members],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "DistributionFamily":
        data = json.loads(text)
        domain = tuple(_decode_outcome(o) for o in data["domain"])
        return cls(
            domain=domain,
            members=tuple(DistributionTable(domain, row) for row in data["members"]),
        )


def _encode_outcome(o):
    if isinstance(o, tuple):
        return [_encode_outcome(v) for v in o]
    return o


def _decode_outcome(o):
    if isinstance(o, list):
        return tuple(_decode_outcome(v) for v in o)
    return o


@dataclass(frozen=True)
class SampleBatch:
    """An ordered tuple of observed outcomes."""

    samples: tuple

    def __len__(self) -> int:
        return len(self.samples)


def log_likelihood(batch: SampleBatch, D: DistributionTable) -> float:
    """Sum of log-probabilities; -inf as soon as any sample has mass 0."""
    total = 0.0
    for s in batch.samples:
        if s not in D:
            raise DomainMismatchError(f"outcome {s!r} outside the domain")
        p = D.prob_of(s)
        if p == 0.0:
            return -math.inf
        total += math.log(p)
    return total


@dataclass(frozen=True)
class MLEResult:
    index: int
    degenerate: bool
    log_likelihoods: tuple[float, ...]


def mle(batch: SampleBatch, family: DistributionFamily) -> MLEResult:
    """Smallest index maximizing the batch log-likelihood.

    A batch assigning zero mass under every member still returns index 0
    so sweeps never abort; the degenerate flag records it.
    """
    lls = tuple(log_likelihood(batch, d) for d in family.members)
    best = max(lls)
    return MLEResult(
        index=lls.index(best),
        degenerate=math.isinf(best) and best < 0,
        log_likelihoods=lls,
    )


def map_estimate(batch: SampleBatch, family: DistributionFamily) -> int:
    """Posterior argmax under the uniform prior, in probability space.

    Deliberately avoids logs so agreement with mle() is a genuine
    cross-check rather than the same arithmetic twice.
    """
    weights = []
    for d in family.members:
        w = 1.0
        for s in batch.samples:
            if s not in d:
                raise DomainMismatchError(f"outcome {s!r} outside the domain")
            w *= d.prob_of(s)
        weights.append(w)
    total = sum(weights)
    if total == 0.0:
        return 0
    posterior = [w / total for w in weights]
    return int(np.argmax(posterior))


# ---------- Reference families ----------


def uniform_vs_point_masses(m: int) -> DistributionFamily:
    """Null uniform on m outcomes versus the m point masses.

    The null is never selected: whatever it produces, the matching point
    mass is strictly more likely.  The selection guarantee degrades by
    exactly the family size here, which is what makes the example sharp.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    domain = tuple(range(m))
    tables = [DistributionTable(domain, [1.0 / m] * m)]
    for x in domain:
        probs = [0.0] * m
        probs[x] = 1.0
        tables.append(DistributionTable(domain, probs))
    return DistributionFamily(domain=domain, members=tuple(tables))


def random_family(n_outcomes: int, n_members: int, seed: int) -> DistributionFamily:
    """Random distributions on a shared integer domain.

    Rows are normalized exponentials, so every outcome carries positive
    mass under every member and the selection-guarantee check can take
    its exact summation path.
    """
    if n_outcomes < 1 or n_members < 1:
        raise ValueError("need at least one outcome and one member")
    gen = rng.generator(rng.derive_seed(seed, "random-family"))
    rows = gen.exponential(size=(n_members, n_outcomes))
    rows /= rows.sum(axis=1, keepdims=True)
    domain = tuple(range(n_outcomes))
    return DistributionFamily(
        domain=domain,
        members=tuple(DistributionTable(domain, row) for row in rows),
    )


def product_table(D: DistributionTable, T: int) -> DistributionTable:
    """T-fold product distribution over outcome tuples."""
    if T < 1:
        raise ValueError("need T >= 1")
    if len(D) ** T > 10**6:
        raise SizeGuardError(f"{len(D)}^{T} product outcomes exceed the guard")
    domain = list(itertools.product(D.domain, repeat=T))
    probs = [math.prod(D.prob_of(o) for o in tup) for tup in domain]
    return DistributionTable(domain, probs)


# ---------- Selection guarantee ----------


def optimality_bound_check(
    family: DistributionFamily, trials: int = 4000, seed: int | None = None,
    T: int = 1,
) -> dict:
    """Success probability of MLE against the null, versus its guarantee.

    With eps = 1 - min over non-null members of tv(null, member), a
    batch of T i.i.d. null samples selects index 0 with probability at
    least 1 - (len-1) * eps.  Exact domain summation when |domain|^T is
    small, seeded Monte-Carlo (with a four-sigma allowance on the
    comparison) otherwise.
    """
    if len(family) < 2:
        raise EmptyFamilyError("need a null plus at least one alternative")
    D0 = family.members[0]
    eps = 1.0 - min(tv_distance(D0, d) for d in family.members[1:])
    m = len(family) - 1
    bound = 1.0 - m * eps

    P = family.prob_matrix()
    with np.errstate(divide="ignore"):
        logP = np.log(P)
    size = len(family.domain) ** T
    if size <= EXACT_OUTCOME_LIMIT:
        method = "exact"
        pr = 0.0
        for tup in itertools.product(range(len(family.domain)), repeat=T):
            scores = logP[:, tup].sum(axis=1)
            if int(np.argmax(scores)) == 0:
                pr += float(np.prod(D0.probs[list(tup)]))
        margin = 0.0
    else:
        if seed is None:
            raise ValueError("Monte-Carlo fallback needs a seed")
        method = "monte-carlo"
        gen = rng.generator(rng.derive_seed(seed, "optimality", T))
        draws = gen.choice(len(family.domain), size=(trials, T), p=D0.probs)
        wins = 0
        for row in draws:
            if int(np.argmax(logP[:, row].sum(axis=1))) == 0:
                wins += 1
        pr = wins / trials
        margin = 4.0 * math.sqrt(max(pr * (1.0 - pr), 1.0 / trials) / trials)
    ok = pr >= bound - margin - 1e-12
    report = {
        "method": method,
        "epsilon": eps,
        "alternatives": m,
        "bound": bound,
        "pr_select_null": pr,
        "T": T,
        "pass": ok,
    }
    if not ok:
        raise BoundViolationError(f"selection guarantee violated: {report}")
    return report


# ---------- Trace reconstruction by likelihood ----------


@dataclass(frozen=True)
class TraceMLEResult:
    bits: str
    degenerate: bool
    index: int


@functools.lru_cache(maxsize=8)
def _candidate_matrix(n: int) -> np.ndarray:
    """All length-n strings as rows, lexicographic order."""
    idx = np.arange(1 << n, dtype=np.uint32)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint32)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _score_traces(
    cands: np.ndarray, traces: np.ndarray, lengths: np.ndarray, params: ChannelParams
) -> np.ndarray:
    """Total log-likelihood of each candidate row for the given traces."""
    n = cands.shape[1]
    scores = np.zeros(len(cands))
    for t in range(len(traces)):
        m = int(lengths[t])
        counts = subsequence_count_batch(cands, np.ascontiguousarray(traces[t, :m]))
        ll = np.full(len(cands), -np.inf)
        pos = counts > 0
        base = 0.0
        if n > m:
            base += (n - m) * (math.log(params.p) if params.p > 0 else -math.inf)
        if m > 0:
            base += m * (math.log(params.q) if params.q > 0 else -math.inf)
        if math.isfinite(base):
            ll[pos] = np.log(counts[pos]) + base
        scores += ll
    return scores


def trace_mle_reconstruct(
    traces, n: int, params: ChannelParams, candidates=None
) -> TraceMLEResult:
    """Likelihood-maximizing source string for a set of traces.

    Searches all 2^n strings when no candidate list is given (guarded at
    n = 20); ties and all-impossible trace sets resolve to the
    lexicographically smallest candidate, the latter with the degenerate
    flag set.  Traces may be Trace objects or plain strings.
    """
    if candidates is None:
        if n > FULL_SPACE_LIMIT:
            raise SizeGuardError(
                f"full-space search needs n <= {FULL_SPACE_LIMIT}; pass candidates"
            )
        cands = _candidate_matrix(n)
        labels = None
    else:
        labels = sorted({check_bits(getattr(c, "bits", c)) for c in candidates})
        if not labels:
            raise EmptyFamilyError("empty candidate list")
        if any(len(c) != n for c in labels):
            raise DomainMismatchError("candidate length differs from n")
        cands = np.stack([bits_to_array(c) for c in labels])

    tr_bits = [getattr(t, "bits", t) for t in traces]
    count = len(tr_bits)
    maxlen = max((len(t) for t in tr_bits), default=0)
    mat = np.zeros((count, max(maxlen, 1)), dtype=np.uint8)
    lengths = np.zeros(count, dtype=np.int64)
    for i, t in enumerate(tr_bits):
        check_bits(t)
        lengths[i] = len(t)
        if t:
            mat[i, : len(t)] = bits_to_array(t)

    scores = _score_traces(np.ascontiguousarray(cands), mat, lengths, params)
    best = int(np.argmax(scores))  # first max = lexicographically smallest
    degenerate = not math.isfinite(scores[best])
    bits = labels[best] if labels is not None else array_to_bits(cands[best])
    return TraceMLEResult(bits=bits, degenerate=degenerate, index=best)


# ---------- The adversarial subset family ----------


@dataclass(frozen=True)
class SubsetFamilyInfo:
    family: DistributionFamily
    n: int
    t: int
    subset_count: int
    subsets: tuple[tuple[int, ...], ...]


def lb_family(n: int) -> SubsetFamilyInfo:
    """Null uniform on n points versus one member per t-subset, t = n//4.

    Member D_S concentrates 2/3 on the set outcome itself and spreads
    1/3 over the points of S, so a single sample already identifies S
    with probability 2/3, yet any batch of at most t null samples is
    better explained by some covering subset than by the null.
    """
    if n < 4:
        raise ValueError("need n >= 4")
    t = n // 4
    count = math.comb(n, t)
    if (count + 1) * (count + n) > SUBSET_FAMILY_CELL_LIMIT:
        raise SizeGuardError(
            f"the {count}-subset family would need more than "
            f"{SUBSET_FAMILY_CELL_LIMIT} table cells"
        )
    subsets = tuple(itertools.combinations(range(n), t))
    domain = tuple(("set", S) for S in subsets) + tuple(("pt", i) for i in range(n))
    third = 1.0 / (3.0 * t)

    probs0 = {("pt", i): 1.0 / n for i in range(n)}
    tables = [DistributionTable(domain, [probs0.get(o, 0.0) for o in domain])]
    for S in subsets:
        pS = {("set", S): 2.0 / 3.0}
        for i in S:
            pS[("pt", i)] = third
        tables.append(DistributionTable(domain, [pS.get(o, 0.0) for o in domain]))
    return SubsetFamilyInfo(
        family=DistributionFamily(domain=domain, members=tuple(tables)),
        n=n,
        t=t,
        subset_count=len(subsets),
        subsets=subsets,
    )


def lb_verify(n: int, T: int) -> dict:
    """The subset family defeats MLE while a one-sample test succeeds.

    Exhaustively enumerates all n^T batches of null samples (n^T capped
    at 10^5) and confirms none selects the null; independently replays
    the covering argument: the distinct values of any such batch fit
    inside some t-subset whose per-sample likelihood 1/(3t) beats the
    null's 1/n.  Also reads off the trivial distinguisher's success:
    2/3 under every subset member, 1 under the null.
    """
    if T < 1:
        raise ValueError("need T >= 1")
    info = lb_family(n)
    t = info.t
    if T > t:
        raise ValueError(f"covering argument needs T <= t = {t}")
    if n**T > EXACT_OUTCOME_LIMIT:
        raise SizeGuardError(f"{n}^{T} batches exceed the enumeration guard")

    # Log-probabilities of every member on the n point outcomes.
    fam = info.family
    point_cols = [fam.domain.index(("pt", i)) for i in range(n)]
    P = fam.prob_matrix()[:, point_cols]
    with np.errstate(divide="ignore"):
        logP = np.log(P)

    null_wins = 0
    covering_ok = True
    gap_lhs = (1.0 / (3.0 * t)) ** T
    gap_rhs = (1.0 / n) ** T
    for tup in itertools.product(range(n), repeat=T):
        scores = logP[:, tup].sum(axis=1)
        if int(np.argmax(scores)) == 0:
            null_wins += 1
        distinct = sorted(set(tup))
        S = tuple(distinct + [i for i in range(n) if i not in distinct])[:t]
        S = tuple(sorted(S))
        idx = 1 + info.subsets.index(S)
        member_ll = float(scores[idx])
        if not (
            set(distinct) <= set(S)
            and abs(member_ll - math.log(gap_lhs)) <= 1e-9
            and gap_lhs > gap_rhs
        ):
            covering_ok = False

    # Distinguisher: answer the set outcome's subset on set outcomes,
    # the null on point outcomes.  Success probabilities are structural:
    # D_S puts exactly 2/3 on its own set outcome, the null puts zero
    # mass outside the points.
    success_S = [d.prob_of(("set", S)) for S, d in zip(info.subsets, fam.members[1:])]
    exact_two_thirds = all(s == 2.0 / 3.0 for s in success_S)
    null_mass_on_sets = float(
        sum(fam.members[0].prob_of(("set", S)) for S in info.subsets)
    )
    success_null = 1.0 - null_mass_on_sets

    return {
        "n": n,
        "t": t,
        "T": T,
        "batches_checked": n**T,
        "pr_mle_null": null_wins / n**T if null_wins else 0.0,
        "null_never_selected": null_wins == 0,
        "covering_ok": covering_ok,
        "per_sample_gap": (gap_lhs, gap_rhs),
        "distinguisher_success_subset": 2.0 / 3.0 if exact_two_thirds else min(success_S),
        "distinguisher_success_null": success_null,
        "pass": null_wins == 0
        and covering_ok
        and exact_two_thirds
        and success_null == 1.0,
    }


def map_equals_mle_check(
    family: DistributionFamily, trials: int, seed: int
) -> dict:
    """Posterior argmax under a uniform prior versus mle, batch by batch.

    The two routes use different arithmetic (products versus log sums),
    so exact index agreement on every random batch is an actual test of
    the argmax identity, not a tautology.
    """
    gen = rng.generator(rng.derive_seed(seed, "map-vs-mle"))
    disagreements = 0
    for _ in range(trials):
        j = int(gen.integers(0, len(family)))
        T = int(gen.integers(1, 4))
        member = family.members[j]
        if member.probs.sum() <= 0:
            continue
        draws = gen.choice(len(family.domain), size=T, p=member.probs)
        batch = SampleBatch(samples=tuple(family.domain[d] for d in draws))
        if mle(batch, family).index != map_estimate(batch, family):
            disagreements += 1
    return {"trials": trials, "disagreements": disagreements, "pass": disagreements == 0}


# ---------- Success-curve harness ----------


def isotonic_non_decreasing(values) -> np.ndarray:
    """Pool-adjacent-violators fit, non-decreasing, uniform weights."""
    blocks = [[float(v), 1] for v in values]
    merged: list[list[float]] = []
    for b in blocks:
        merged.append(b)
        while len(merged) > 1 and merged[-2][0] > merged[-1][0]:
            v2, w2 = merged.pop()
            v1, w1 = merged.pop()
            merged.append([(v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2])
    out = []
    for v, w in merged:
        out.extend([v] * w)
    return np.array(out)


def amplified_success_curve(
    x_pool, params: ChannelParams, T_grid, trials: int, seed: int
) -> dict:
    """Success frequency of full-space trace MLE versus trace count.

    One row per (source, T) cell with its own derived seed chain; the
    smoothed per-source curves are checked non-decreasing, and p = 0
    with a single trace must reconstruct perfectly.
    """
    pool = [check_bits(x) for x in x_pool]
    if not pool:
        raise EmptyFamilyError("empty source pool")
    n = len(pool[0])
    if any(len(x) != n for x in pool) or n > 16:
        raise DomainMismatchError("sources must share one length n <= 16")
    T_grid = [int(T) for T in T_grid]

    rows = []
    for x in pool:
        for T in T_grid:
            wins = 0
            for trial in range(trials):
                cell = rng.derive_seed(seed, "amp", x, T, trial)
                traces, lengths = sample_trace_batch(x, params, cell, T)
                got = trace_mle_reconstruct(
                    [array_to_bits(traces[t, : lengths[t]]) for t in range(T)],
                    n,
                    params,
                )
                wins += got.bits == x
            rate = wins / trials
            rows.append(
                {
                    "n": n,
                    "p": params.p,
                    "T": T,
                    "source": x,
                    "success_rate": rate,
                    "trials": trials,
                    "seed": seed,
                }
            )
            if params.p == 0.0 and T >= 1 and rate != 1.0:
                raise BoundViolationError("lossless channel must reconstruct exactly")

    smoothed = {}
    for x in pool:
        curve = [r["success_rate"] for r in rows if r["source"] == x]
        fit = isotonic_non_decreasing(curve)
        if np.any(np.diff(fit) < 0):
            raise BoundViolationError("isotonic fit must be non-decreasing")
        smoothed[x] = fit.tolist()
    return {"rows": rows, "smoothed": smoothed, "T_grid": T_grid}
