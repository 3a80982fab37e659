"""Channel layer: exact distributions, counts, sampling, distances."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tracelab import rng
from tracelab.channel import (
    ChannelParams,
    DistributionTable,
    Trace,
    sample_trace,
    sample_trace_batch,
    subsequence_count,
    trace_distribution,
    trace_probability,
    tv_distance,
)
bits = st.text(alphabet="01", min_size=0, max_size=10)
nonempty_bits = st.text(alphabet="01", min_size=1, max_size=10)


# ---------- Oracles ----------


def keepset_distribution(x: str, p: float) -> dict:
    """Literal keep-set enumeration: sum p^(deleted) q^(kept) per trace."""
    out: dict = {}
    n = len(x)
    for mask in itertools.product([0, 1], repeat=n):
        t = "".join(x[i] for i in range(n) if mask[i])
        pr = math.prod((1.0 - p) if mask[i] else p for i in range(n))
        out[t] = out.get(t, 0.0) + pr
    return out


def distinct_subsequence_brute(x: str, t: str) -> int:
    """Count index sets realizing t inside x, one tuple at a time."""
    n, m = len(x), len(t)
    return sum(
        1
        for pos in itertools.combinations(range(n), m)
        if all(x[pos[i]] == t[i] for i in range(m))
    )


# ---------- Distribution exactness ----------


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("x", ["0", "1", "01", "110", "10101", "0011001"])
def test_distribution_matches_keepset_enumeration(x, p):
    table = trace_distribution(x, ChannelParams(p))
    oracle = keepset_distribution(x, p)
    assert set(table.domain) == set(oracle)
    for t, pr in oracle.items():
        assert table.prob_of(t) == pytest.approx(pr, abs=1e-14)


@given(x=bits, p=st.sampled_from([0.0, 0.25, 0.5, 0.8, 1.0]))
def test_distribution_normalizes(x, p):
    table = trace_distribution(x, ChannelParams(p))
    assert abs(float(table.probs.sum()) - 1.0) <= 1e-12


def test_distribution_degenerate_endpoints():
    table = trace_distribution("1011", ChannelParams(0.0))
    assert table.prob_of("1011") == 1.0
    table = trace_distribution("1011", ChannelParams(1.0))
    assert table.prob_of("") == 1.0


@given(x=nonempty_bits)
def test_domain_is_exactly_the_distinct_subsequences(x):
    table = trace_distribution(x, ChannelParams(0.3))
    brute = {
        "".join(x[i] for i in range(len(x)) if mask[i])
        for mask in itertools.product([0, 1], repeat=len(x))
    }
    assert set(table.domain) == brute


# ---------- Embedding counts ----------


@given(x=bits, t=st.text(alphabet="01", max_size=5))
def test_subsequence_count_matches_brute(x, t):
    assert subsequence_count(x, t) == distinct_subsequence_brute(x, t)


@pytest.mark.parametrize("n,m", [(10, 3), (40, 17), (64, 30), (120, 60)])
def test_count_of_zeros_in_zeros_is_binomial(n, m):
    # The one closed form that stays exact at any scale.
    assert subsequence_count("0" * n, "0" * m) == math.comb(n, m)


def test_count_empty_trace_and_self():
    assert subsequence_count("10110", "") == 1
    assert subsequence_count("10110", "10110") == 1
    assert subsequence_count("", "1") == 0


def test_counts_are_python_ints_beyond_float_precision():
    value = subsequence_count("0" * 120, "0" * 60)
    assert isinstance(value, int)
    assert value == math.comb(120, 60)
    assert value > 2**53


# ---------- Trace probability, including the log-domain regime ----------


@given(x=nonempty_bits, p=st.sampled_from([0.1, 0.4, 0.7]))
def test_trace_probability_factors(x, p):
    params = ChannelParams(p)
    table = trace_distribution(x, params)
    for t in list(table.domain)[:8]:
        expect = (
            subsequence_count(x, t)
            * p ** (len(x) - len(t))
            * (1.0 - p) ** len(t)
        )
        assert trace_probability(x, t, params) == pytest.approx(expect, rel=1e-12)


def test_trace_probability_long_input_log_domain():
    # n = 100 with a balanced trace: the count alone overflows float64,
    # so the product has to be assembled in log space.  Oracle via
    # lgamma on the closed-form count.
    n, m = 100, 50
    x, t = "0" * n, "0" * m
    p = 0.5
    log_expect = (
        math.lgamma(n + 1)
        - math.lgamma(m + 1)
        - math.lgamma(n - m + 1)
        + (n - m) * math.log(p)
        + m * math.log(1.0 - p)
    )
    got = trace_probability(x, t, ChannelParams(p))
    assert math.log(got) == pytest.approx(log_expect, rel=1e-9)


def test_trace_probability_zero_for_non_subsequence():
    assert trace_probability("000", "1", ChannelParams(0.5)) == 0.0


# ---------- Sampling ----------


def test_sample_trace_is_subsequence_and_deterministic():
    params = ChannelParams(0.4)
    t1 = sample_trace("1011010011", params, 123)
    t2 = sample_trace("1011010011", params, 123)
    assert t1.bits == t2.bits
    t1.validate_against("1011010011")


def test_sample_trace_batch_shapes_and_lengths():
    x = "110100101101"
    mat, lengths = sample_trace_batch(x, ChannelParams(0.3), 9, 500)
    assert mat.shape == (500, len(x))
    assert mat.dtype == np.uint8
    for row, ln in zip(mat, lengths):
        assert row[ln:].sum() == 0
        Trace("".join("01"[b] for b in row[:ln])).validate_against(x)


def test_batch_length_concentration():
    # Mean surviving length is n*q; 6 sigma at a fixed seed keeps this
    # deterministic and still a real check of the deletion rate.
    x = "10" * 16
    n, p, T = 32, 0.25, 20000
    _, lengths = sample_trace_batch(x, ChannelParams(p), 77, T)
    sigma = math.sqrt(n * p * (1 - p) / T)
    assert abs(float(lengths.mean()) - n * (1 - p)) <= 6 * sigma


def test_validate_against_checks_origin_annotations():
    # A trace without origins carries nothing to check.
    Trace("111").validate_against("1001")
    with pytest.raises(ValueError):
        Trace("11", origins=(0, 1)).validate_against("10")
    with pytest.raises(ValueError):
        Trace("11", origins=(2, 1)).validate_against("111")
    Trace("11", origins=(0, 2)).validate_against("101")


# ---------- Distribution table and total variation ----------


def test_table_rejects_bad_inputs():
    with pytest.raises(ValueError):
        DistributionTable(("a", "a"), [0.5, 0.5])
    with pytest.raises(ValueError):
        DistributionTable(("a", "b"), [0.9, -0.1])
    with pytest.raises(ValueError):
        DistributionTable(("a", "b"), [0.9, 0.3])


def test_prob_of_unknown_outcome_is_zero():
    table = DistributionTable(("a", "b"), [0.4, 0.6])
    assert table.prob_of("zzz") == 0.0


def test_tv_hand_cases():
    A = DistributionTable(("a", "b"), [1.0, 0.0])
    B = DistributionTable(("c",), [1.0])
    C = DistributionTable(("a", "b"), [0.5, 0.5])
    assert tv_distance(A, A) == 0.0
    assert tv_distance(A, B) == pytest.approx(1.0)
    assert tv_distance(A, C) == pytest.approx(0.5)


@given(
    probs=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
    probs2=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
)
def test_tv_is_a_bounded_metric(probs, probs2):
    m = min(len(probs), len(probs2))
    a = np.array(probs[:m]) / sum(probs[:m])
    b = np.array(probs2[:m]) / sum(probs2[:m])
    dom = tuple(str(i) for i in range(m))
    A, B = DistributionTable(dom, a), DistributionTable(dom, b)
    d = tv_distance(A, B)
    assert 0.0 <= d <= 1.0 + 1e-12
    assert d == pytest.approx(tv_distance(B, A))
    assert d == pytest.approx(0.5 * float(np.abs(a - b).sum()))


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(-0.1)
    with pytest.raises(ValueError):
        ChannelParams(1.5)
    assert ChannelParams(0.3).q == pytest.approx(0.7)


def test_derive_seed_is_stable_and_distinct():
    a = rng.derive_seed(5, "x", 1)
    b = rng.derive_seed(5, "x", 2)
    assert a == rng.derive_seed(5, "x", 1)
    assert a != b
