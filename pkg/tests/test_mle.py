"""Likelihood selection: guarantees, subset lower-bound family, traces."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tracelab import mle as ml
from tracelab import rng
from tracelab.channel import ChannelParams, DistributionTable, trace_distribution
from tracelab.errors import (
    DomainMismatchError,
    EmptyFamilyError,
    SizeGuardError,
)


def table(domain, probs):
    return DistributionTable(tuple(domain), probs)


# ---------- Family construction ----------


def test_build_unions_and_zero_fills():
    fam = ml.DistributionFamily.build(
        [table("ab", [0.5, 0.5]), table("bc", [0.25, 0.75])]
    )
    assert fam.domain == ("a", "b", "c")
    assert np.allclose(fam.members[0].probs, [0.5, 0.5, 0.0])
    assert np.allclose(fam.members[1].probs, [0.0, 0.25, 0.75])


def test_family_requires_members_and_shared_domain():
    with pytest.raises(EmptyFamilyError):
        ml.DistributionFamily(domain=("a",), members=())
    with pytest.raises(DomainMismatchError):
        ml.DistributionFamily(
            domain=("a", "b"),
            members=(table("ab", [1, 0]), table("ba", [1, 0])),
        )


def test_family_json_roundtrip_with_tuple_outcomes():
    fam = ml.lb_family(8).family
    back = ml.DistributionFamily.from_json(fam.to_json())
    assert back.domain == fam.domain
    for A, B in zip(back.members, fam.members):
        assert np.allclose(A.probs, B.probs)


# ---------- Likelihood and selection ----------


def test_log_likelihood_hand_value():
    D = table("ab", [0.25, 0.75])
    batch = ml.SampleBatch(samples=("a", "b", "b"))
    assert ml.log_likelihood(batch, D) == pytest.approx(
        math.log(0.25) + 2 * math.log(0.75)
    )


def test_log_likelihood_zero_mass_and_off_domain():
    D = table("ab", [1.0, 0.0])
    assert ml.log_likelihood(ml.SampleBatch(samples=("b",)), D) == -math.inf
    with pytest.raises(DomainMismatchError):
        ml.log_likelihood(ml.SampleBatch(samples=("z",)), D)


def test_mle_breaks_ties_at_the_smallest_index():
    dup = table("ab", [0.5, 0.5])
    fam = ml.DistributionFamily(domain=("a", "b"), members=(dup, dup, dup))
    res = ml.mle(ml.SampleBatch(samples=("a",)), fam)
    assert res.index == 0
    assert not res.degenerate


def test_mle_degenerate_when_no_member_admits_the_batch():
    fam = ml.DistributionFamily.build(
        [table("ab", [1.0, 0.0]), table("ab", [1.0, 0.0])]
    )
    res = ml.mle(ml.SampleBatch(samples=("b",)), fam)
    assert res.degenerate
    assert res.index == 0


@given(st.integers(0, 10**6))
def test_map_agrees_with_mle_pointwise(seed):
    fam = ml.random_family(4, 3, seed)
    gen = rng.generator(rng.derive_seed(seed, "draw"))
    j = int(gen.integers(0, 3))
    draws = gen.choice(4, size=2, p=fam.members[j].probs)
    batch = ml.SampleBatch(samples=tuple(int(d) for d in draws))
    assert ml.map_estimate(batch, fam) == ml.mle(batch, fam).index


# ---------- Selection guarantee ----------


def test_uniform_vs_points_is_tight_at_zero():
    rep = ml.optimality_bound_check(ml.uniform_vs_point_masses(5))
    assert rep["pass"]
    assert rep["method"] == "exact"
    assert rep["pr_select_null"] == 0.0
    assert abs(rep["bound"]) <= 1e-12
    # epsilon = 1 - tv = 1/m and there are m alternatives.
    assert rep["epsilon"] == pytest.approx(0.2)
    assert rep["alternatives"] == 5


def test_optimality_on_random_families_exact():
    for i in range(10):
        fam = ml.random_family(3 + i % 3, 2 + i % 4, rng.derive_seed(2, "fam", i))
        rep = ml.optimality_bound_check(fam)
        assert rep["pass"], rep
        assert rep["method"] == "exact"
        assert rep["pr_select_null"] >= rep["bound"] - 1e-12


def test_optimality_exact_summation_against_direct_enumeration():
    # Recompute Pr[MLE selects member 0 | member 0] by looping over
    # outcome tuples with plain floats.
    fam = ml.random_family(3, 3, 99)
    T = 2
    rep = ml.optimality_bound_check(fam, T=T)
    P = fam.prob_matrix()
    total = 0.0
    for tup in itertools.product(range(3), repeat=T):
        liks = [math.prod(P[m][o] for o in tup) for m in range(3)]
        if max(range(3), key=lambda m: (liks[m], -m)) == 0:
            total += liks[0]
    assert rep["pr_select_null"] == pytest.approx(total, abs=1e-12)


def test_optimality_monte_carlo_path_needs_a_seed():
    fam = ml.random_family(12, 3, 7)
    with pytest.raises(ValueError):
        ml.optimality_bound_check(fam, T=6)  # 12^6 outcomes, no seed
    rep = ml.optimality_bound_check(fam, T=6, seed=11, trials=2000)
    assert rep["method"] == "monte-carlo"
    assert rep["pass"]


def test_product_table_is_the_product_measure():
    D = table("ab", [0.25, 0.75])
    P2 = ml.product_table(D, 2)
    assert set(P2.domain) == set(itertools.product("ab", repeat=2))
    assert P2.prob_of(("a", "b")) == pytest.approx(0.25 * 0.75)
    assert float(P2.probs.sum()) == pytest.approx(1.0)
    with pytest.raises(SizeGuardError):
        ml.product_table(table(range(100), [0.01] * 100), 4)


def test_random_family_rows_are_distributions():
    fam = ml.random_family(6, 4, 123)
    M = fam.prob_matrix()
    assert M.shape == (4, 6)
    assert np.all(M > 0)
    assert np.allclose(M.sum(axis=1), 1.0)


# ---------- Subset lower-bound family ----------


def test_lb_family_structure():
    info = ml.lb_family(8)
    assert info.n == 8 and info.t == 2
    assert info.subset_count == math.comb(8, 2)
    assert len(info.family.members) == 1 + info.subset_count
    null = info.family.members[0]
    # Null: uniform over the n point outcomes, no set outcomes.
    point_mass = sum(
        null.prob_of(o) for o in info.family.domain if o[0] == "pt"
    )
    assert point_mass == pytest.approx(1.0)
    # Each subset member: 2/3 on its set outcome, 1/(3t) on its points.
    member = info.family.members[1]
    S = info.subsets[0]
    assert member.prob_of(("set", S)) == 2.0 / 3.0
    for i in S:
        assert member.prob_of(("pt", i)) == pytest.approx(1.0 / 6.0)


def test_lb_verify_core_quantities():
    rep = ml.lb_verify(8, 2)
    assert rep["pass"]
    assert rep["pr_mle_null"] == 0.0
    assert rep["null_never_selected"]
    assert rep["distinguisher_success_subset"] == 2.0 / 3.0
    assert rep["distinguisher_success_null"] == 1.0
    assert rep["covering_ok"]
    # Per-sample point masses: members put 1/6 on their points, the
    # null 1/8, so member tuples strictly dominate: (1/6)^2 > (1/8)^2.
    assert (1.0 / 6.0) ** 2 > (1.0 / 8.0) ** 2
    assert rep["batches_checked"] == 8**2


def test_lb_verify_rejects_oversized_requests():
    with pytest.raises(ValueError):
        ml.lb_verify(8, 3)  # T must stay within t = n // 4
    with pytest.raises(SizeGuardError):
        ml.lb_verify(100, 3)


# ---------- Trace MLE ----------


def test_trace_mle_lossless_identity():
    params = ChannelParams(0.0)
    for x in ("0", "10", "0110", "111000", "10101010"):
        got = ml.trace_mle_reconstruct([x], len(x), params)
        assert got.bits == x
        assert not got.degenerate


def test_trace_mle_with_explicit_candidates():
    params = ChannelParams(0.2)
    got = ml.trace_mle_reconstruct(
        ["11"], 4, params, candidates=["0000", "1100", "1111"]
    )
    assert got.bits == "1111"


def test_trace_mle_lex_tie_break():
    # Both candidates embed the trace the same number of ways.
    params = ChannelParams(0.5)
    got = ml.trace_mle_reconstruct(["1"], 2, params, candidates=["10", "01"])
    assert got.bits == "01"


def test_trace_mle_degenerate_when_trace_cannot_embed():
    got = ml.trace_mle_reconstruct(["111"], 2, ChannelParams(0.5))
    assert got.degenerate


def test_trace_mle_size_guard():
    with pytest.raises(SizeGuardError):
        ml.trace_mle_reconstruct(["1"], 21, ChannelParams(0.5))


def test_trace_mle_maximizes_true_likelihood():
    # Against a direct per-candidate product of trace probabilities.
    from tracelab.channel import trace_probability

    params = ChannelParams(0.3)
    n = 6
    traces = ["1010", "110"]
    got = ml.trace_mle_reconstruct(traces, n, params)
    best = None
    for v in range(1 << n):
        c = format(v, f"0{n}b")
        lik = math.prod(trace_probability(c, t, params) for t in traces)
        if best is None or lik > best[1] + 1e-18:
            best = (c, lik)
    assert got.bits == best[0]


# ---------- Success curves ----------


def test_isotonic_fit_properties():
    fit = ml.isotonic_non_decreasing([0.3, 0.1, 0.5, 0.4, 0.9])
    assert np.all(np.diff(fit) >= 0)
    assert float(fit.sum()) == pytest.approx(0.3 + 0.1 + 0.5 + 0.4 + 0.9)
    already = [0.1, 0.2, 0.9]
    assert np.array_equal(ml.isotonic_non_decreasing(already), already)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_isotonic_fit_is_monotone_and_mean_preserving(values):
    fit = ml.isotonic_non_decreasing(values)
    assert np.all(np.diff(fit) >= -1e-12)
    assert float(fit.mean()) == pytest.approx(float(np.mean(values)))


def test_amplified_curve_perfect_at_p_zero():
    rep = ml.amplified_success_curve(
        ["0110", "1001"], ChannelParams(0.0), [1, 2], trials=5, seed=3
    )
    assert all(r["success_rate"] == 1.0 for r in rep["rows"])


def test_amplified_curve_rows_and_smoothing():
    rep = ml.amplified_success_curve(
        ["01101", "10010"], ChannelParams(0.3), [1, 2, 3], trials=30, seed=9
    )
    assert len(rep["rows"]) == 6
    for x, curve in rep["smoothed"].items():
        assert len(curve) == 3
        assert all(b >= a - 1e-12 for a, b in zip(curve, curve[1:]))


def test_map_equals_mle_check_runs_clean():
    fam = ml.DistributionFamily.build(
        [trace_distribution(x, ChannelParams(0.25)) for x in ("000", "010", "111")]
    )
    rep = ml.map_equals_mle_check(fam, trials=300, seed=5)
    assert rep["pass"]
    assert rep["disagreements"] == 0
