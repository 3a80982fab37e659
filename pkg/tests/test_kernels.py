"""Backend parity: the compiled kernels must match the numpy fallback."""

import numpy as np
import pytest

from tracelab import _pykernels, rng
from tracelab.channel import ChannelParams, subsequence_count, trace_distribution
from tracelab.kernels import BACKEND, COMPILED, IMPLEMENTATIONS

needs_compiled = pytest.mark.skipif(
    "compiled" not in IMPLEMENTATIONS, reason="compiled extension not built"
)


def _random_inputs(seed):
    gen = rng.generator(rng.derive_seed(seed, "kernel-parity"))
    members, grid, pairs = 97, 33, 500
    U = gen.normal(size=(members, grid)) + 1j * gen.normal(size=(members, grid))
    ia = gen.integers(0, members, size=pairs).astype(np.int64)
    ib = gen.integers(0, members, size=pairs).astype(np.int64)
    V = np.ascontiguousarray(gen.normal(size=(members, 13)))
    cands = gen.integers(0, 2, size=(64, 15)).astype(np.uint8)
    t = gen.integers(0, 2, size=6).astype(np.uint8)
    x = gen.integers(0, 2, size=24).astype(np.uint8)
    keep = gen.uniform(size=(50, 24)) < 0.6
    return U, ia, ib, V, cands, t, x, keep


def test_dispatch_names_its_backend():
    assert BACKEND in IMPLEMENTATIONS
    assert COMPILED == ("compiled" in IMPLEMENTATIONS)
    assert "python" in IMPLEMENTATIONS


@needs_compiled
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_pair_sups_parity(seed):
    U, ia, ib, *_ = _random_inputs(seed)
    ck = IMPLEMENTATIONS["compiled"]
    a = _pykernels.pair_sups(U, ia, ib)
    b = ck.pair_sups(U, ia, ib)
    assert np.allclose(a, b, rtol=1e-12, atol=0.0)


@needs_compiled
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_pair_l1_dists_parity(seed):
    _, ia, ib, V, *_ = _random_inputs(seed)
    ck = IMPLEMENTATIONS["compiled"]
    a = _pykernels.pair_l1_dists(V, ia, ib)
    b = ck.pair_l1_dists(V, ia, ib)
    assert np.allclose(a, b, rtol=1e-12, atol=0.0)


@needs_compiled
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_subsequence_count_batch_parity(seed):
    *_, cands, t, _, _ = _random_inputs(seed)
    ck = IMPLEMENTATIONS["compiled"]
    a = _pykernels.subsequence_count_batch(cands, t)
    b = ck.subsequence_count_batch(cands, t)
    assert np.array_equal(a, b)


@needs_compiled
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_scatter_traces_parity(seed):
    *_, x, keep = _random_inputs(seed)
    ck = IMPLEMENTATIONS["compiled"]
    ta, la = _pykernels.scatter_traces(x, keep)
    tb, lb = ck.scatter_traces(x, keep)
    assert np.array_equal(ta, tb)
    assert np.array_equal(la, lb)


# ---------- Ground truth, independent of both backends ----------


def test_batch_counts_match_the_bigint_counter():
    gen = rng.generator(rng.derive_seed(5, "counts"))
    n = 14
    cands = gen.integers(0, 2, size=(40, n)).astype(np.uint8)
    t = gen.integers(0, 2, size=5).astype(np.uint8)
    tb = "".join(map(str, t))
    for impl in IMPLEMENTATIONS.values():
        counts = impl.subsequence_count_batch(cands, t)
        for row, got in zip(cands, counts):
            want = subsequence_count("".join(map(str, row)), tb)
            assert got == want


def test_batch_counts_complete_enumeration_small_n():
    n = 10
    cands = ((np.arange(1 << n)[:, None] >> np.arange(n)[::-1]) & 1).astype(np.uint8)
    t = np.array([1, 0, 1], dtype=np.uint8)
    for impl in IMPLEMENTATIONS.values():
        counts = impl.subsequence_count_batch(cands, t)
        assert counts[int("1010101010", 2)] == subsequence_count("1010101010", "101")
        assert counts[0] == 0.0  # all zeros cannot embed 101
        assert float(counts.sum()) > 0


def test_scatter_matches_a_python_loop():
    gen = rng.generator(rng.derive_seed(11, "scatter"))
    x = gen.integers(0, 2, size=9).astype(np.uint8)
    keep = gen.uniform(size=(25, 9)) < 0.4
    for impl in IMPLEMENTATIONS.values():
        traces, lengths = impl.scatter_traces(x, keep)
        for r in range(25):
            want = [int(x[c]) for c in range(9) if keep[r, c]]
            assert lengths[r] == len(want)
            assert list(traces[r, : len(want)]) == want
            assert not traces[r, len(want) :].any()


def test_scatter_agrees_with_the_channel_distribution_support():
    # Each scattered row is a subsequence, so it must be in the exact
    # trace distribution's domain.
    x = "101100"
    dom = set(trace_distribution(x, ChannelParams(0.5)).domain)
    xa = np.array([int(b) for b in x], dtype=np.uint8)
    keep = np.array(
        [[(v >> (5 - j)) & 1 for j in range(6)] for v in range(64)], dtype=bool
    )
    for impl in IMPLEMENTATIONS.values():
        traces, lengths = impl.scatter_traces(xa, keep)
        for r in range(64):
            assert "".join(map(str, traces[r, : lengths[r]])) in dom


# ---------- Edge cases ----------


@pytest.mark.parametrize("backend", sorted(IMPLEMENTATIONS))
def test_empty_pair_lists(backend):
    impl = IMPLEMENTATIONS[backend]
    U = np.ones((3, 4), dtype=np.complex128)
    V = np.ones((3, 4), dtype=np.float64)
    empty = np.zeros(0, dtype=np.int64)
    assert impl.pair_sups(U, empty, empty).shape == (0,)
    assert impl.pair_l1_dists(V, empty, empty).shape == (0,)


@pytest.mark.parametrize("backend", sorted(IMPLEMENTATIONS))
def test_overlong_trace_gives_zero_counts(backend):
    impl = IMPLEMENTATIONS[backend]
    cands = np.ones((5, 3), dtype=np.uint8)
    t = np.ones(4, dtype=np.uint8)
    assert np.array_equal(impl.subsequence_count_batch(cands, t), np.zeros(5))


@pytest.mark.parametrize("backend", sorted(IMPLEMENTATIONS))
def test_scatter_with_no_rows_or_no_columns(backend):
    impl = IMPLEMENTATIONS[backend]
    x = np.array([1, 0, 1], dtype=np.uint8)
    traces, lengths = impl.scatter_traces(x, np.zeros((0, 3), dtype=bool))
    assert traces.shape == (0, 3) and lengths.shape == (0,)
    traces, lengths = impl.scatter_traces(
        np.zeros(0, dtype=np.uint8), np.zeros((4, 0), dtype=bool)
    )
    assert traces.shape == (4, 0)
    assert np.array_equal(lengths, np.zeros(4, dtype=np.int64))


@pytest.mark.parametrize("backend", sorted(IMPLEMENTATIONS))
def test_identical_rows_have_zero_distance(backend):
    impl = IMPLEMENTATIONS[backend]
    U = np.tile(np.arange(6, dtype=np.complex128), (2, 1))
    V = np.tile(np.arange(6, dtype=np.float64), (2, 1))
    ia = np.array([0], dtype=np.int64)
    ib = np.array([1], dtype=np.int64)
    assert impl.pair_sups(U, ia, ib)[0] == 0.0
    assert impl.pair_l1_dists(V, ia, ib)[0] == 0.0
