"""Families of strings whose window polynomials nearly collide.

The canonical family at scale L (a perfect cube, s = L^(1/3)) consists
of the 2^(s^2 - 1) strings

    0^(s-1) b_1 0^(s-1) b_2 ... 0^(s-1) b_(s^2-1) 0^(s-1) 0,

i.e. free bits separated by runs of s - 1 zeros.  Every window of width
k <= s contains at most one 1, which collapses the window-polynomial
family to a single generator and makes near-collisions findable by a
pigeonhole argument on truncated Chebyshev coefficient vectors.  The
pair scans here locate the closest pair under the supremum of the
polynomial difference on a narrow unit-circle arc, and pad_and_bound
transfers an arc bound on short strings to a full-circle bound on
zero-padded long ones.
"""

import math
from dataclasses import dataclass

import numpy as np

from tracelab import rng
from tracelab.channel import ChannelParams, bits_to_array, check_bits
from tracelab.errors import (
    EmptyFamilyError,
    InvalidAError,
    InvalidKError,
    InvalidLError,
    ShapeMismatchError,
    SizeGuardError,
)
from tracelab.genpoly import (
    SLACK,
    ArcSpec,
    Poly,
    compose_affine,
    default_grid_points,
    monomial_to_chebyshev,
    sup_on_arc,
    sup_on_circle,
)
from tracelab.kernels import pair_sups
from tracelab.kmers import density_map, map_l1_distance

# Arc width used throughout: theta_max = ARC_RATE * L^(-2/3).
ARC_RATE = math.log(2.0) / 150.0

# Exact all-pairs scans refuse families larger than this.
EXACT_SCAN_LIMIT = 1 << 14


def separation_arc(L: int, grid_points: int | None = None) -> ArcSpec:
    """The narrow arc matched to scale L."""
    return ArcSpec(theta_max=ARC_RATE * L ** (-2.0 / 3.0), grid_points=grid_points)


def affine_scale(L: int) -> tuple[float, bool]:
    """Interval half-width parameter a = L^(-2/3), clamped into (0, 1/8].

    Returns (a, clamped); small L (8 in particular) needs the clamp.
    """
    a = L ** (-2.0 / 3.0)
    if a > 0.125:
        return 0.125, True
    return a, False


def unit_window(k: int, j: int) -> str:
    """Width-k window with a single 1 at (1-based) position j."""
    if not 1 <= j <= k:
        raise InvalidKError(f"position {j} outside 1..{k}")
    return "0" * (j - 1) + "1" + "0" * (k - j)


@dataclass(frozen=True)
class SeparatedFamily:
    """The canonical family at a perfect-cube scale L."""

    L: int
    cube_root: int
    separation: int  # zeros guaranteed between any two 1s
    members: tuple[str, ...]


def build_family(L: int) -> SeparatedFamily:
    """All 2^(s^2 - 1) canonical members at scale L = s^3."""
    if L < 8:
        raise InvalidLError(f"L = {L} is not a perfect cube >= 8")
    s = round(L ** (1.0 / 3.0))
    if s < 2 or s**3 != L:
        raise InvalidLError(f"L = {L} is not a perfect cube >= 8")
    run = "0" * (s - 1)
    free = s * s - 1
    members = []
    for m in range(1 << free):
        bits = format(m, f"0{free}b")
        members.append(run + run.join(bits) + run + "0")
    fam = SeparatedFamily(L=L, cube_root=s, separation=s - 1, members=tuple(members))
    assert all(len(x) == L for x in fam.members[:1])
    return fam


def separated_count(n: int, r: int) -> int:
    """Size of the general family by the recurrence f(n) = f(n-1) + f(n-1-r)."""
    f = {m: 1 for m in range(-r - 1, 1)}
    for m in range(1, n + 1):
        f[m] = f[m - 1] + f[m - 1 - r]
    return f[n]


def build_general_family(n: int, r: int) -> list[str]:
    """All length-n strings whose 1s are separated by at least r zeros."""
    if n < 0 or r < 0:
        raise ValueError("need n >= 0 and r >= 0")
    out: list[str] = []

    def extend(prefix: str):
        if len(prefix) == n:
            out.append(prefix)
            return
        extend(prefix + "0")
        # A 1 is legal when the previous r characters are all 0.
        tail = prefix[-r:] if r else ""
        if "1" not in tail:
            extend(prefix + "1")

    extend("")
    assert len(out) == separated_count(n, r)
    return out


# ---------- Occurrence vectors and feature vectors ----------


def occurrence_vector(x: str, k: int) -> np.ndarray:
    """Indicator over window starts of the width-k window 0^(k-1) 1."""
    check_bits(x)
    n = len(x)
    if k < 1 or k > n:
        raise InvalidKError(f"window width {k} invalid for |x| = {n}")
    w = unit_window(k, k)
    return np.array([1.0 if x[j : j + k] == w else 0.0 for j in range(n - k + 1)])


def occurrence_matrix(members, k: int) -> np.ndarray:
    """occurrence_vector stacked over a family, vectorized."""
    mat = np.stack([bits_to_array(x) for x in members])
    M, n = mat.shape
    if k < 1 or k > n:
        raise InvalidKError(f"window width {k} invalid for |x| = {n}")
    ok = mat[:, k - 1 : n].astype(bool)
    for offset in range(k - 1):
        ok &= mat[:, offset : n - k + 1 + offset] == 0
    return ok.astype(np.float64)


@dataclass(frozen=True)
class FeatureVector:
    """Truncated Chebyshev profile of a member's window polynomial."""

    a: float
    values: np.ndarray  # first d coefficients
    tail: np.ndarray  # the rest, kept for tail-decay reports


def feature_vector(x: str, k: int, a: float, d: int) -> FeatureVector:
    """First d Chebyshev coefficients of g_x(1 - 4a + 4a z).

    g_x is the 0/1 occurrence polynomial of the window 0^(k-1) 1; the
    affine map pulls [1 - 8a, 1] back to [-1, 1].
    """
    if not 0.0 < a <= 0.125:
        raise InvalidAError(f"a = {a} outside (0, 1/8]")
    if d < 1:
        raise ValueError("need d >= 1")
    g = occurrence_vector(x, k)
    cheb = monomial_to_chebyshev(compose_affine(g, 1.0 - 4.0 * a, 4.0 * a))
    full = np.zeros(max(d, len(x) - k + 1))
    full[: len(cheb)] = cheb
    return FeatureVector(a=a, values=full[:d], tail=full[d:])


def affine_cheb_matrix(j_max: int, a: float) -> np.ndarray:
    """Row j = Chebyshev coefficients of (1 - 4a + 4a z)^j.

    Lets a whole family's feature vectors be computed as one matrix
    product with its occurrence matrix.
    """
    A = np.zeros((j_max + 1, j_max + 1))
    A[0, 0] = 1.0
    alpha, beta = 1.0 - 4.0 * a, 4.0 * a
    row = A[0]
    for j in range(1, j_max + 1):
        # Multiply by alpha + beta z in the Chebyshev basis:
        # z T_d = (T_(d+1) + T_(d-1)) / 2, with z T_0 = T_1.
        nxt = alpha * row.copy()
        nxt[1 : j + 1] += 0.5 * beta * row[:j]
        nxt[: j - 1] += 0.5 * beta * row[1 : j]
        nxt[1] += 0.5 * beta * row[0]
        A[j] = nxt
        row = nxt
    return A


def family_features(members, k: int, a: float) -> np.ndarray:
    """Feature matrix: one full Chebyshev coefficient row per member."""
    if not 0.0 < a <= 0.125:
        raise InvalidAError(f"a = {a} outside (0, 1/8]")
    occ = occurrence_matrix(members, k)
    return occ @ affine_cheb_matrix(occ.shape[1] - 1, a)


# ---------- Pigeonhole search ----------


@dataclass(frozen=True)
class PigeonholeResult:
    collision: tuple[int, int] | None
    bucket: tuple[int, ...] | None
    intervals_per_axis: int
    total_cubes: int
    occupied_cubes: int
    family_size: int
    collision_guaranteed: bool
    groups: tuple[tuple[int, ...], ...]  # every bucket holding >= 2 members


def pigeonhole_search(
    members, k: int, a: float, d: int, cube_side: float
) -> PigeonholeResult:
    """Bucket members by their first d features on a cube grid.

    Values live in [-2L, 2L]; the grid has ceil(4L / cube_side)
    intervals per axis.  A collision is guaranteed whenever the cube
    count is below the family size; the first collision in enumeration
    order is returned either way.
    """
    if cube_side <= 0.0:
        raise ValueError("cube_side must be positive")
    members = list(members)
    if not members:
        raise EmptyFamilyError("no members to bucket")
    L = len(members[0])
    F = family_features(members, k, a)[:, :d]
    keys = np.floor((F + 2.0 * L) / cube_side).astype(np.int64)
    seen: dict[tuple[int, ...], int] = {}
    groups: dict[tuple[int, ...], list[int]] = {}
    collision = None
    bucket = None
    for idx, key_row in enumerate(keys):
        key = tuple(int(v) for v in key_row)
        if key in seen and collision is None:
            collision = (seen[key], idx)
            bucket = key
        seen.setdefault(key, idx)
        groups.setdefault(key, []).append(idx)
    intervals = math.ceil(4.0 * L / cube_side)
    return PigeonholeResult(
        collision=collision,
        bucket=bucket,
        intervals_per_axis=intervals,
        total_cubes=intervals**d,
        occupied_cubes=len(seen),
        family_size=len(members),
        collision_guaranteed=intervals**d < len(members),
        groups=tuple(
            tuple(g) for g in groups.values() if len(g) >= 2
        ),
    )


# ---------- Pair scans ----------


@dataclass(frozen=True)
class ClosestPairResult:
    x: str
    y: str
    i: int
    j: int
    sup: float
    theta: float
    pairs_scanned: int
    mode: str
    median_sup: float  # median of the coarse-grid suprema over scanned pairs


def _pair_blocks(M: int, block: int = 1 << 20):
    """Yield all i < j index pairs in bounded-size blocks."""
    ia_parts: list[np.ndarray] = []
    ib_parts: list[np.ndarray] = []
    size = 0
    for i in range(M - 1):
        js = np.arange(i + 1, M, dtype=np.int64)
        ia_parts.append(np.full(len(js), i, dtype=np.int64))
        ib_parts.append(js)
        size += len(js)
        if size >= block:
            yield np.concatenate(ia_parts), np.concatenate(ib_parts)
            ia_parts, ib_parts, size = [], [], 0
    if size:
        yield np.concatenate(ia_parts), np.concatenate(ib_parts)


def brute_force_closest_pair(
    members,
    k: int,
    params: ChannelParams,
    arc: ArcSpec,
    max_pairs: int | None = None,
    seed: int | None = None,
    extra_pairs=None,
    scan_grid: int = 129,
    refine_top: int = 32,
) -> ClosestPairResult:
    """Pair minimizing the arc supremum of the window-polynomial gap.

    Exact over all pairs by default (guarded at 2^14 members); pass
    max_pairs and seed to scan a fixed-seed random sample instead, and
    extra_pairs to force specific index pairs into the scan.  The scan
    ranks pairs on a coarse shared grid, then the best refine_top
    candidates are re-measured with the certified arc supremum; ties
    break to the lexicographically first index pair.
    """
    members = list(members)
    M = len(members)
    if M < 2:
        raise EmptyFamilyError("need at least two members")
    mode = "exact"
    if max_pairs is None:
        if M > EXACT_SCAN_LIMIT:
            raise SizeGuardError(
                f"{M} members exceed the exact-scan guard {EXACT_SCAN_LIMIT}; "
                "pass max_pairs and seed to sample"
            )
        blocks = _pair_blocks(M)
    else:
        if seed is None:
            raise ValueError("sampled scan needs a seed")
        mode = "sampled"
        gen = rng.generator(rng.derive_seed(seed, "pair-scan", M))
        ia = gen.integers(0, M, size=max_pairs, dtype=np.int64)
        ib = gen.integers(0, M - 1, size=max_pairs, dtype=np.int64)
        ib = np.where(ib >= ia, ib + 1, ib)
        lo, hi = np.minimum(ia, ib), np.maximum(ia, ib)
        packed = np.unique(lo * np.int64(M) + hi)
        ia, ib = packed // M, packed % M
        blocks = [(ia, ib)]
    if extra_pairs is not None:
        pairs = [(min(i, j), max(i, j)) for i, j in extra_pairs if i != j]
        if pairs:
            extra = np.array(sorted(set(pairs)), dtype=np.int64)
            blocks = list(blocks) + [(extra[:, 0], extra[:, 1])]

    occ = occurrence_matrix(members, k)
    ts = np.linspace(-arc.theta_max, arc.theta_max, scan_grid)
    u = params.p + params.q * np.exp(1j * ts)
    W = u[None, :] ** np.arange(occ.shape[1])[:, None]
    U = np.ascontiguousarray(occ.astype(np.complex128) @ W)

    candidates: list[tuple[float, int, int]] = []
    scanned = 0
    sup_blocks: list[np.ndarray] = []
    for ia, ib in blocks:
        sups = pair_sups(U, np.ascontiguousarray(ia), np.ascontiguousarray(ib))
        scanned += len(ia)
        sup_blocks.append(sups)
        top = np.argsort(sups, kind="stable")[:refine_top]
        candidates.extend((float(sups[t]), int(ia[t]), int(ib[t])) for t in top)
        candidates.sort()
        del candidates[refine_top:]
    median_sup = float(np.median(np.concatenate(sup_blocks)))

    best = None
    for _, i, j in candidates:
        diff = Poly(compose_affine(occ[i] - occ[j], params.p, params.q))
        sup, theta = sup_on_arc(diff, arc)
        key = (sup, i, j, theta)
        if best is None or key[:3] < best[:3]:
            best = key
    sup, i, j, theta = best
    return ClosestPairResult(
        x=members[i],
        y=members[j],
        i=i,
        j=j,
        sup=sup,
        theta=theta,
        pairs_scanned=scanned,
        mode=mode,
        median_sup=median_sup,
    )


# ---------- Structural checks ----------


def family_properties_check(members, k: int, params: ChannelParams, seed: int = 0,
                            pair_sample: int = 256, z_points: int = 64) -> dict:
    """Window-polynomial structure shared by every separated family.

    1. No width-k window contains two 1s, so only 0^k and the single-1
       windows can occur.
    2. Shifting the 1 left multiplies the polynomial by p + q z:
       exact coefficient identity, tolerance 1e-12.
    3. For |z| <= 1 the all-zeros gap is controlled by k times the
       last-position gap (checked on sampled pairs at random z).
    Additionally the class polynomials sum to the member-independent
    geometric series sum_i (p + q z)^i.
    """
    members = list(members)
    if not members:
        raise EmptyFamilyError("no members")
    n = len(members[0])
    if any(len(x) != n for x in members):
        raise ShapeMismatchError("members must share a length")
    mat = np.stack([bits_to_array(m) for m in members])
    window_sums = np.lib.stride_tricks.sliding_window_view(mat, k, axis=1).sum(axis=2)
    item1_ok = bool(window_sums.max() <= 1)
    if not item1_ok:
        raise InvalidKError(
            f"width {k} windows catch two 1s; family separation is too small"
        )

    # Occurrence matrices per single-1 window class, plus all-zeros.
    J = n - k + 1
    occ = {}
    for j in range(1, k + 1):
        w = unit_window(k, j)
        cols = [
            (mat[:, t : t + k] == bits_to_array(w)).all(axis=1) for t in range(J)
        ]
        occ[w] = np.stack(cols, axis=1).astype(np.float64)
    zero_w = "0" * k
    occ[zero_w] = np.stack(
        [(mat[:, t : t + k] == 0).all(axis=1) for t in range(J)], axis=1
    ).astype(np.float64)

    # Item 2: shifting the 1 multiplies the polynomial by p + q z,
    # i.e. convolves the z-coefficient vector with (p, q).
    from tracelab.kmers import survival_weight_matrix

    p, q = params.p, params.q
    Bw = survival_weight_matrix(J - 1, params)
    rows = {w: occ[w] @ Bw for w in occ}
    item2_dev = 0.0
    for j in range(1, k):
        lhs = rows[unit_window(k, j)]
        rhs = rows[unit_window(k, j + 1)]
        conv = np.zeros((len(members), J + 1))
        conv[:, :J] += p * rhs
        conv[:, 1:] += q * rhs
        padded_lhs = np.zeros_like(conv)
        padded_lhs[:, :J] = lhs
        item2_dev = max(item2_dev, float(np.abs(padded_lhs - conv).max()))
    item2_ok = item2_dev <= 1e-12

    # Item 3 and the sum identity, at random z in the closed unit disk.
    gen = rng.generator(rng.derive_seed(seed, "family-z"))
    radii = np.sqrt(gen.random(z_points))
    angles = gen.random(z_points) * 2.0 * math.pi
    zs = radii * np.exp(1j * angles)
    u_pow = (p + q * zs)[None, :] ** np.arange(J)[:, None]  # (J, z)
    vals = {w: occ[w] @ u_pow for w in occ}

    M = len(members)
    if M * (M - 1) // 2 <= pair_sample:
        pairs = [(i, j) for i in range(M) for j in range(i + 1, M)]
    else:
        pick = rng.generator(rng.derive_seed(seed, "family-pairs"))
        pairs = set()
        while len(pairs) < pair_sample:
            i, j = sorted(pick.integers(0, M, size=2).tolist())
            if i != j:
                pairs.add((i, j))
        pairs = sorted(pairs)
    last = unit_window(k, k)
    item3_margin = 0.0
    for i, j in pairs:
        zero_gap = np.abs(vals[zero_w][i] - vals[zero_w][j])
        last_gap = np.abs(vals[last][i] - vals[last][j])
        item3_margin = max(
            item3_margin, float((zero_gap - k * last_gap).max())
        )
    item3_ok = item3_margin <= 1e-9 * max(1.0, n)

    total = sum(vals[w] for w in vals)
    geom = u_pow.sum(axis=0)[None, :]
    sum_dev = float(np.abs(total - geom).max())
    sum_ok = sum_dev <= 1e-9 * max(1.0, n)

    return {
        "item1_single_one_windows": item1_ok,
        "item2_shift_identity": item2_ok,
        "item2_max_deviation": item2_dev,
        "item3_zero_window_controlled": item3_ok,
        "item3_worst_margin": item3_margin,
        "sum_identity": sum_ok,
        "sum_identity_max_deviation": sum_dev,
        "pairs_checked": len(pairs),
        "pass": item1_ok and item2_ok and item3_ok and sum_ok,
    }


# ---------- Padding ----------


@dataclass(frozen=True)
class PadBoundReport:
    x_padded: str
    y_padded: str
    identity_max_deviation: float
    identity_ok: bool
    circle_sup_padded: float
    circle_sup_unpadded: float
    damping_ok: bool
    arc_sup_padded: float


def pad_and_bound(
    x: str, y: str, n: int, params: ChannelParams, k: int
) -> PadBoundReport:
    """Zero-pad a pair to length n and control the padded polynomial gap.

    Padding multiplies the window-polynomial difference by
    (p + q z)^(n - L) as long as neither string has a 1 among its first
    k - 1 bits (true for every canonical family member); the report
    carries the measured identity deviation and full-circle suprema of
    both gaps evaluated on a shared grid, where the padded one can never
    exceed the unpadded one.
    """
    check_bits(x)
    check_bits(y)
    if len(x) != len(y):
        raise ShapeMismatchError("pair members differ in length")
    L = len(x)
    if n < L:
        raise ShapeMismatchError(f"target length {n} below |x| = {L}")
    xp = "0" * (n - L) + x
    yp = "0" * (n - L) + y
    p, q = params.p, params.q

    diff_short = occurrence_vector(x, k) - occurrence_vector(y, k)
    diff_long = occurrence_vector(xp, k) - occurrence_vector(yp, k)

    ts = np.linspace(-math.pi, math.pi, 64, endpoint=False)
    u = p + q * np.exp(1j * ts)
    lhs = np.polynomial.polynomial.polyval(u, diff_long)
    rhs = u ** (n - L) * np.polynomial.polynomial.polyval(u, diff_short)
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-200)
    identity_dev = float((np.abs(lhs - rhs) / scale).max())
    identity_ok = identity_dev <= 1e-8

    # Shared dense grid: padded gap <= unpadded gap holds pointwise.
    grid = default_grid_points(n - k)
    tg = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    ug = p + q * np.exp(1j * tg)
    short_vals = np.abs(np.polynomial.polynomial.polyval(ug, diff_short))
    long_vals = np.abs(ug) ** (n - L) * short_vals
    if not identity_ok:
        long_vals = np.abs(np.polynomial.polynomial.polyval(ug, diff_long))
    sup_long = float(long_vals.max())
    sup_short = float(short_vals.max())

    poly_long = Poly(compose_affine(diff_long, p, q))
    arc_sup, _ = sup_on_arc(poly_long, separation_arc(L))
    return PadBoundReport(
        x_padded=xp,
        y_padded=yp,
        identity_max_deviation=identity_dev,
        identity_ok=identity_ok,
        circle_sup_padded=sup_long,
        circle_sup_unpadded=sup_short,
        damping_ok=sup_long <= sup_short * (1.0 + 1e-12),
        arc_sup_padded=arc_sup,
    )


# Cube sides used to enrich sampled scans with same-bucket pairs.
ENRICHMENT_SIDES = (1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128)
SAMPLED_SCAN_PAIRS = 10**6


def enrichment_pairs(members, k: int, a: float, d: int = 8) -> list:
    """Same-bucket index pairs across a ladder of fine cube sides.

    Random pair sampling alone almost never lands on the deepest
    near-collisions in a large family; members sharing a fine
    pigeonhole bucket are exactly the candidates worth scanning.
    """
    pairs = set()
    for side in ENRICHMENT_SIDES:
        res = pigeonhole_search(members, k, a, d, side)
        for g in res.groups:
            for ii in range(len(g) - 1):
                for jj in range(ii + 1, len(g)):
                    pairs.add((g[ii], g[jj]))
    return sorted(pairs)


def decay_point(L: int, params: ChannelParams, seed: int, k: int | None = None) -> dict:
    """One row of the decay sweep: closest pair at scale L.

    Exact scan when the family fits the guard, otherwise a fixed-seed
    random sample enriched with pigeonhole same-bucket pairs; the row
    records which mode ran.
    """
    fam = build_family(L)
    if k is None:
        k = fam.cube_root
    arc = separation_arc(L)
    if len(fam.members) <= EXACT_SCAN_LIMIT:
        res = brute_force_closest_pair(fam.members, k, params, arc)
    else:
        a, _ = affine_scale(L)
        res = brute_force_closest_pair(
            fam.members,
            k,
            params,
            arc,
            max_pairs=SAMPLED_SCAN_PAIRS,
            seed=seed,
            extra_pairs=enrichment_pairs(fam.members, k, a),
        )
    hole = pigeonhole_search(
        fam.members, k, affine_scale(L)[0], d=8,
        cube_side=2.0 ** (-round(L ** (1.0 / 3.0)) / 4.0),
    )
    return {
        "L": L,
        "k": k,
        "p": params.p,
        "min_sup": res.sup,
        "median_sup": res.median_sup,
        "theta": res.theta,
        "x": res.x,
        "y": res.y,
        "mode": res.mode,
        "pairs_scanned": res.pairs_scanned,
        "pigeonhole_buckets": hole.occupied_cubes,
        "family_size": len(fam.members),
    }


def l1_counting_check(x: str, y: str, k: int, params: ChannelParams):
    """Density-map l1 distance against the circle-supremum budget.

    Each density row is a coefficient vector, each coefficient is
    bounded by the unit-circle supremum of the corresponding polynomial
    gap, and at most 2(n - k + 1) window classes occur across the two
    strings with n coefficients each.
    """
    from tracelab.genpoly import CheckReport

    check_bits(x)
    check_bits(y)
    if len(x) != len(y):
        raise ShapeMismatchError("pair members differ in length")
    n = len(x)
    A = density_map(x, k, params)
    B = density_map(y, k, params)
    l1 = map_l1_distance(A, B)
    worst = 0.0
    for w in set(A.rows) | set(B.rows):
        gap = Poly(A.row(w) - B.row(w))
        worst = max(worst, sup_on_circle(gap, 1.0)[0])
    budget = 2.0 * n * (n - k + 1) * worst
    return CheckReport(
        check="l1_counting",
        inputs={"n": n, "k": k, "p": params.p, "circle_sup": worst},
        lhs=l1,
        rhs=budget,
        slack=SLACK,
    )
