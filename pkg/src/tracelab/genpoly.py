"""Window generating polynomials and the analytic toolkit around them.

The generating polynomial of a window w in x collects the density row
as coefficients:

    P[w, x](z) = sum_i D[w][i] z^i = sum_j [x[j:j+k] == w] (p + q z)^j.

The second form makes |P| easy to control on small arcs of the unit
circle.  The rest of this module is the supporting analysis: certified
grid suprema, exact monomial-to-Chebyshev conversion, Bernstein-type
ellipses and the coefficient bounds they give, Hadamard's three-circles
inequality, and the elementary circle-arc estimates used to damp padded
strings.

All inequality checks place the numerically computed supremum on the
large side where possible and carry a 1e-6 multiplicative slack, so
grid under-estimation only ever makes a check stricter.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from tracelab.channel import ChannelParams, check_bits
from tracelab.errors import (
    BoundViolationError,
    CoefficientBoundError,
    InvalidAError,
    InvalidKError,
)
from tracelab.kmers import density_map

SLACK = 1e-6

# ---------- Polynomial values ----------


class Poly:
    """Polynomial in one complex variable, coefficients low to high.

    Trailing zeros are trimmed on construction; the zero polynomial is
    kept as the single coefficient 0.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs))
        if len(c) == 0:
            c = np.zeros(1)
        if not np.iscomplexobj(c):
            c = c.astype(np.float64)
        nz = np.nonzero(c)[0]
        self.c = c[: nz[-1] + 1].copy() if len(nz) else c[:1] * 0

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def __call__(self, z):
        return npoly.polyval(z, self.c)

    def is_zero(self) -> bool:
        return self.degree == 0 and self.c[0] == 0

    def to_json(self) -> str:
        cc = self.c.astype(np.complex128)
        return json.dumps([[v.real, v.imag] for v in cc])

    @classmethod
    def from_json(cls, text: str) -> "Poly":
        pairs = json.loads(text)
        return cls(np.array([complex(re, im) for re, im in pairs]))


def generating_polynomial(x: str, w: str, params: ChannelParams) -> Poly:
    """P[w, x] with the density row as its coefficient vector."""
    dm = density_map(x, len(w), params)
    return Poly(dm.row(check_bits(w)))


def eval_subword_form(x: str, w: str, params: ChannelParams, z: complex) -> complex:
    """P[w, x](z) evaluated as sum_j [window j = w] (p + q z)^j."""
    check_bits(x)
    check_bits(w)
    n, k = len(x), len(w)
    if k < 1 or k > n:
        raise InvalidKError(f"window width {k} invalid for |x| = {n}")
    u = params.p + params.q * z
    acc = 0.0 + 0.0j
    for j in range(n - k, -1, -1):
        acc = acc * u + (1.0 if x[j : j + k] == w else 0.0)
    return complex(acc)


# ---------- Certified suprema ----------


def default_grid_points(degree: int) -> int:
    """Grid density keeping relative sup error around 1e-6 by Bernstein."""
    return 4096 * (max(degree, 0) // 64 + 1)


@dataclass(frozen=True)
class ArcSpec:
    """Symmetric unit-circle arc |theta| <= theta_max.

    grid_points = None lets evaluators pick a density from the degree.
    """

    theta_max: float
    grid_points: int | None = None

    def __post_init__(self):
        if not 0.0 < self.theta_max <= math.pi:
            raise ValueError(f"theta_max outside (0, pi]: {self.theta_max}")
        if self.grid_points is not None and self.grid_points < 64:
            raise ValueError("grid_points must be at least 64")


def _golden_max(fn, lo: float, hi: float, iterations: int = 80):
    """Golden-section maximum of a unimodal-near-peak scalar function."""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - inv * (b - a)
    x2 = a + inv * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iterations):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv * (b - a)
            f1 = fn(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _grid_refine_max(fn, ts: np.ndarray, values: np.ndarray, wrap: bool):
    """Best grid value improved by golden refinement around the argmax."""
    i = int(values.argmax())
    t_best, v_best = float(ts[i]), float(values[i])
    n = len(ts)
    if n >= 2:
        if wrap:
            step = ts[1] - ts[0]
            lo, hi = ts[i] - step, ts[i] + step
        else:
            lo = ts[i - 1] if i > 0 else ts[0]
            hi = ts[i + 1] if i < n - 1 else ts[-1]
        t_ref, v_ref = _golden_max(fn, float(lo), float(hi))
        if v_ref > v_best:
            t_best, v_best = t_ref, v_ref
    return v_best, t_best


def sup_on_arc(f: Poly, arc: ArcSpec):
    """Certified lower bound for sup |f| on the arc; returns (value, theta).

    Dense grid plus golden-section refinement around the grid maximum;
    the result never exceeds the true supremum.
    """
    g = arc.grid_points or default_grid_points(f.degree)
    ts = np.linspace(-arc.theta_max, arc.theta_max, g)
    vals = np.abs(f(np.exp(1j * ts)))
    return _grid_refine_max(lambda t: abs(f(complex(np.exp(1j * t)))), ts, vals, wrap=False)


def sup_on_circle(f: Poly, radius: float, grid_points: int | None = None):
    """Certified lower bound for sup |f| on |z| = radius; (value, theta)."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    g = grid_points or default_grid_points(f.degree)
    ts = np.linspace(0.0, 2.0 * math.pi, g, endpoint=False)
    vals = np.abs(f(radius * np.exp(1j * ts)))
    return _grid_refine_max(
        lambda t: abs(f(radius * complex(np.exp(1j * t)))), ts, vals, wrap=True
    )


def sup_on_interval(f: Poly, lo: float, hi: float, grid_points: int | None = None):
    """Certified lower bound for sup |f| on the real segment [lo, hi]."""
    if hi < lo:
        raise ValueError("empty interval")
    g = grid_points or default_grid_points(f.degree)
    ts = np.linspace(lo, hi, g)
    vals = np.abs(f(ts))
    return _grid_refine_max(lambda t: abs(f(t)), ts, vals, wrap=False)


# ---------- Chebyshev coefficients ----------


def compose_affine(coeffs, alpha: float, beta: float) -> np.ndarray:
    """Coefficients of f(alpha + beta z) from those of f, by Horner."""
    c = np.atleast_1d(np.asarray(coeffs))
    out = np.zeros(1, dtype=c.dtype if np.iscomplexobj(c) else np.float64)
    for v in c[::-1]:
        shifted = np.zeros(len(out) + 1, dtype=out.dtype)
        shifted[: len(out)] = alpha * out
        shifted[1:] += beta * out
        shifted[0] += v
        out = shifted
    nz = np.nonzero(out)[0]
    return out[: nz[-1] + 1] if len(nz) else out[:1]


def monomial_to_chebyshev(coeffs) -> np.ndarray:
    """Exact basis change from monomial to Chebyshev coefficients.

    Carries the Chebyshev representation of z^m upward using
    z T_d = (T_(d+1) + T_(d-1)) / 2, accumulating coefficient by
    coefficient; only rounding error enters.
    """
    c = np.atleast_1d(np.asarray(coeffs))
    dtype = np.complex128 if np.iscomplexobj(c) else np.float64
    out = np.zeros(len(c), dtype=dtype)
    power = np.zeros(len(c), dtype=dtype)  # z^m in the T basis
    power[0] = 1.0
    for m, v in enumerate(c):
        out[: m + 1] += v * power[: m + 1]
        if m + 1 < len(c):
            nxt = np.zeros_like(power)
            nxt[1 : m + 2] += 0.5 * power[: m + 1]
            nxt[: m] += 0.5 * power[1 : m + 1]
            nxt[1] += 0.5 * power[0]
            power = nxt
    return out


def chebyshev_eval(cheb, x):
    """Clenshaw evaluation of sum_d cheb[d] T_d(x)."""
    c = np.atleast_1d(np.asarray(cheb))
    if len(c) == 1:
        return c[0] * np.ones_like(np.asarray(x))
    b1 = np.zeros_like(np.asarray(x, dtype=np.result_type(c.dtype, np.asarray(x).dtype)))
    b2 = b1.copy()
    for d in range(len(c) - 1, 0, -1):
        b1, b2 = c[d] + 2 * np.asarray(x) * b1 - b2, b1
    return c[0] + np.asarray(x) * b1 - b2


def chebyshev_coeffs(g: Poly, a: float, max_degree: int) -> np.ndarray:
    """Chebyshev coefficients of f(z) = g(1 - 4a + 4a z).

    The affine map sends [-1, 1] onto [1 - 8a, 1]; a must lie in
    (0, 1/8].  Result has length max_degree + 1 (zero padded), and
    max_degree must cover deg(g) so the conversion is exact.
    """
    if not 0.0 < a <= 0.125:
        raise InvalidAError(f"a = {a} outside (0, 1/8]")
    if max_degree < g.degree:
        raise ValueError(f"max_degree {max_degree} below degree {g.degree}")
    f_mono = compose_affine(g.c, 1.0 - 4.0 * a, 4.0 * a)
    cheb = monomial_to_chebyshev(f_mono)
    out = np.zeros(max_degree + 1, dtype=cheb.dtype)
    out[: len(cheb)] = cheb
    return out


# ---------- Ellipses ----------


@dataclass(frozen=True)
class EllipseParams:
    """Affine Bernstein ellipse: (1 - 4a) + 4a * (u + 1/u)/2, |u| = rho.

    Foci 1 - 8a and 1; rho = 1 degenerates to the segment [1 - 8a, 1].
    """

    a: float
    rho: float

    def __post_init__(self):
        if not 0.0 < self.a <= 0.125:
            raise InvalidAError(f"a = {self.a} outside (0, 1/8]")
        if self.rho < 1.0:
            raise ValueError(f"rho must be >= 1, got {self.rho}")

    @property
    def bulge(self) -> float:
        """Radius 2a(rho-1)^2/rho of the disk at 1 inside the ellipse."""
        return 2.0 * self.a * (self.rho - 1.0) ** 2 / self.rho


def std_ellipse_boundary(rho: float, count: int = 4096) -> np.ndarray:
    """Boundary of the standard Bernstein ellipse with foci +-1."""
    u = rho * np.exp(1j * np.linspace(0.0, 2.0 * math.pi, count, endpoint=False))
    return (u + 1.0 / u) / 2.0


def ellipse_boundary(params: EllipseParams, count: int = 4096) -> np.ndarray:
    return (1.0 - 4.0 * params.a) + 4.0 * params.a * std_ellipse_boundary(
        params.rho, count
    )


# ---------- Check reports ----------


@dataclass
class CheckReport:
    """One verified inequality: lhs <= rhs * (1 + slack)."""

    check: str
    inputs: dict
    lhs: float
    rhs: float
    slack: float = SLACK
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.lhs <= self.rhs * (1.0 + self.slack) + 1e-300

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "inputs": self.inputs,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def _worst_part(parts):
    """Pick the (name, lhs, rhs) triple closest to violation."""
    def ratio(part):
        _, lhs, rhs = part
        return lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)

    return max(parts, key=ratio)


def ellipse_geometry_check(params: EllipseParams, count: int = 4096) -> CheckReport:
    """Boundary modulus bound and disk containment for the affine ellipse."""
    z = ellipse_boundary(params, count)
    parts = [("boundary_modulus", float(np.abs(z).max()), 1.0 + params.bulge)]
    if params.bulge > 0.0:
        w = 1.0 + params.bulge * np.exp(
            1j * np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
        )
        focal = np.abs(w - (1.0 - 8.0 * params.a)) + np.abs(w - 1.0)
        parts.append(
            (
                "disk_inside",
                float(focal.max()),
                8.0 * params.a + 2.0 * params.bulge,
            )
        )
    name, lhs, rhs = _worst_part(parts)
    return CheckReport(
        check="ellipse_geometry",
        inputs={"a": params.a, "rho": params.rho, "count": count, "worst": name},
        lhs=lhs,
        rhs=rhs,
    )


def cheb_coeff_bounds_check(cheb, f: Poly, rho: float) -> CheckReport:
    """Chebyshev decay bounds from boundedness on the standard ellipse.

    With M = sup |f| on the rho-ellipse: |a_0| <= M and |a_d| <= 2 M
    rho^-d; independently |a_d| <= 2 sup_[-1,1] |f|.  Raises
    BoundViolationError on failure since these hold for every f.
    """
    if rho <= 1.0:
        raise ValueError(f"rho must exceed 1, got {rho}")
    c = np.abs(np.atleast_1d(np.asarray(cheb)))
    M = float(np.abs(f(std_ellipse_boundary(rho, 4096))).max())
    interval_sup, _ = sup_on_interval(f, -1.0, 1.0)
    parts = [("order_zero", float(c[0]), M)]
    for d in range(1, len(c)):
        parts.append((f"decay_d{d}", float(c[d]), 2.0 * M * rho ** (-d)))
    parts.append(("trivial", float(c.max()), 2.0 * interval_sup))
    name, lhs, rhs = _worst_part(parts)
    report = CheckReport(
        check="cheb_coeff_bounds",
        inputs={"rho": rho, "degree": f.degree, "worst": name},
        lhs=lhs,
        rhs=rhs,
    )
    if not report.passed:
        raise BoundViolationError(report.to_json())
    return report


def hadamard_three_circles_check(
    f: Poly, r1: float, r: float, r2: float
) -> CheckReport:
    """log-convexity of the circle maxima M(r) of |f|."""
    if not 0.0 < r1 <= r <= r2:
        raise ValueError("need 0 < r1 <= r <= r2")
    m1, _ = sup_on_circle(f, r1)
    mr, _ = sup_on_circle(f, r)
    m2, _ = sup_on_circle(f, r2)
    inputs = {"r1": r1, "r": r, "r2": r2, "M": [m1, mr, m2]}
    if min(m1, mr, m2) == 0.0:
        # Zero polynomial: inequality holds vacuously.
        return CheckReport("hadamard_three_circles", inputs, lhs=0.0, rhs=1.0)
    lhs = math.log(r2 / r1) * math.log(mr)
    rhs = math.log(r2 / r) * math.log(m1) + math.log(r / r1) * math.log(m2)
    # Additive form of the multiplicative slack on M(r).
    report = CheckReport("hadamard_three_circles", inputs, lhs=lhs, rhs=rhs)
    report.passed = lhs <= rhs + math.log(r2 / r1) * math.log1p(SLACK) + 1e-12
    return report


def ellipse_to_interval_check(f: Poly, a: float) -> CheckReport:
    """Ellipse supremum controlled by the interval supremum.

    For f with coefficients bounded by 1 in modulus (degree n - 1):
    sup over the affine rho=2 ellipse boundary is at most
    exp(5 a n / 2) * sqrt(sup over [1 - 8a, 1]).
    """
    params = EllipseParams(a=a, rho=2.0)
    if np.abs(f.c).max() > 1.0 + 1e-12:
        raise CoefficientBoundError("coefficients must satisfy |c_j| <= 1")
    n_terms = f.degree + 1
    grid = default_grid_points(f.degree)
    ts = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    boundary = (1.0 - 4.0 * a) + 4.0 * a * (
        2.0 * np.exp(1j * ts) + np.exp(-1j * ts) / 2.0
    ) / 2.0

    def at(t: float) -> float:
        u = 2.0 * complex(np.exp(1j * t))
        return abs(f((1.0 - 4.0 * a) + 4.0 * a * (u + 1.0 / u) / 2.0))

    lhs, _ = _grid_refine_max(at, ts, np.abs(f(boundary)), wrap=True)
    interval_sup, _ = sup_on_interval(f, 1.0 - 8.0 * a, 1.0)
    rhs = math.exp(2.5 * a * n_terms) * math.sqrt(interval_sup)
    return CheckReport(
        check="ellipse_to_interval",
        inputs={"a": a, "n_terms": n_terms, "rho": params.rho},
        lhs=lhs,
        rhs=rhs,
    )


def contour_coefficient_bound_check(f: Poly) -> CheckReport:
    """Every coefficient is at most the unit-circle supremum."""
    sup, _ = sup_on_circle(f, 1.0)
    return CheckReport(
        check="contour_coefficient_bound",
        inputs={"degree": f.degree},
        lhs=float(np.abs(f.c).max()),
        rhs=sup,
    )


def circle_arc_arithmetic_checks(
    params: ChannelParams, theta: float, n: int
) -> CheckReport:
    """Elementary estimates for z0 = e^(i theta) near 1.

    Checks the sandwich 1 <= |(z0 - p)/q| <= sqrt(1 + p theta^2 / q^2),
    the exact identity |p + q z0|^2 = 1 - 2 p q (1 - cos theta), and,
    when |theta| <= n^(-2/5), the growth cap
    |(z0 - p)/q|^n <= exp(p n^(1/5) / (2 q^2)).
    """
    if params.q == 0.0:
        raise ValueError("needs p < 1")
    p, q = params.p, params.q
    z0 = complex(math.cos(theta), math.sin(theta))
    ratio = abs(z0 - p) / q
    identity_lhs = abs(p + q * z0) ** 2
    identity_rhs = 1.0 - 2.0 * p * q * (1.0 - math.cos(theta))
    parts = [
        ("ratio_lower", 1.0, ratio * (1.0 + 1e-12)),
        ("ratio_upper", ratio, math.sqrt(1.0 + p * theta**2 / q**2)),
        ("identity", abs(identity_lhs - identity_rhs), 1e-12),
    ]
    applicable = abs(theta) <= n ** (-0.4)
    if applicable:
        log_power = n * math.log(ratio) if ratio > 0 else -math.inf
        parts.append(
            ("power_growth", math.exp(min(log_power, 700.0)),
             math.exp(min(p * n**0.2 / (2.0 * q * q), 700.0)))
        )
    name, lhs, rhs = _worst_part(parts)
    report = CheckReport(
        check="circle_arc_arithmetic",
        inputs={"p": p, "theta": theta, "n": n, "power_bound_applicable": applicable,
                "worst": name},
        lhs=lhs,
        rhs=rhs,
    )
    report.passed = all(l <= r * (1.0 + SLACK) + 1e-300 for _, l, r in parts)
    return report
