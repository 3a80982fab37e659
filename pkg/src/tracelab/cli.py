"""Command-line driver: runs experiments, writes JSON-lines records.

Every subcommand wraps one module, prints a short human-readable
summary, and (with --out) appends one self-describing record per
experiment cell.  Replaying a record's (command, params, seed) must
reproduce its outputs byte for byte; the timestamp is the one field
allowed to differ.
"""

import argparse
import csv
import dataclasses
import datetime
import json
import math
import sys

import numpy as np

from tracelab import __version__, rng
from tracelab import distinguish as dst
from tracelab import genpoly as gp
from tracelab import hardpairs as hp
from tracelab import kmers
from tracelab import mle as ml
from tracelab import verify as vf
from tracelab.channel import ChannelParams, sample_trace_batch, trace_distribution
from tracelab.errors import ConfigParseError, TraceLabError


# ---------- Records ----------


@dataclasses.dataclass(frozen=True)
class ExperimentRecord:
    command: str
    params: dict
    outputs: dict
    seed: int | None
    timestamp: str
    version: str

    def to_json(self) -> str:
        return json.dumps(
            dataclasses.asdict(self), sort_keys=True, separators=(",", ":")
        )

    @classmethod
    def from_json(cls, text: str) -> "ExperimentRecord":
        return cls(**json.loads(text))


def _plain(obj):
    """Recursively convert numpy scalars/arrays so records serialize stably."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


# ---------- Configuration ----------

CONFIG_KEYS = {
    "n": int,
    "k": int,
    "T": int,
    "L": int,
    "seed": int,
    "trials": int,
    "p": float,
    "mode": str,
    "suite": str,
    "x": str,
    "y": str,
    "w": str,
    "out": str,
    "csv": str,
}


def load_config(path: str) -> dict:
    """Parse a flat key=value file; '#' starts a comment.

    Unknown keys and malformed lines are rejected with the line number.
    Values are converted to the type the matching flag would produce, so
    the merge with the command line is type-uniform.
    """
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("=")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ConfigParseError(f"expected key=value, got {line!r}", lineno)
            key, value = parts[0].strip(), parts[1].strip()
            if key not in CONFIG_KEYS:
                raise ConfigParseError(f"unknown key {key!r}", lineno)
            try:
                values[key] = CONFIG_KEYS[key](value)
            except ValueError:
                raise ConfigParseError(f"bad value for {key!r}: {value!r}", lineno)
    return values


class UsageError(Exception):
    """Invocation problem: missing or inconsistent flags."""


def _effective(args, cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is None:
        value = cfg.get(key, default)
    return value


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"missing required flag {flag}")
    return value


# ---------- Subcommand handlers ----------
# Each returns (exit_code, cells, seed) where cells is a list of
# (params, outputs) pairs, one record each.


def _cmd_simulate(args, cfg):
    x = _require(_effective(args, cfg, "x"), "--x")
    p = _require(_effective(args, cfg, "p"), "--p")
    T = _effective(args, cfg, "T", 1)
    seed = _require(_effective(args, cfg, "seed"), "--seed")
    mat, lengths = sample_trace_batch(x, ChannelParams(p), seed, T)
    traces = [
        "".join("01"[b] for b in mat[t, : lengths[t]]) for t in range(T)
    ]
    outputs = {
        "traces": traces,
        "lengths": [int(v) for v in lengths],
        "mean_length": float(np.mean(lengths)),
    }
    print(
        f"simulate: {T} trace(s) of n={len(x)} source at p={p}, "
        f"mean surviving length {outputs['mean_length']:.3f}"
    )
    return 0, [({"x": x, "p": p, "T": T}, outputs)], seed


def _cmd_density_map(args, cfg):
    x = _require(_effective(args, cfg, "x"), "--x")
    k = _require(_effective(args, cfg, "k"), "--k")
    p = _require(_effective(args, cfg, "p"), "--p")
    K = kmers.density_map(x, k, ChannelParams(p))
    worst = 0.0
    for w in K.rows:
        count = sum(x[j : j + k] == w for j in range(len(x) - k + 1))
        worst = max(worst, abs(float(K.row(w).sum()) - count))
    outputs = {
        "windows": sorted(K.rows),
        "rows": {w: [float(v) for v in K.row(w)] for w in sorted(K.rows)},
        "row_sum_max_error": worst,
    }
    print(
        f"density-map: {len(K.rows)} window rows of length {len(x) - k + 1}, "
        f"row-sum error {worst:.2e}"
    )
    return 0, [({"x": x, "k": k, "p": p}, outputs)], None


def _cmd_genpoly(args, cfg):
    x = _require(_effective(args, cfg, "x"), "--x")
    w = _require(_effective(args, cfg, "w"), "--w")
    p = _require(_effective(args, cfg, "p"), "--p")
    params = ChannelParams(p)
    n = len(x)
    f = gp.generating_polynomial(x, w, params)

    zs = [0.0, 1.0, -1.0, 0.5 + 0.5j, -0.25 + 0.75j]
    zs += [complex(np.exp(1j * 2 * math.pi * t / 8)) for t in range(8)]
    identity_dev = max(
        abs(f(z) - gp.eval_subword_form(x, w, params, z))
        / max(1.0, abs(gp.eval_subword_form(x, w, params, z)))
        for z in zs
    )

    arc = hp.separation_arc(n)
    arc_sup, arc_theta = gp.sup_on_arc(f, arc)
    circle_sup, _ = gp.sup_on_circle(f, 1.0)

    occ = [1.0 if x[j : j + len(w)] == w else 0.0 for j in range(n - len(w) + 1)]
    h = gp.Poly(occ)
    a, _clamped = hp.affine_scale(n)
    reports = [
        gp.cheb_coeff_bounds_check(gp.monomial_to_chebyshev(h.c), h, 2.0),
        gp.hadamard_three_circles_check(h, 1.0, 2.0, 4.0),
        gp.contour_coefficient_bound_check(h),
        gp.ellipse_geometry_check(gp.EllipseParams(a=a, rho=2.0)),
    ]
    terms = h.degree + 1
    in_regime = math.log(terms) <= a * terms / 2.0
    if in_regime:
        reports.append(gp.ellipse_to_interval_check(h, a))
    all_pass = identity_dev <= 1e-9 and all(r.passed for r in reports)
    outputs = {
        "coeffs": [float(c) for c in f.c],
        "identity_max_rel_dev": identity_dev,
        "arc_sup": arc_sup,
        "arc_theta": arc_theta,
        "circle_sup": circle_sup,
        "checks": [r.as_dict() for r in reports],
        "ellipse_to_interval_in_regime": in_regime,
        "all_pass": all_pass,
    }
    print(
        f"genpoly: deg {f.degree}, arc sup {arc_sup:.6e}, "
        f"circle sup {circle_sup:.6e}, checks "
        + ("all pass" if all_pass else "FAILED")
    )
    return (0 if all_pass else 1), [({"x": x, "w": w, "p": p}, outputs)], None


def _cmd_hardpair(args, cfg):
    mode = _effective(args, cfg, "mode", "brute")
    p = _require(_effective(args, cfg, "p"), "--p")
    seed = _require(_effective(args, cfg, "seed"), "--seed")
    k = _effective(args, cfg, "k")
    params = ChannelParams(p)
    L = _effective(args, cfg, "L")
    if mode != "sweep":
        L = _require(L, "--L")

    if mode == "brute":
        row = hp.decay_point(L, params, seed, k=k)
        print(
            f"hardpair brute: L={L} min arc sup {row['min_sup']:.6e} "
            f"({row['mode']} scan, {row['pairs_scanned']} pairs)"
        )
        return 0, [({"L": L, "p": p, "mode": mode, "k": row["k"]}, row)], seed

    if mode == "pigeonhole":
        fam = hp.build_family(L)
        kk = k if k is not None else fam.cube_root
        a, _ = hp.affine_scale(L)
        side = 2.0 ** (-fam.cube_root / 4.0)
        res = hp.pigeonhole_search(fam.members, kk, a, 8, side)
        outputs = {
            "family_size": res.family_size,
            "intervals_per_axis": res.intervals_per_axis,
            "total_cubes": res.total_cubes,
            "occupied_cubes": res.occupied_cubes,
            "collision_guaranteed": res.collision_guaranteed,
            "collision": list(res.collision) if res.collision else None,
            "group_count": len(res.groups),
        }
        print(
            f"hardpair pigeonhole: L={L} {res.family_size} members into "
            f"{res.total_cubes} cubes, collision "
            + ("found" if res.collision else "absent")
        )
        return 0, [({"L": L, "p": p, "mode": mode, "k": kk}, outputs)], seed

    if mode == "pad":
        row = hp.decay_point(L, params, seed, k=k)
        n = _effective(args, cfg, "n", 4 * L)
        pad = hp.pad_and_bound(row["x"], row["y"], n, params, row["k"])
        l1 = hp.l1_counting_check(row["x"], row["y"], row["k"], params)
        ok = pad.identity_ok and pad.damping_ok and l1.passed
        outputs = dict(row)
        outputs.update(
            {
                "pad_n": n,
                "identity_max_deviation": pad.identity_max_deviation,
                "identity_ok": pad.identity_ok,
                "circle_sup_padded": pad.circle_sup_padded,
                "circle_sup_unpadded": pad.circle_sup_unpadded,
                "damping_ok": pad.damping_ok,
                "arc_sup_padded": pad.arc_sup_padded,
                "l1_lhs": l1.lhs,
                "l1_rhs": l1.rhs,
                "l1_pass": l1.passed,
            }
        )
        print(
            f"hardpair pad: L={L} n={n} padded circle sup "
            f"{pad.circle_sup_padded:.6e} <= unpadded "
            f"{pad.circle_sup_unpadded:.6e}: {pad.damping_ok}"
        )
        return (0 if ok else 1), [
            ({"L": L, "p": p, "mode": mode, "k": row["k"], "n": n}, outputs)
        ], seed

    if mode == "sweep":
        rows = [hp.decay_point(Li, params, seed, k=k) for Li in (8, 27, 64)]
        sups = [r["min_sup"] for r in rows]
        decreasing = all(b < a for a, b in zip(sups, sups[1:]))
        for r in rows:
            print(
                f"hardpair sweep: L={r['L']:>2} min arc sup {r['min_sup']:.6e} "
                f"({r['mode']}, {r['pairs_scanned']} pairs)"
            )
        print(f"hardpair sweep: strictly decreasing: {decreasing}")
        cells = [
            ({"L": r["L"], "p": p, "mode": mode, "k": r["k"]}, r) for r in rows
        ]
        return (0 if decreasing else 1), cells, seed

    raise UsageError(f"unknown --mode {mode!r} for hardpair")


def _cmd_mle(args, cfg):
    mode = _effective(args, cfg, "mode", "optimality")

    if mode == "optimality":
        seed = _require(_effective(args, cfg, "seed"), "--seed")
        trials = _effective(args, cfg, "trials", 20)
        T = _effective(args, cfg, "T", 2)
        gen = rng.generator(rng.derive_seed(seed, "cli-mle"))
        reports = []

        rep = ml.optimality_bound_check(ml.uniform_vs_point_masses(6))
        rep["family"] = "uniform_vs_point_masses(6)"
        reports.append(rep)

        for i in range(trials):
            fam = ml.random_family(
                int(gen.integers(2, 7)),
                int(gen.integers(2, 6)),
                rng.derive_seed(seed, "fam", i),
            )
            rep = ml.optimality_bound_check(fam)
            rep["family"] = f"random[{i}]"
            reports.append(rep)

        sources = ("0000", "0110", "1111", "1010")
        base = [trace_distribution(s, ChannelParams(0.3)) for s in sources]
        for t in range(1, min(T, 3) + 1):
            fam = ml.DistributionFamily.build([ml.product_table(D, t) for D in base])
            rep = ml.optimality_bound_check(fam)
            rep["family"] = f"trace_product(T={t})"
            reports.append(rep)

        all_pass = all(r["pass"] for r in reports)
        print(
            f"mle optimality: {len(reports)} families, "
            + ("all within bound" if all_pass else "VIOLATION")
        )
        outputs = {"reports": reports, "all_pass": all_pass}
        return (0 if all_pass else 1), [
            ({"mode": mode, "trials": trials, "T": T}, outputs)
        ], seed

    if mode == "lb":
        n = _effective(args, cfg, "n", 8)
        T = _effective(args, cfg, "T", 2)
        rep = ml.lb_verify(n, T)
        print(
            f"mle lb: n={n} T={T} Pr[MLE picks null]={rep['pr_mle_null']} "
            f"distinguisher {rep['distinguisher_success_subset']:.6f} vs "
            f"{rep['distinguisher_success_null']}"
        )
        return (0 if rep["pass"] else 1), [({"mode": mode, "n": n, "T": T}, rep)], None

    if mode == "curve":
        seed = _require(_effective(args, cfg, "seed"), "--seed")
        n = _effective(args, cfg, "n", 8)
        p = _require(_effective(args, cfg, "p"), "--p")
        T_max = _effective(args, cfg, "T", 3)
        trials = _effective(args, cfg, "trials", 200)
        gen = rng.generator(rng.derive_seed(seed, "cli-curve"))
        pool = []
        while len(pool) < 4:
            x = "".join("01"[b] for b in gen.integers(0, 2, size=n))
            if x not in pool:
                pool.append(x)
        rep = ml.amplified_success_curve(
            pool, ChannelParams(p), range(1, T_max + 1), trials, seed
        )
        print(
            f"mle curve: n={n} p={p} T=1..{T_max}, "
            f"{len(rep['rows'])} cells x {trials} trials"
        )
        outputs = {"rows": rep["rows"], "smoothed": rep["smoothed"]}
        return 0, [
            ({"mode": mode, "n": n, "p": p, "T": T_max, "trials": trials}, outputs)
        ], seed

    raise UsageError(f"unknown --mode {mode!r} for mle")


def _cmd_distinguish(args, cfg):
    x = _require(_effective(args, cfg, "x"), "--x")
    y = _require(_effective(args, cfg, "y"), "--y")
    p = _require(_effective(args, cfg, "p"), "--p")
    seed = _require(_effective(args, cfg, "seed"), "--seed")
    T = _effective(args, cfg, "T", 1)
    trials = _effective(args, cfg, "trials", 200)
    k = _effective(args, cfg, "k", 2)
    method = _effective(args, cfg, "mode", "mean")
    if method not in ("mean", "kgram"):
        raise UsageError(f"unknown --mode {method!r} for distinguish")
    rep = dst.success_rate(x, y, ChannelParams(p), method, T, trials, seed, k=k)
    print(
        f"distinguish: {method} statistic, rate {rep['rate']:.3f} "
        f"(95% CI {rep['ci_low']:.3f}..{rep['ci_high']:.3f})"
    )
    params = {"x": x, "y": y, "p": p, "T": T, "trials": trials, "mode": method, "k": k}
    return 0, [(params, rep)], seed


def _cmd_verify(args, cfg):
    suite = _effective(args, cfg, "suite", "all")
    seed = _effective(args, cfg, "seed", 0)
    names = list(vf.SUITES) if suite == "all" else [suite]
    unknown = [s for s in names if s not in vf.SUITES]
    if unknown:
        raise UsageError(f"unknown --suite {unknown[0]!r}")
    ok, rows = vf.run_suites(names, seed)
    for r in rows:
        mark = "PASS" if r["ok"] else "FAIL"
        print(f"[{mark}] {r['suite']}:{r['check']}  {r['detail']}")
    print(f"verify: {'all suites pass' if ok else 'FAILURES above'}")
    outputs = {"rows": rows, "all_ok": ok}
    return (0 if ok else 1), [({"suite": suite}, outputs)], seed


def _scalar_columns(record: dict) -> dict:
    row = {
        "command": record["command"],
        "seed": record["seed"],
        "timestamp": record["timestamp"],
        "version": record["version"],
    }
    for group in ("params", "outputs"):
        for key, value in record.get(group, {}).items():
            if isinstance(value, (int, float, str, bool)) or value is None:
                row[f"{group}.{key}"] = value
    return row


def _cmd_report(args, cfg):
    path = _require(_effective(args, cfg, "out"), "--out")
    csv_path = _effective(args, cfg, "csv")
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(_scalar_columns(json.loads(line)))
    columns = ["command", "seed", "timestamp", "version"]
    extra = sorted({c for r in rows for c in r} - set(columns))
    columns += extra
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, restval="")
            writer.writeheader()
            writer.writerows(rows)
        print(f"report: wrote {len(rows)} rows x {len(columns)} columns to {csv_path}")
    else:
        print(f"report: {len(rows)} records, columns: {', '.join(columns)}")
    return 0, [], None


HANDLERS = {
    "simulate": _cmd_simulate,
    "density-map": _cmd_density_map,
    "genpoly": _cmd_genpoly,
    "hardpair": _cmd_hardpair,
    "mle": _cmd_mle,
    "distinguish": _cmd_distinguish,
    "verify": _cmd_verify,
    "report": _cmd_report,
}

_FLAG_HELP = {
    "n": "source or padding length",
    "k": "window width",
    "T": "trace count (or grid maximum for mle --mode curve)",
    "L": "separated-family scale (a perfect cube)",
    "seed": "master seed; required for stochastic subcommands",
    "trials": "Monte-Carlo repetitions or family count",
    "p": "per-bit deletion probability",
    "mode": "subcommand variant",
    "suite": "verify suite name or 'all'",
    "x": "source bit string",
    "y": "second source bit string",
    "w": "window bit string",
}

_SUBCOMMAND_FLAGS = {
    "simulate": ["x", "p", "T", "seed"],
    "density-map": ["x", "k", "p"],
    "genpoly": ["x", "w", "p"],
    "hardpair": ["L", "k", "p", "n", "mode", "seed"],
    "mle": ["mode", "n", "p", "T", "trials", "seed"],
    "distinguish": ["x", "y", "p", "T", "k", "trials", "mode", "seed"],
    "verify": ["suite", "seed"],
    "report": ["csv"],
}

_SUBCOMMAND_HELP = {
    "simulate": "sample traces from the deletion channel",
    "density-map": "window survival-density rows for one source",
    "genpoly": "window generating polynomial, suprema, analytic checks",
    "hardpair": "separated families: closest pair, pigeonhole, padding, sweep",
    "mle": "selection-guarantee, subset-family, and success-curve experiments",
    "distinguish": "statistic-based two-source distinguisher success rate",
    "verify": "run per-module self-check suites",
    "report": "summarize a JSON-lines record file, optionally as CSV",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracelab",
        description="Deletion-channel trace statistics and separation bounds.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, flags in _SUBCOMMAND_FLAGS.items():
        sp = sub.add_parser(name, help=_SUBCOMMAND_HELP[name])
        for flag in flags:
            sp.add_argument(
                f"--{flag}",
                type=CONFIG_KEYS.get(flag, str),
                default=None,
                help=_FLAG_HELP.get(flag, ""),
            )
        sp.add_argument("--out", default=None, help="JSON-lines record path")
        sp.add_argument("--config", default=None, help="flat key=value config file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config else {}
        code, cells, seed = HANDLERS[args.command](args, cfg)
        out = _effective(args, cfg, "out")
        if out and cells:
            stamp = _now()
            with open(out, "a", encoding="utf-8") as fh:
                for params, outputs in cells:
                    rec = ExperimentRecord(
                        command=args.command,
                        params=_plain(params),
                        outputs=_plain(outputs),
                        seed=seed,
                        timestamp=stamp,
                        version=__version__,
                    )
                    fh.write(rec.to_json() + "\n")
        return code
    except ConfigParseError as exc:
        print(f"tracelab: config error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as exc:
        print(f"tracelab: usage error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"tracelab: i/o error: {exc}", file=sys.stderr)
        return 2
    except TraceLabError as exc:
        print(f"tracelab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
