"""Command-line surface: every experiment, reproducible seeds, CSV/JSON out.

All state comes from flags (no environment overrides); every output embeds
the fully-resolved configuration and the package version, and re-running a
command with identical flags produces byte-identical output regardless of
`--workers`.  Numbers are serialized with 17 significant digits so 64-bit
floats round-trip.

Exit codes: 0 success, 2 usage errors, 3 precision/resource errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, bump, counting, decay, fourier, moments, orbit
from .parallel import default_workers

USAGE_ERROR = 2
RESOURCE_ERROR = 3


def fmt(x) -> str:
    """17-significant-digit serialization: round-trips 64-bit floats."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    return x


class OutputDoc:
    """Tabular result with a config echo, rendered as CSV or JSON."""

    def __init__(self, config: dict, columns: list, rows: list, summary: dict | None = None):
        self.config = config
        self.columns = columns
        self.rows = rows
        self.summary = summary or {}

    def render_csv(self) -> str:
        lines = [
            f"# cantorlab {__version__}",
            "# config: " + json.dumps(_jsonable(self.config), sort_keys=True),
        ]
        for key in sorted(self.summary):
            lines.append(f"# {key}: {fmt(self.summary[key])}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def render_json(self) -> str:
        doc = {
            "version": __version__,
            "config": _jsonable(self.config),
            "columns": self.columns,
            "rows": [[_jsonable(v) for v in row] for row in self.rows],
        }
        if self.summary:
            doc["summary"] = _jsonable(self.summary)
        return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                          default=_jsonable) + "\n"

    def render(self, form: str) -> str:
        return self.render_csv() if form == "csv" else self.render_json()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_workers(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, default=None,
                   help="ensemble parallelism (default: available cores); "
                        "output is independent of this value")


def _parse_targets(spec: str, seed: int) -> counting.TargetSequence:
    if spec == "zero":
        return counting.TargetSequence.zero()
    if spec == "uniform":
        return counting.TargetSequence.iid_uniform(seed)
    if spec.startswith("uniform:"):
        return counting.TargetSequence.iid_uniform(int(spec.split(":", 1)[1]))
    if spec.startswith("constant:"):
        return counting.TargetSequence.constant(float(spec.split(":", 1)[1]))
    if spec.startswith("file:"):
        return counting.TargetSequence.from_file(spec.split(":", 1)[1])
    raise ValueError(f"bad --targets {spec!r} (zero | constant:V | uniform[:SEED] | file:PATH)")


def _point_from_flags(args, n_needed: int, base3_depth: int) -> orbit.CirclePoint:
    if args.point is not None:
        digits = args.point.strip()
        if set(digits) <= {"0", "2"}:
            return orbit.from_ternary(digits)
        if set(digits) <= {"0", "1"}:
            return orbit.from_binary(digits)
        raise ValueError("--point must be a ternary {0,2} or binary {0,1} digit string")
    return orbit.sample_cantor(args.seed, args.index, base3_depth)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cantorlab",
        description="Shrinking-target experiments on the middle-third Cantor set",
    )
    ap.add_argument("--version", action="version", version=f"cantorlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fourier", help="one certified transform magnitude")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--tol", type=float, default=fourier.DEFAULT_TOL)
    _add_common(p)

    p = sub.add_parser("fourier-scan", help="|mu_hat(l 2^n)| over a grid")
    p.add_argument("--l-max", type=int, default=8)
    p.add_argument("--n-max", type=int, default=0)
    p.add_argument("--tol", type=float, default=fourier.DEFAULT_TOL)
    _add_common(p)

    p = sub.add_parser("cassels", help="exceedance counts vs the counting bound")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--mode", choices=("combinatorial", "direct"), default="combinatorial")
    _add_common(p)

    p = sub.add_parser("residues", help="the power-of-4 residue orbit audit")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("digits", help="digit-window partition vs closed form")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("bump-audit", help="bump kernel property audit")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--center", type=float, default=0.25)
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--b", type=float, default=0.2)
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--l-max", type=int, default=64)
    p.add_argument("--grid", type=int, default=4096)
    _add_common(p)

    p = sub.add_parser("moments", help="expectation of the bump sum, both routes")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--b", type=float, default=0.2)
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--targets", default="zero")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("both", "fourier", "mc"), default="both")
    p.add_argument("--guard-bits", type=int, default=orbit.DEFAULT_GUARD_BITS)
    _add_workers(p)
    _add_common(p)

    for name, help_text in (
        ("count", "hit counting against shrinking targets"),
        ("dyadic-count", "dyadic-rational reformulation (zero targets)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--c", type=float, default=0.05)
        p.add_argument("--theta", type=float, default=0.3)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--index", type=int, default=0)
        p.add_argument("--m", type=int, default=1)
        p.add_argument("--point", default=None,
                       help="explicit digit-string point (ternary {0,2} or binary {0,1})")
        p.add_argument("--depth", type=int, default=None, help="digit depth override")
        p.add_argument("--guard-bits", type=int, default=orbit.DEFAULT_GUARD_BITS)
        if name == "count":
            p.add_argument("--sampler", choices=("mu", "lebesgue"), default="mu")
            p.add_argument("--targets", default="zero")
            _add_workers(p)
        _add_common(p)

    p = sub.add_parser("runs", help="zero-run positions in the dyadic expansion")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--c-run", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--point", default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--guard-bits", type=int, default=orbit.DEFAULT_GUARD_BITS)
    _add_common(p)

    p = sub.add_parser("sums", help="partial sums and convergence classification")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--c", type=float, default=0.05)
    p.add_argument("--theta", type=float, default=0.3)
    _add_common(p)

    return ap


def _config_echo(args, extra: dict | None = None) -> dict:
    # workers is execution detail: output is contractually independent of it
    skip = {"out", "format", "workers"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    cfg["version"] = __version__
    if extra:
        cfg.update(extra)
    return cfg


def _curve_doc(curve: counting.CountCurve, cfg: dict) -> OutputDoc:
    return OutputDoc(
        config=cfg,
        columns=["n", "hit", "hits_cum", "expected_cum", "ratio"],
        rows=list(curve.rows()),
        summary={
            "final_hits": curve.final_hits,
            "final_expected": curve.final_expected,
            "final_ratio": curve.final_ratio,
            "tie_warnings": curve.meta["tie_warnings"],
        },
    )


def _cmd_fourier(args) -> OutputDoc:
    v = fourier.mu_hat(args.l, args.tol)
    return OutputDoc(
        config=_config_echo(args),
        columns=["l", "magnitude", "error", "cutoff"],
        rows=[(args.l, v.magnitude, v.truncation_error, v.cutoff)],
    )


def _cmd_fourier_scan(args) -> OutputDoc:
    rows = []
    for l in range(1, args.l_max + 1):
        for n in range(args.n_max + 1):
            v = fourier.mu_hat_geometric(l, n, args.tol)
            rows.append((l, n, v.magnitude, v.truncation_error))
    return OutputDoc(
        config=_config_echo(args),
        columns=["l", "n", "magnitude", "error"],
        rows=rows,
    )


def _cmd_cassels(args) -> OutputDoc:
    if args.mode == "combinatorial":
        cb = decay.exceptional_bound_combinatorial(args.l, args.N)
        rows = [(args.l, args.N, "combinatorial", cb.upper, cb.bound, cb.holds)]
        summary = {"r": cb.r, "s1_inequality_holds": cb.s1_inequality_holds}
    else:
        ec = decay.exceptional_count_direct(args.l, args.N)
        cb = decay.exceptional_bound_combinatorial(args.l, args.N)
        rows = [(args.l, args.N, "direct", ec.count, cb.bound, ec.count <= cb.bound)]
        summary = {
            "threshold": ec.threshold,
            "even_count": ec.even_count,
            "odd_count": ec.odd_count,
            "ambiguous": ec.ambiguous,
            "combinatorial_upper": cb.upper,
        }
    return OutputDoc(
        config=_config_echo(args),
        columns=["l", "N", "mode", "count_or_upper", "bound", "holds"],
        rows=rows,
        summary=summary,
    )


def _cmd_residues(args) -> OutputDoc:
    ro = decay.residue_orbit(args.l, args.r)
    rows = [(n, res) for n, res in enumerate(ro.residues)]
    return OutputDoc(
        config=_config_echo(args),
        columns=["n", "residue"],
        rows=rows,
        summary={"modulus": ro.modulus, "m": ro.m, "verified": ro.verified},
    )


def _cmd_digits(args) -> OutputDoc:
    dp = decay.digit_partition(args.l, args.r)
    closed = decay.s2_closed_form(args.r)
    return OutputDoc(
        config=_config_echo(args),
        columns=["l", "r", "m", "s1_count", "s2_count", "s2_closed_form", "match"],
        rows=[(dp.l, dp.r, dp.m, dp.s1_count, dp.s2_count, closed, dp.s2_count == closed)],
    )


def _cmd_bump_audit(args) -> OutputDoc:
    spec = bump.BumpSpec(n=args.n, center=args.center, a=args.a, b=args.b, theta=args.theta)
    f = bump.make_bump(spec)
    xs = np.arange(args.grid) / args.grid
    vals = f(xs)
    rows = [
        ("range_min", float(vals.min()), 0.0, bool(vals.min() >= 0.0)),
        ("range_max", float(vals.max()), 1.0, bool(vals.max() <= 1.0)),
        ("center_value", f(spec.center), 1.0, f(spec.center) == 1.0),
        ("outside_value", f((spec.center + f.r_out + 1e-9) % 1.0), 0.0,
         f((spec.center + f.r_out + 1e-9) % 1.0) == 0.0),
        ("mean_value", f.mean_value(), (args.a + args.b) * args.n ** (-args.theta),
         abs(f.mean_value() - (args.a + args.b) * args.n ** (-args.theta)) < 1e-12),
        ("sup_d1", float(np.max(np.abs(f.derivative(xs)))), f.sup_first_derivative(),
         bool(np.max(np.abs(f.derivative(xs))) <= f.sup_first_derivative() + 1e-9)),
        ("sup_d2", float(np.max(np.abs(f.second_derivative(xs)))), f.sup_second_derivative(),
         bool(np.max(np.abs(f.second_derivative(xs))) <= f.sup_second_derivative() + 1e-9)),
        ("partial_sum_error_L", bump.partial_sum_error(f, args.l_max, 2 * args.l_max + 7),
         0.0, True),
    ]
    return OutputDoc(
        config=_config_echo(args),
        columns=["check", "value", "reference", "ok"],
        rows=rows,
    )


def _cmd_moments(args) -> OutputDoc:
    family = moments.BumpFamily(
        a=args.a, b=args.b, theta=args.theta,
        targets=_parse_targets(args.targets, args.seed),
    )
    workers = args.workers if args.workers is not None else default_workers()
    rows = []
    summary = {}
    if args.method in ("both", "fourier"):
        ef = moments.expectation_fourier(args.N, args.L, family)
        rows.append((args.N, "fourier", ef.value, ef.error_bar))
        summary["fourier_leading_term"] = ef.components["leading"]
        summary["fourier_truncation"] = ef.truncation
    if args.method in ("both", "mc"):
        em = moments.expectation_mc(args.N, args.m, args.seed, family,
                                    workers=workers, guard_bits=args.guard_bits)
        rows.append((args.N, "monte-carlo", em.value, em.error_bar))
        summary["mc_samples"] = args.m
    return OutputDoc(
        config=_config_echo(args),
        columns=["N", "method", "value", "error_bar"],
        rows=rows,
        summary=summary,
    )


def _cmd_count(args) -> OutputDoc:
    psi = counting.ApproxFunction(c=args.c, theta=args.theta)
    targets = _parse_targets(args.targets, args.seed)
    cfg = _config_echo(args)
    if args.m == 1:
        depth = args.depth or orbit.required_depth(
            args.N, args.guard_bits, base=3 if args.sampler == "mu" else 2)
        if args.point is not None:
            point = _point_from_flags(args, args.N, depth)
        elif args.sampler == "mu":
            point = orbit.sample_cantor(args.seed, args.index, depth)
        else:
            point = orbit.sample_uniform(args.seed, args.index, depth)
        curve = counting.count_hits(point, args.N, psi, targets, args.guard_bits)
        return _curve_doc(curve, cfg)
    workers = args.workers if args.workers is not None else default_workers()
    ens = counting.ensemble(args.m, args.N, psi, targets, args.sampler, args.seed,
                            workers=workers, guard_bits=args.guard_bits)
    rows = [
        (int(ens.sample_index[i]), int(ens.hits[i]), ens.expected, float(ens.ratios[i]))
        for i in range(args.m)
    ]
    q25, q75 = ens.iqr
    return OutputDoc(
        config=cfg,
        columns=["sample", "hits_cum", "expected_cum", "ratio"],
        rows=rows,
        summary={
            "median_ratio": ens.median_ratio,
            "mean_ratio": ens.mean_ratio,
            "iqr_low": q25,
            "iqr_high": q75,
            "tie_warnings_total": int(ens.tie_warnings.sum()),
        },
    )


def _cmd_dyadic_count(args) -> OutputDoc:
    psi = counting.ApproxFunction(c=args.c, theta=args.theta)
    depth = args.depth or orbit.required_depth(args.N, args.guard_bits, base=3)
    point = _point_from_flags(args, args.N, depth)
    curve = counting.dyadic_hits(point, args.N, psi, args.guard_bits)
    return _curve_doc(curve, _config_echo(args))


def _cmd_runs(args) -> OutputDoc:
    depth = args.depth or counting.zero_run_depth(args.N, args.c_run, args.guard_bits)
    point = _point_from_flags(args, args.N, depth)
    rep = counting.zero_runs(point, args.N, args.c_run, args.guard_bits)
    return OutputDoc(
        config=_config_echo(args),
        columns=["position"],
        rows=[(n,) for n in rep.positions],
        summary=rep.describe(),
    )


def _cmd_sums(args) -> OutputDoc:
    psi = counting.ApproxFunction(c=args.c, theta=args.theta)
    cs = counting.convergence_sum(psi, args.N)
    return OutputDoc(
        config=_config_echo(args),
        columns=["N", "sum_psi", "sum_clamped_mass", "divergent"],
        rows=[(cs.n_max, cs.sum_psi, cs.sum_mass, cs.divergent)],
    )


_DISPATCH = {
    "fourier": _cmd_fourier,
    "fourier-scan": _cmd_fourier_scan,
    "cassels": _cmd_cassels,
    "residues": _cmd_residues,
    "digits": _cmd_digits,
    "bump-audit": _cmd_bump_audit,
    "moments": _cmd_moments,
    "count": _cmd_count,
    "dyadic-count": _cmd_dyadic_count,
    "runs": _cmd_runs,
    "sums": _cmd_sums,
}


def run(argv=None) -> int:
    """Parse argv, run the experiment, write the artifact; returns exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        doc = _DISPATCH[args.command](args)
    except (orbit.PrecisionExhaustedError, decay.EnumerationLimitError) as e:
        print(f"error: {e}", file=sys.stderr)
        return RESOURCE_ERROR
    except (ValueError, OSError, bump.DegenerateBumpError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR
    text = doc.render(args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def console_main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    console_main()
