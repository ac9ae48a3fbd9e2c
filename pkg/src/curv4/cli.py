"""Command-line front end.

::

    curv4 analyze --metric s4 --grid 32 --format json
    curv4 verify  --metric cp2 --suite volume,lemmas
    curv4 verify  --metric flat-t4 --suite conformal --phi "0.1*sin(2*pi*x1)" --grid 64
    curv4 sweep   --family s1xs3-collapse --t-min 0.01 --t-max 1 --steps 20

Exit codes: 0 success, 2 bad input (unknown metric, invalid TOML or
expression, bad range), 3 numerical non-convergence, 4 a bound failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import expr as ex
from .biorthogonal import k_extremes_brute, k_extremes_closed, sectional_extremes
from .builtins import BUILTINS, FAMILIES, UnknownMetricError, builtin
from .frame_algebra import decompose
from .functionals import SUITES, NormalizationError, kperp_extremes, survey
from .geometry import (
    GeometryError,
    HomogeneityError,
    MetricChart,
    QuadratureConvergenceError,
    curvature_at,
    interior_samples,
)
from .metric_file import load_metric_toml
from .topology import BGSearchError, betti_annotation, recover_topology

SCHEMA = "curv4/1"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_BOUND = 4


class InputError(Exception):
    pass


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InputError(f"--param expects k=v, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise InputError(f"--param {key}: not a number: {value!r}") from None
    return out


def load_chart(metric: str, params=None) -> MetricChart:
    """A built-in by name or a ``.toml`` metric file."""
    params = params or {}
    if metric.endswith(".toml") or Path(metric).is_file():
        if params:
            raise InputError("--param applies to built-in metrics only")
        try:
            return load_metric_toml(metric)
        except FileNotFoundError:
            raise InputError(f"metric file not found: {metric}") from None
        except GeometryError as exc:
            raise InputError(f"{metric}: {exc}") from None
    try:
        return builtin(metric, **params)
    except UnknownMetricError as exc:
        raise InputError(exc.args[0]) from None


def _finite(x):
    """Plain Python floats for JSON; non-finite values become strings."""
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# -- analyze -----------------------------------------------------------------


def _sample_points(chart: MetricChart, args) -> list[dict]:
    rows = []
    pts = interior_samples(chart, args.points, seed=args.seed)
    for k, p in enumerate(pts):
        t = curvature_at(chart, p)
        d = decompose(t)
        k1, k3 = k_extremes_closed(d)
        b1, b3 = k_extremes_brute(t, samples=args.samples, seed=args.seed + k)
        kmin, kmax = sectional_extremes(t)
        rows.append(
            {
                "point": [float(v) for v in p],
                "s": d.s,
                "eig_plus": list(d.eig_plus),
                "eig_minus": list(d.eig_minus),
                "ric0_norm2": float(np.sum(d.ric0**2)),
                "k1perp": k1,
                "k3perp": k3,
                "k1perp_brute": b1,
                "k3perp_brute": b3,
                "sectional_min": kmin,
                "sectional_max": kmax,
            }
        )
    return rows


def cmd_analyze(args, chart: MetricChart) -> tuple[dict, int]:
    timings = {}
    t0 = time.perf_counter()
    sv = survey(chart, args.grid)
    timings["functionals"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    topo = recover_topology(chart, args.grid)
    timings["topology"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    samples = _sample_points(chart, args)
    timings["samples"] = time.perf_counter() - t0
    k1, k3 = kperp_extremes(sv.nodes.dec)
    report = {
        "schema": SCHEMA,
        "command": "analyze",
        "metric": chart.descriptor(),
        "grid": {"n": args.grid, "homogeneous_fast_path": sv.homogeneous},
        "seed": args.seed,
        "chi_raw": topo.chi.value,
        "chi_snapped": topo.chi.snapped,
        "tau_raw": topo.tau.value,
        "tau_snapped": topo.tau.snapped,
        "k1perp": float(np.min(k1)),
        "k3perp": float(np.max(k3)),
        "functionals": sv.values.as_dict(),
        "topology": topo.as_dict(),
        "betti": betti_annotation(topo.chi.snapped, topo.tau.snapped, chart.simply_connected),
        "samples": samples,
        "bounds": [],
    }
    if args.timings:
        report["timings"] = timings
    return report, EXIT_OK


def cmd_verify(args, chart: MetricChart) -> tuple[dict, int]:
    suites = [s.strip() for s in args.suite.split(",") if s.strip()]
    unknown = [s for s in suites if s not in SUITES]
    if unknown or not suites:
        raise InputError(f"unknown suite(s) {unknown}; known: {', '.join(SUITES)}")
    phi = None
    if "conformal" in suites:
        try:
            phi = ex.parse(args.phi, chart.coords)
        except ex.ExprSyntaxError as exc:
            raise InputError(f"--phi: {exc}") from None
    reports = []
    for name in suites:
        if name == "conformal":
            reports.append(SUITES[name](chart, phi, args.grid))
        else:
            reports.append(SUITES[name](chart, args.grid))
    ok = all(r.passed for r in reports)
    report = {
        "schema": SCHEMA,
        "command": "verify",
        "metric": chart.descriptor(),
        "grid": {"n": args.grid},
        "seed": args.seed,
        "pass": ok,
        "bounds": [r.as_dict() for r in reports],
    }
    if not ok:
        for r in reports:
            for e in r.failures():
                print(
                    f"bound failed: {r.suite}/{e.name}: {e.lhs!r} {e.relation} {e.rhs!r} (slack {e.slack:.3e})",
                    file=sys.stderr,
                )
    return report, EXIT_OK if ok else EXIT_BOUND


def _t_values(args) -> list[float]:
    if not (args.t_min > 0) or not math.isfinite(args.t_min) or not math.isfinite(args.t_max):
        raise InputError("--t-min must be positive")
    if args.steps < 1:
        raise InputError("--steps must be at least 1")
    if args.steps == 1:
        return [args.t_min]
    if args.t_max < args.t_min:
        raise InputError("--t-max must be at least --t-min")
    return [float(t) for t in np.linspace(args.t_min, args.t_max, args.steps)]


def cmd_sweep(args) -> tuple[dict, int]:
    from .functionals import family_sweep

    if args.family not in FAMILIES:
        raise InputError(f"unknown family {args.family!r}; known: {', '.join(sorted(FAMILIES))}")
    rows = family_sweep(args.family, _t_values(args), args.grid)
    return {"schema": SCHEMA, "command": "sweep", "family": args.family, "grid": {"n": args.grid}, "rows": rows}, EXIT_OK


# -- rendering ---------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if v is None:
        return "-"
    return str(v)


def _md_table(header, rows) -> list[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out += ["| " + " | ".join(_fmt(c).replace("|", "\\|") for c in row) + " |" for row in rows]
    return out


def render_markdown(report: dict) -> str:
    lines = [f"# curv4 {report['command']}", ""]
    if "metric" in report:
        m = report["metric"]
        params = ", ".join(f"{k}={_fmt(v)}" for k, v in m["params"].items())
        lines += [f"metric: `{m['name']}`" + (f" ({params})" if params else "") + f", scale {_fmt(m['scale'])}", ""]
    if report["command"] == "analyze":
        lines += ["## Topology", ""]
        t = report["topology"]
        rows = [[k, t[k]["value"], t[k]["snapped"]] for k in ("gauss_bonnet_chi", "hirzebruch_tau", "bg_euler_chi", "gray_signature_tau") if t[k]]
        lines += _md_table(["route", "raw", "snapped"], rows)
        if t["notice"]:
            lines += ["", t["notice"]]
        if report["betti"]:
            lines += ["", "Betti numbers (simply connected): " + ", ".join(f"{k} = {v}" for k, v in report["betti"].items())]
        lines += ["", "## Functionals", ""]
        lines += _md_table(["quantity", "value"], list(report["functionals"].items()))
        lines += ["", f"K1_perp (min) = {_fmt(report['k1perp'])}, K3_perp (max) = {_fmt(report['k3perp'])}", ""]
        lines += ["## Sample points", ""]
        lines += _md_table(
            ["point", "s", "K1 closed", "K1 brute", "K3 closed", "K3 brute", "K min", "K max"],
            [
                [
                    "(" + ", ".join(f"{x:.4g}" for x in r["point"]) + ")",
                    r["s"],
                    r["k1perp"],
                    r["k1perp_brute"],
                    r["k3perp"],
                    r["k3perp_brute"],
                    r["sectional_min"],
                    r["sectional_max"],
                ]
                for r in report["samples"]
            ],
        )
    elif report["command"] == "verify":
        for b in report["bounds"]:
            n = b["normalization"]
            lines += [f"## {b['suite']}", "", f"normalization: {n['kind']} (factor {_fmt(n['factor'])})", ""]
            lines += _md_table(
                ["entry", "inequality", "lhs", "rel", "rhs", "slack", "pass", "note"],
                [
                    [e["name"], e["reference"], e["lhs"], e["relation"], e["rhs"], e["slack"], "yes" if e["pass"] else "NO", ("equality; " if e["equality"] else "") + e["note"]]
                    for e in b["entries"]
                ],
            )
            for notice in b["notices"]:
                lines += ["", f"- {notice}"]
            lines += [""]
        lines += [f"overall: {'pass' if report['pass'] else 'FAIL'}"]
    if "timings" in report:
        lines += ["", "timings (s): " + ", ".join(f"{k} {v:.3f}" for k, v in report["timings"].items())]
    return "\n".join(lines).rstrip() + "\n"


def render_csv(report: dict) -> str:
    buf = io.StringIO()
    cols = ["t", "vol", "sup_abs_k", "sup_abs_kperp", "r_infinity"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in report["rows"]:
        w.writerow([repr(float(r[c])) for c in cols])
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_finite(report), indent=2) + "\n"
    if fmt == "csv":
        return render_csv(report)
    return render_markdown(report)


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curv4", description="Curvature integrals and inequality checks for 4-dimensional metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    def metric_args(sp):
        sp.add_argument("--metric", required=True, help=f"built-in ({', '.join(BUILTINS)}) or a .toml metric file")
        sp.add_argument("--param", action="append", metavar="K=V", help="built-in parameter, repeatable")
        sp.add_argument("--grid", type=int, default=16, help="quadrature nodes per active axis")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("json", "md"), default="md")
        sp.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte-identical output)")

    a = sub.add_parser("analyze", help="decomposition, extremes, topology and functionals")
    metric_args(a)
    a.add_argument("--points", type=int, default=4, help="sample points for the pointwise table")
    a.add_argument("--samples", type=int, default=2000, help="planes per point for the brute-force extremes")

    v = sub.add_parser("verify", help="run inequality suites")
    metric_args(v)
    v.add_argument("--suite", default="volume,supnorm,lemmas", help=f"comma-separated: {', '.join(SUITES)}")
    v.add_argument("--phi", default="0", help="conformal factor expression for the conformal suite")

    s = sub.add_parser("sweep", help="volume and sup-norms along a metric family")
    s.add_argument("--family", required=True, help=", ".join(sorted(FAMILIES)))
    s.add_argument("--t-min", type=float, required=True)
    s.add_argument("--t-max", type=float, required=True)
    s.add_argument("--steps", type=int, default=20)
    s.add_argument("--grid", type=int, default=16)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.grid < 2:
            raise InputError("--grid must be at least 2")
        if args.command == "sweep":
            report, code = cmd_sweep(args)
        else:
            if args.command == "analyze" and (args.points < 1 or args.samples < 1000):
                raise InputError("--points must be >= 1 and --samples >= 1000")
            chart = load_chart(args.metric, _parse_params(args.param))
            handler = cmd_analyze if args.command == "analyze" else cmd_verify
            report, code = handler(args, chart)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GeometryError, ex.ExprDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (QuadratureConvergenceError, HomogeneityError, BGSearchError, NormalizationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(render(report, args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
