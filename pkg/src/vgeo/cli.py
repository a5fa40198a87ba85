"""Command-line front end: vgeo {check, path, geodesic, descend, report}."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tables
from .catalog import catalog, names
from .cones import AmenableRep, CQError
from .core import curve_length
from .expr import ExprEvalError, parse_expr
from .geodesics import GeodesicError, averaging_map
from .optimality import DescentError, descent_path
from .paths import PathError, ReductionError, build_eps_path
from .regularity import (EPS_LADDER, PROPERTIES, RADIUS_LADDER, check_function_approx_convexity,
                         ladder_cells, run_property)
from .spec_io import SpecError, load_spec_file

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2
DEFAULT_SEED = 42
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    source: str  # catalog name or spec path
    points: list = field(default_factory=list)
    properties: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    radius: list = field(default_factory=list)
    samples: int = 200
    seed: int = DEFAULT_SEED
    out: Path = Path(".")
    fmt: str = "csv"


def parse_point(text: str) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}; expected comma-separated numbers") from exc
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise UsageError(f"bad point {text!r}")
    return v


def parse_floats(text: str | None, default) -> list:
    if text is None:
        return list(default)
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc
    if not vals or any(v < 0 or not np.isfinite(v) for v in vals):
        raise UsageError(f"bad number list {text!r}; values must be finite and nonnegative")
    return vals


def thread_cap() -> int | None:
    """Validate VGEO_THREADS and forward it to the numeric libraries' thread variables."""
    raw = os.environ.get("VGEO_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"VGEO_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise UsageError(f"VGEO_THREADS must be a positive integer, got {raw!r}")
    for var in THREAD_VARS:
        os.environ.setdefault(var, str(n))
    return n


def load_set(args):
    if args.catalog and args.spec:
        raise UsageError("give either --catalog or --spec, not both")
    if args.catalog:
        try:
            return catalog(args.catalog)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from exc
    if args.spec:
        return load_spec_file(args.spec)
    raise UsageError("a set is required: --catalog NAME or --spec FILE")


def _out(args, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _stem(C) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in C.name)


# ---------------------------------------------------------------- subcommands


def cmd_check(args) -> int:
    C = load_set(args)
    x = parse_point(args.point)
    props = [p.strip() for p in args.property.split(",")]
    if props == ["all"]:
        props = [p for p in PROPERTIES if p != "clarke-regularity" or C.exact_normals is not None]
    eps_list = parse_floats(args.eps, EPS_LADDER)
    r_list = parse_floats(args.radius, RADIUS_LADDER)
    verdicts = []
    for prop in props:
        if prop == "function-approx-convexity":
            if not args.function:
                raise UsageError("function-approx-convexity needs --function EXPR")
            f = parse_expr(args.function)
            for e, r in ladder_cells(prop, eps_list, r_list):
                verdicts.append(check_function_approx_convexity(f, x, e, r, samples=args.samples * 10, seed=args.seed))
            continue
        if prop not in PROPERTIES:
            raise UsageError(f"unknown property {prop!r}; choose from {', '.join(PROPERTIES)}, "
                             "function-approx-convexity or all")
        for e, r in ladder_cells(prop, eps_list, r_list):
            verdicts.append(run_property(C, prop, x, e, r, args.samples, args.seed))
    path = Path(args.output) if args.output else _out(args, f"check_{_stem(C)}.{args.format}")
    if args.format == "csv":
        tables.write_verdicts(path, verdicts)
    else:
        tables.write_json(path, [v.to_row() for v in verdicts])
    bad = sum(v.violated for v in verdicts)
    print(f"{len(verdicts)} cells, {bad} violated -> {path}")
    return EXIT_VIOLATION if bad else EXIT_OK


def _write_curve_outputs(args, C, kind, curve, report) -> None:
    curve_path = _out(args, f"{kind}_{_stem(C)}_curve.csv")
    report_path = _out(args, f"{kind}_{_stem(C)}_report.json")
    tables.write_curve(curve_path, curve)
    tables.write_json(report_path, report)
    print(tables.dumps({"curve": str(curve_path), "report": str(report_path), **_summary(report)}), end="")


def _summary(report: dict) -> dict:
    keys = ("achieved", "passed", "length", "slope", "t_star", "route", "eps")
    return {k: report[k] for k in keys if k in report}


def cmd_path(args) -> int:
    C = load_set(args)
    x, x2 = parse_point(args.from_), parse_point(args.to)
    rep = AmenableRep.of(C, x)
    curve, report = build_eps_path(rep, x, x2, args.eps, nodes=args.nodes, C=C)
    _write_curve_outputs(args, C, "path", curve, report.to_json())
    return EXIT_OK


def cmd_geodesic(args) -> int:
    C = load_set(args)
    x, x2 = parse_point(args.from_), parse_point(args.to)
    curve, trace = averaging_map(C, x, x2, levels=args.levels)
    report = {"length": curve_length(curve), "chord": float(np.linalg.norm(x2 - x)), **trace.to_json()}
    _write_curve_outputs(args, C, "geodesic", curve, report)
    return EXIT_OK


def cmd_descend(args) -> int:
    C = load_set(args)
    x = parse_point(args.point)
    f = parse_expr(args.objective)
    v = parse_point(args.direction) if args.direction else None
    rep = descent_path(f, C, x, eps=args.eps, v=v)
    curve_path = _out(args, f"descend_{_stem(C)}_curve.csv")
    report_path = _out(args, f"descend_{_stem(C)}_report.json")
    header = ["t", *[f"x{i + 1}" for i in range(C.dim)], "f"]
    tables.write_csv(curve_path, header, rep.rows())
    report = rep.to_json()
    tables.write_json(report_path, report)
    print(tables.dumps({"curve": str(curve_path), "report": str(report_path), **_summary(report)}), end="")
    return EXIT_OK


def _cell_label(row) -> str:
    e, r = row.get("eps"), row.get("radius")
    return f"eps={tables.fmt(e) if e is not None else '-'};r={tables.fmt(r) if r is not None else '-'}"


def _cell_value(row) -> str:
    if row["property"] == "clarke-regularity":
        return "regular" if row["verdict"] == "no-violation-found" else "not-regular"
    return row["verdict"]


def cmd_report(args) -> int:
    files = []
    for item in args.inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(sorted(p.glob("*.csv")))
        elif p.exists():
            files.append(p)
        else:
            raise UsageError(f"missing input: {item}")
    rows = []
    for fp in files:
        rs = tables.read_csv(fp, numeric=False)
        if rs and "verdict" in rs[0]:
            rows.extend(rs)
    if not rows:
        raise UsageError("no verdict rows found in the inputs")
    rows = tables.dedupe(rows)
    for r in rows:
        r["eps"] = None if r["eps"] == "" else float(r["eps"])
        r["radius"] = None if r["radius"] == "" else float(r["radius"])
    sets = sorted({r["set"] for r in rows})
    cells = sorted({(r["eps"] if r["eps"] is not None else -1.0, r["radius"] if r["radius"] is not None else -1.0)
                    for r in rows}, key=lambda c: (-c[0], -c[1]))
    labels = [_cell_label({"eps": None if e < 0 else e, "radius": None if r < 0 else r}) for e, r in cells]
    index = {}
    for r in rows:
        index.setdefault((r["set"], r["property"], _cell_label(r)), []).append(_cell_value(r))
    out_rows = []
    for s in sets:
        for prop in sorted({r["property"] for r in rows if r["set"] == s}):
            vals = []
            for lab in labels:
                got = index.get((s, prop, lab), [])
                # several seeds in one cell: a violation anywhere wins
                vals.append("violated" if "violated" in got else "not-regular" if "not-regular" in got else
                            (got[0] if got else ""))
            out_rows.append([s, prop, *vals])
    path = Path(args.output) if args.output else _out(args, "matrix.csv")
    tables.write_csv(path, ["set", "property", *labels], out_rows)
    print(f"{len(out_rows)} rows from {len(rows)} verdicts -> {path}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_set_args(p):
    p.add_argument("--catalog", help=f"catalog set name ({', '.join(names())})")
    p.add_argument("--spec", help="JSON set specification file")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vgeo", description="Regularity checks and smooth paths in sets.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run regularity checks over eps/r ladders")
    _add_set_args(p)
    p.add_argument("--point", required=True)
    p.add_argument("--property", default="all", help="comma list or 'all'")
    p.add_argument("--eps", help="comma list (default dyadic ladder 1/2..1/64)")
    p.add_argument("--radius", help="comma list (default dyadic ladder 1/4..1/512)")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--function", help="objective for function-approx-convexity")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="verdict file (default OUT/check_<set>.csv)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("path", help="build and verify an eps-path")
    _add_set_args(p)
    p.add_argument("--from", dest="from_", required=True)
    p.add_argument("--to", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--nodes", type=int, default=1024)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("geodesic", help="averaging map by midpoint projection")
    _add_set_args(p)
    p.add_argument("--from", dest="from_", required=True)
    p.add_argument("--to", required=True)
    p.add_argument("--levels", type=int, default=14)
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("descend", help="feasible descent path from a point")
    _add_set_args(p)
    p.add_argument("--point", required=True)
    p.add_argument("--objective", required=True)
    p.add_argument("--direction", help="tangent direction (default: most negative sampled)")
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_descend)

    p = sub.add_parser("report", help="merge verdict CSVs into a property x (eps, r) matrix")
    p.add_argument("inputs", nargs="+", help="verdict CSV files or directories")
    p.add_argument("--output")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_report)
    return ap


POINT_FLAGS = ("--from", "--to", "--point", "--direction")


def _glue_points(argv):
    """'--from -0.1,0.01' -> '--from=-0.1,0.01' so negative coordinates are not read as options."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in POINT_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_glue_points(argv))
    try:
        thread_cap()
        return args.func(args)
    except (UsageError, SpecError, ExprEvalError, CQError, PathError, ReductionError, GeodesicError, DescentError,
            ValueError, OSError) as exc:
        print(f"vgeo {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
