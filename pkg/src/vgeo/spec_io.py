"""JSON set specifications: validation, loading into oracles and canonical dumping."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .bodies import body_from_json
from .catalog import catalog
from .expr import ExprSyntaxError, parse_expr
from .oracles import CurveUnion, FunctionEpigraph, FunctionGraph, Preimage, SmoothMap, _Branch


class SpecError(ValueError):
    pass


def schema() -> dict:
    return json.loads(resources.files("vgeo").joinpath("schema/setspec.json").read_text())


def _expr(src, where):
    try:
        return parse_expr(src)
    except ExprSyntaxError as exc:
        raise SpecError(f"{where}: {exc}") from exc


def parse_spec_text(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise SpecError(f"malformed JSON at byte {offset} (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc


def validate(spec: dict) -> None:
    try:
        jsonschema.validate(spec, schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecError(f"invalid set spec at {path}: {exc.message}") from exc


def _bbox(spec, dim):
    if "bbox" in spec:
        lo, hi = (np.asarray(v, dtype=float) for v in spec["bbox"])
        if lo.size != dim or hi.size != dim or np.any(lo >= hi):
            raise SpecError("bbox must be [lo, hi] with lo < hi in every coordinate")
        return lo, hi
    return None


def load_spec(spec: dict):
    """Build an oracle from a spec dict; the canonical spec is kept on `.spec`."""
    validate(spec)
    kind = spec["kind"]
    if kind == "catalog":
        try:
            C = catalog(spec["name"])
        except KeyError as exc:
            raise SpecError(str(exc.args[0])) from exc
    elif kind == "preimage":
        exprs = [_expr(s, f"F[{i}]") for i, s in enumerate(spec["F"])]
        dim = spec.get("dim", max(max(e.nvars for e in exprs), 1))
        if any(e.nvars > dim for e in exprs):
            raise SpecError(f"F uses variables beyond dim = {dim}")
        D = body_from_json(spec["D"])
        if D.dim != len(exprs):
            raise SpecError(f"D has dimension {D.dim} but F has {len(exprs)} components")
        center, radius = spec.get("center"), spec.get("radius")
        if center is not None and len(center) != dim:
            raise SpecError("center dimension does not match dim")
        C = Preimage(SmoothMap.from_exprs(exprs, dim), D, center=center, radius=radius, bbox=_bbox(spec, dim),
                     name=spec.get("name", ""))
    elif kind in ("graph", "epigraph"):
        f = _expr(spec["f"], "f")
        dim = spec.get("dim", f.nvars + 1 if f.nvars else 2)
        if f.nvars > dim - 1:
            raise SpecError(f"f uses variables beyond the first {dim - 1}")
        cls = FunctionGraph if kind == "graph" else FunctionEpigraph
        C = cls(f, dim, _bbox(spec, dim), spec.get("name", ""))
        if C.c1:
            C.preimage = C.as_preimage()
    else:
        branches = []
        for i, br in enumerate(spec["branches"]):
            comps = [_expr(s, f"branches[{i}].param[{j}]") for j, s in enumerate(br["param"])]

            def func(s, comps=comps):
                S = np.atleast_1d(s)[:, None]
                return np.column_stack([c(S) for c in comps])

            branches.append(_Branch(func, br["interval"]))
        dim = len(spec["branches"][0]["param"])
        if any(len(b["param"]) != dim for b in spec["branches"]):
            raise SpecError("all branches must have the same dimension")
        C = CurveUnion(branches, _bbox(spec, dim), spec.get("name", ""))
    C.spec = canonical(spec)
    return C


def canonical(spec: dict) -> dict:
    """Normal form: expressions reprinted, bodies re-encoded, defaults made explicit."""
    out = {"kind": spec["kind"]}
    if "name" in spec:
        out["name"] = spec["name"]
    if spec["kind"] == "preimage":
        exprs = [parse_expr(s) for s in spec["F"]]
        out["dim"] = spec.get("dim", max(max(e.nvars for e in exprs), 1))
        out["F"] = [str(e) for e in exprs]
        out["D"] = body_from_json(spec["D"]).to_json()
        for key in ("center", "radius"):
            if key in spec:
                out[key] = spec[key]
    elif spec["kind"] in ("graph", "epigraph"):
        f = parse_expr(spec["f"])
        out["dim"] = spec.get("dim", f.nvars + 1 if f.nvars else 2)
        out["f"] = str(f)
    elif spec["kind"] == "curve-union":
        out["branches"] = [{"param": [str(parse_expr(s)) for s in b["param"]], "interval": [float(v) for v in b["interval"]]}
                           for b in spec["branches"]]
    if "bbox" in spec:
        out["bbox"] = [[float(v) for v in row] for row in spec["bbox"]]
    return out


def dump_spec(C) -> dict:
    spec = getattr(C, "spec", None)
    if spec is None:
        if C.name:
            return {"kind": "catalog", "name": C.name}
        raise SpecError("oracle was not built from a spec and has no catalog name")
    return spec


def load_spec_file(path) -> object:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    C = load_spec(parse_spec_text(text))
    if not C.name:
        C.name = Path(path).stem
    return C
