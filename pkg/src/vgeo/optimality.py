"""First-order optimality over feasible regions and smooth feasible descent paths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import AmenableRep, CQError, low_discrepancy_directions, tangent_cone_amenable
from .core import SampledCurve, as_vec, default_step, polyline_length
from .geodesics import GeodesicError, averaging_map
from .oracles import SetOracle
from .paths import PathError, ReductionError, build_eps_path

EPS_FLOOR = 1e-3
ARMIJO = 1e-4


class DescentError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def gradient(f, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    h = h or default_step(x)
    E = np.eye(x.size) * h
    X = np.vstack([x + E, x - E])
    vals = np.asarray(f(X), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"objective is not finite near {x.tolist()}")
    g = (vals[: x.size] - vals[x.size :]) / (2 * h)
    return g


def _fvals(f, X) -> np.ndarray:
    return np.asarray(f(np.atleast_2d(X)), dtype=float).reshape(-1)


@dataclass
class FirstOrderVerdict:
    status: str  # "holds-at-tolerance" or "fails"
    gradient: np.ndarray
    direction: np.ndarray  # tangent direction with the most negative derivative
    value: float  # <∇f, direction>
    directions: int
    method: str

    @property
    def holds(self) -> bool:
        return self.status == "holds-at-tolerance"

    def to_json(self) -> dict:
        return {"status": self.status, "gradient": self.gradient.tolist(), "direction": self.direction.tolist(),
                "value": self.value, "directions": self.directions, "method": self.method}


def _amenable_rep(C: SetOracle, x):
    if getattr(C, "preimage", None) is None:
        return None
    try:
        return AmenableRep.of(C, x)
    except CQError:
        return None


def feasible_chords(C: SetOracle, x, dirs: int = 256, radii=(1e-3, 1e-4), seed: int = 0) -> np.ndarray:
    """Unit chords toward nearest members of x + r u; at small r these estimate T_C(x)."""
    x = as_vec(x, C.dim)
    scale = max(1.0, float(np.linalg.norm(x)))
    U = low_discrepancy_directions(C.dim, dirs, seed)
    out = []
    for r in radii:
        for u in U:
            p = C.project(x + r * scale * u)[0]
            d = p - x
            nd = np.linalg.norm(d)
            if nd > 1e-3 * r * scale:
                out.append(d / nd)
    return np.array(out).reshape(-1, C.dim)


def tangent_directions(C: SetOracle, x, dirs: int = 256, rep=None, seed: int = 0):
    """Sampled T_C(x): the amenable formula when a representation with the CQ exists, else feasible chords."""
    rep = rep if rep is not None else _amenable_rep(C, x)
    if rep is not None:
        try:
            return tangent_cone_amenable(rep, x, dirs=dirs).directions, "amenable"
        except (CQError, ReductionError, ValueError):
            pass
    return feasible_chords(C, x, dirs, seed=seed), "feasible-chords"


def check_first_order(f, C: SetOracle, x, tol: float = 1e-3, dirs: int = 256, rep=None, seed: int = 0):
    """<∇f(x), v> >= -tol |∇f(x)| over sampled tangent directions v."""
    x = as_vec(x, C.dim)
    if not C.contains(x, 1e-8):
        raise ValueError("x is not in the feasible set")
    g = gradient(f, x)
    V, method = tangent_directions(C, x, dirs, rep, seed)
    if V.shape[0] == 0:
        return FirstOrderVerdict("holds-at-tolerance", g, np.zeros(C.dim), 0.0, 0, method)
    vals = V @ g
    i = int(np.argmin(vals))
    status = "fails" if vals[i] < -tol * max(np.linalg.norm(g), 1e-300) else "holds-at-tolerance"
    return FirstOrderVerdict(status, g, V[i], float(vals[i]), V.shape[0], method)


@dataclass
class DescentReport:
    x: np.ndarray
    gradient: np.ndarray
    direction: np.ndarray
    eps: float
    curve: SampledCurve
    slope: float  # (f∘γ)'(0) per unit arc length, measured
    values: np.ndarray
    t_star: float
    target: np.ndarray
    route: str
    bound: float  # <∇f, v> + 2 eps |∇f|
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"x": self.x.tolist(), "gradient": self.gradient.tolist(), "direction": self.direction.tolist(),
                "eps": self.eps, "slope": self.slope, "t_star": self.t_star, "target": self.target.tolist(),
                "route": self.route, "bound": self.bound, "f0": float(self.values[0]),
                "f_t_star": float(np.interp(self.t_star, self.curve.grid, self.values)),
                "length": polyline_length(self.curve.points), "diagnostics": self.diagnostics}

    def rows(self):
        """Per-node (t, point, f) rows."""
        for t, p, v in zip(self.curve.grid, self.curve.points, self.values):
            yield [float(t), *map(float, p), float(v)]


def recipe_eps(g, v) -> float:
    """Half the normalised negative slope, floored."""
    return max(-float(g @ v) / (2 * max(np.linalg.norm(g), 1e-300)), EPS_FLOOR)


def _initial_slope(f, curve: SampledCurve) -> float:
    """Second-order one-sided derivative of f∘γ with respect to arc length at the start."""
    pts = curve.points
    seg = np.linalg.norm(np.diff(pts[:3], axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    vals = _fvals(f, pts[:3])
    if s[2] == 0:
        return 0.0
    h1, h2 = s[1], s[2]
    # quadratic through (0, f0), (h1, f1), (h2, f2), derivative at 0
    return float(-vals[0] * (h1 + h2) / (h1 * h2) + vals[1] * h2 / (h1 * (h2 - h1)) - vals[2] * h1 / (h2 * (h2 - h1)))


def _t_star(grid, values) -> float:
    inc = np.where(np.diff(values) >= 0)[0]
    return float(grid[inc[0]]) if inc.size else float(grid[-1])


def _sequence(C: SetOracle, x, v, ladder: int):
    for k in range(1, ladder + 1):
        p = C.project(x + 2.0**-k * v)[0]
        d = p - x
        nd = np.linalg.norm(d)
        if nd > 0:
            yield k, p, d / nd


def descent_path(f, C: SetOracle, x, eps: float | None = None, v=None, rep=None, ladder: int = 40,
                 align: float | None = None, nodes: int = 1024, tol: float = 1e-8) -> DescentReport:
    """Feasible curve from x along a descent tangent direction v with a negative initial slope."""
    x = as_vec(x, C.dim)
    g = gradient(f, x)
    if v is None:
        fo = check_first_order(f, C, x, rep=rep)
        if fo.holds:
            raise DescentError("first-order condition holds at x; no descent direction",
                               {"first_order": fo.to_json()})
        v = fo.direction
    v = as_vec(v, C.dim) / np.linalg.norm(v)
    if g @ v >= 0:
        raise DescentError("v is not a descent direction", {"slope": float(g @ v)})
    eps = recipe_eps(g, v) if eps is None else eps
    align = min(eps, 1e-3) if align is None else align
    rep = rep if rep is not None else _amenable_rep(C, x)
    f0 = float(_fvals(f, x)[0])
    tried = []
    # sequence members whose chord direction matches v; nearer members are fallbacks
    for k, y, u in _sequence(C, x, v, ladder):
        err = float(np.linalg.norm(u - v))
        if err > align and k < ladder:
            tried.append({"k": k, "align": err, "reason": "chord direction not yet aligned"})
            continue
        curve, route = None, ""
        if rep is not None:
            try:
                curve, rpt = build_eps_path(rep, x, y, eps, nodes, C=C)
                route = rpt.route or "eps-path"
                if not rpt.passed:
                    curve = None
            except (PathError, ReductionError, CQError):
                curve = None
        if curve is None:
            try:
                curve, _ = averaging_map(C, x, y, levels=10)
                route = "averaging"
            except GeodesicError as exc:
                tried.append({"k": k, "align": err, "reason": str(exc)})
                continue
        if np.max(C.residual(curve.points)) > tol:
            tried.append({"k": k, "align": err, "reason": "curve left the feasible set"})
            continue
        vals = _fvals(f, curve.points)
        slope = _initial_slope(f, curve)
        ts = _t_star(curve.grid, vals)
        if slope < 0 and ts > 0:
            return DescentReport(x, g, v, eps, curve, slope, vals, ts, y, route,
                                 float(g @ v + 2 * eps * np.linalg.norm(g)),
                                 {"k": k, "align": err, "tried": tried, "f0": f0})
        tried.append({"k": k, "align": err, "reason": f"slope {slope:.3g}, t* {ts:.3g}"})
    raise DescentError("no negative initial slope after shrinking", {"tried": tried})


def backtracking(f, report: DescentReport, c: float = ARMIJO, shrink: float = 0.5, max_iter: int = 60) -> float:
    """Largest t = t* shrink^j with f(γ(t)) <= f(x) + c s(t) slope (Armijo along arc length)."""
    pts, grid = report.curve.points, report.curve.grid
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    f0 = float(report.values[0])
    t = report.t_star
    for _ in range(max_iter):
        ft = float(np.interp(t, grid, report.values))
        if ft <= f0 + c * float(np.interp(t, grid, s)) * report.slope:
            return t
        t *= shrink
    return 0.0
