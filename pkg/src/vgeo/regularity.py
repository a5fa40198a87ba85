"""Sampling-based checks (and falsification searches) for set and function regularity."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .catalog import catalog as _catalog
from .cones import SamplingError, regular_normal_sample
from .core import SampledCurve, as_vec, fd_derivative, has_persistent_corner, resample_by_arclength
from .geodesics import GeodesicError, averaging_map, intrinsic_distance_grid
from .oracles import DEFAULT_PROJECTION, FunctionEpigraph, FunctionGraph, ProjectionConfig, SetOracle
from .paths import verify_eps_path

NO_VIOLATION = "no-violation-found"
VIOLATED = "violated"
STRICT = 1e-9


def _strict(lhs: float, rhs: float) -> bool:
    """lhs > rhs by a relative margin, so witnesses survive recomputation."""
    return lhs - rhs > STRICT * max(abs(lhs), abs(rhs), 1e-300)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(a) for k, a in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(a) for a in v]
    return v


@dataclass
class RegularityVerdict:
    property: str
    set_name: str
    point: np.ndarray
    eps: float | None
    radius: float | None
    verdict: str
    margin: float = np.inf  # smallest rhs - lhs observed
    samples: int = 0
    seed: int = 0
    witness: dict = field(default_factory=dict)
    confidence: str = "normal"
    note: str = ""

    @property
    def violated(self) -> bool:
        return self.verdict == VIOLATED

    def to_row(self) -> dict:
        w = _jsonable(self.witness)
        return {
            "property": self.property,
            "set": self.set_name,
            "point": " ".join(repr(float(v)) for v in np.atleast_1d(self.point)),
            "eps": self.eps,
            "radius": self.radius,
            "verdict": self.verdict,
            "margin": self.margin,
            "samples": self.samples,
            "seed": self.seed,
            "witness_lhs": w.get("lhs"),
            "witness_rhs": w.get("rhs"),
            "witness": json.dumps(w, sort_keys=True) if w else "",
        }


def _in_ball(P, center, r):
    return np.linalg.norm(np.atleast_2d(P) - center, axis=1) <= r * (1 + 1e-12)


def _mirror_pairs(C: SetOracle, xbar, r, terms: int = 64):
    """(x, reflect(x)) along the oracle's declared family, x = family(1/k)."""
    if C.family is None or C.mirror is None:
        return []
    out = []
    for k in range(1, terms + 1):
        x = np.asarray(C.family(1.0 / k), dtype=float)
        x2 = C.reflect(x)
        if np.allclose(x, x2):
            continue
        if _in_ball(np.vstack([x, x2]), xbar, r).all() and C.members(np.vstack([x, x2]), 1e-9).all():
            out.append((k, x, x2))
    return out


def _random_pairs(C, xbar, r, count, rng):
    P = C.sample(xbar, r, 2 * count, rng)
    pairs = [(P[2 * i], P[2 * i + 1]) for i in range(P.shape[0] // 2)]
    pairs += [(xbar, P[i]) for i in range(min(count // 4, P.shape[0]))]
    return [(a, b) for a, b in pairs if np.linalg.norm(a - b) > 0]


# ---------------------------------------------------------------- super-regularity


def _normals_at(C, x, r, seed):
    if C.exact_normals is not None:
        return [np.asarray(v, dtype=float) for v in C.exact_normals(x).generators]
    try:
        sample = regular_normal_sample(C, x, max(r / 8, 1e-6), samples=200, dirs=128, seed=seed)
    except SamplingError:
        return []
    return list(sample.directions)


def super_regularity_sides(x, x2, v, eps):
    x, x2, v = (np.asarray(a, dtype=float) for a in (x, x2, v))
    return float(v @ (x2 - x)), float(eps * np.linalg.norm(v) * np.linalg.norm(x2 - x))


def check_super_regularity(C: SetOracle, xbar, eps: float, r: float, samples: int = 200, seed: int = 42,
                           family_terms: int = 64, max_normal_points: int = 24) -> RegularityVerdict:
    """Search for <v, x' - x> > eps |v| |x' - x| with v in N_C(x), x, x' in C ∩ B_r(x̄)."""
    xbar = as_vec(xbar, C.dim)
    worst = np.inf
    checked = 0
    for k, x, x2 in _mirror_pairs(C, xbar, r, family_terms):
        for a, b in ((x, x2), (x2, x)):
            for v in _normals_at(C, a, r, seed):
                lhs, rhs = super_regularity_sides(a, b, v, eps)
                checked += 1
                worst = min(worst, rhs - lhs)
                if _strict(lhs, rhs):
                    return RegularityVerdict("super-regularity", C.name, xbar, eps, r, VIOLATED, rhs - lhs, checked, seed,
                                             {"family_index": k, "x": a, "x2": b, "v": v, "lhs": lhs, "rhs": rhs})
    rng = np.random.default_rng(seed)
    P = C.sample(xbar, r, samples, rng)
    for i in range(min(P.shape[0], max_normal_points)):
        x = P[i]
        V = _normals_at(C, x, r, seed)
        if not V:
            continue
        D = P - x
        nd = np.linalg.norm(D, axis=1)
        D, nd = D[nd > 0], nd[nd > 0]
        if nd.size == 0:
            continue
        for v in V:
            lhs = D @ v
            rhs = eps * np.linalg.norm(v) * nd
            checked += lhs.size
            gap = rhs - lhs
            worst = min(worst, float(gap.min()))
            bad = np.where(lhs - rhs > STRICT * np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300))[0]
            if bad.size:
                j = int(bad[0])
                return RegularityVerdict("super-regularity", C.name, xbar, eps, r, VIOLATED, float(gap[j]), checked, seed,
                                         {"x": x, "x2": x + D[j], "v": v, "lhs": float(lhs[j]), "rhs": float(rhs[j])})
    return RegularityVerdict("super-regularity", C.name, xbar, eps, r, NO_VIOLATION, worst, checked, seed)


# ---------------------------------------------------------------- UAG


def uag_ratio(points, t, x, d) -> float:
    """max over t > 0 of |γ(t) - (x + t d)| / (t |d|)."""
    nd = np.linalg.norm(d)
    if nd == 0:
        return np.inf
    inner = t > 0
    gap = np.linalg.norm(points[inner] - (x + t[inner, None] * d), axis=1)
    return float(np.max(gap / (t[inner] * nd)))


def _best_direction(points, t, x, x2):
    d0 = x2 - x
    r0 = uag_ratio(points, t, x, d0)
    res = minimize(lambda d: uag_ratio(points, t, x, d), d0, method="Nelder-Mead",
                   options={"xatol": 1e-12 * max(1.0, np.linalg.norm(d0)), "fatol": 1e-12, "maxiter": 400})
    if res.fun < r0:
        return np.asarray(res.x), float(res.fun)
    return d0, r0


def _graph_chart_curve(C, x, x2, nodes):
    t = np.linspace(0.0, 1.0, nodes + 1)
    U = (1 - t)[:, None] * x[:-1] + t[:, None] * x2[:-1]
    fv = C.fvals(U)
    if isinstance(C, FunctionEpigraph):
        y = np.maximum((1 - t) * x[-1] + t * x2[-1], fv)
    else:
        y = fv
    return t, np.column_stack([U, y])


def _candidate_curves(C, x, x2, nodes=1024, pitch=None, use_grid=True):
    """Feasible candidate curves from x to x': chord, graph chart, averaging map, grid polyline."""
    t = np.linspace(0.0, 1.0, nodes + 1)
    chord = (1 - t)[:, None] * x + t[:, None] * x2
    out = []
    if np.all(C.residual(chord) <= 1e-9):
        out.append(("chord", t, chord))
        return out
    if isinstance(C, FunctionGraph) and C.dim == 2:
        out.append(("graph-chart", *_graph_chart_curve(C, x, x2, nodes)))
    try:
        curve, _ = averaging_map(C, x, x2, levels=10)
        pts = curve.points
        if np.all(C.residual(pts) <= 1e-8):
            out.append(("averaging", curve.grid, pts))
    except (GeodesicError, Exception):
        pass
    if use_grid:
        chord_len = float(np.linalg.norm(x2 - x))
        pitch = pitch or max(chord_len / 64, 1e-5)
        try:
            g = intrinsic_distance_grid(C, x, x2, pitch)
            if np.isfinite(g.estimate):
                poly = resample_by_arclength(g.polyline, nodes + 1)
                poly = C.project_local(poly)
                poly[0], poly[-1] = x, x2
                out.append(("grid", t, poly))
        except GeodesicError:
            pass
    return out


def check_uag(C: SetOracle, xbar, eps: float, r: float, samples: int = 16, seed: int = 42, pairs=None,
              pitch: float | None = None) -> RegularityVerdict:
    """For each pair look for a curve γ and direction d with |γ(t) - (x + t d)| <= eps t |d|."""
    xbar = as_vec(xbar, C.dim)
    rng = np.random.default_rng(seed)
    if pairs is None:
        pairs = _random_pairs(C, xbar, r, samples, rng)
    pairs = [(as_vec(a, C.dim), as_vec(b, C.dim)) for a, b in pairs]
    worst = np.inf
    for x, x2 in pairs:
        best, best_info = np.inf, None
        cands = _candidate_curves(C, x, x2, use_grid=False, pitch=pitch)
        for stage in (0, 1):
            for name, t, pts in cands:
                for param in ("given", "arclength"):
                    if param == "arclength":
                        pts_p = resample_by_arclength(pts, t.size)
                    else:
                        pts_p = pts
                    d, ratio = _best_direction(pts_p, t, x, x2)
                    if ratio < best:
                        best, best_info = ratio, {"curve": name, "param": param, "d": d}
                    if best <= eps:
                        break
                if best <= eps:
                    break
            if best <= eps or stage == 1:
                break
            cands = [c for c in _candidate_curves(C, x, x2, pitch=pitch) if c[0] == "grid"]
        worst = min(worst, eps - best)
        if _strict(best, eps):
            return RegularityVerdict("uag", C.name, xbar, eps, r, VIOLATED, eps - best, len(pairs), seed,
                                     {"x": x, "x2": x2, "lhs": best, "rhs": eps, **best_info},
                                     confidence="lower",
                                     note="the direction d is a numerical best fit over candidate curves")
    return RegularityVerdict("uag", C.name, xbar, eps, r, NO_VIOLATION, worst, len(pairs), seed)


# ---------------------------------------------------------------- approximate convexity


def _set_distance_exact(C, z):
    return float(np.linalg.norm(C.project(z)[0] - z))


def check_intrinsic_approx_convexity(C: SetOracle, xbar, eps: float, r: float, samples: int = 64, seed: int = 42,
                                     tgrid: int = 9) -> RegularityVerdict:
    """Search for d((1-t)x + t x', C) > eps t(1-t)|x' - x|."""
    xbar = as_vec(xbar, C.dim)
    rng = np.random.default_rng(seed)
    pairs = [(x, x2) for _, x, x2 in _mirror_pairs(C, xbar, r)] + _random_pairs(C, xbar, r, samples, rng)
    ts = np.linspace(0, 1, tgrid + 2)[1:-1]
    worst = np.inf
    for x, x2 in pairs:
        Z = (1 - ts)[:, None] * x + ts[:, None] * x2
        rhs = eps * ts * (1 - ts) * np.linalg.norm(x2 - x)
        approx = C.distance(Z)
        for i in np.argsort(rhs - approx):
            if approx[i] <= rhs[i] * 0.5 and rhs[i] - approx[i] > 0:
                worst = min(worst, float(rhs[i] - approx[i]))
                break
            lhs = _set_distance_exact(C, Z[i])
            worst = min(worst, float(rhs[i] - lhs))
            if _strict(lhs, float(rhs[i])):
                return RegularityVerdict("intrinsic-approx-convexity", C.name, xbar, eps, r, VIOLATED, float(rhs[i] - lhs),
                                         len(pairs), seed, {"x": x, "x2": x2, "t": float(ts[i]), "lhs": lhs,
                                                            "rhs": float(rhs[i])})
            if lhs <= rhs[i]:
                break
    return RegularityVerdict("intrinsic-approx-convexity", C.name, xbar, eps, r, NO_VIOLATION, worst, len(pairs), seed)


def _feval(f, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.asarray(f(X), dtype=float).reshape(-1)


def function_convexity_sides(f, x, x2, t, eps):
    x, x2 = np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(x2, float))
    z = (1 - t) * x + t * x2
    vals = _feval(f, np.vstack([z, x, x2]))
    return float(vals[0]), float((1 - t) * vals[1] + t * vals[2] + eps * t * (1 - t) * np.linalg.norm(x2 - x))


def check_function_approx_convexity(f, xbar, eps: float, r: float, samples: int = 2000, seed: int = 42,
                                    tgrid: int = 9) -> RegularityVerdict:
    """Search for f((1-t)x + t x') > (1-t)f(x) + t f(x') + eps t(1-t)|x' - x|."""
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    n = xbar.size
    rng = np.random.default_rng(seed)
    ts = np.linspace(0, 1, tgrid + 2)[1:-1]
    # symmetric pairs around x̄ first, then random pairs in the ball
    sym = []
    for j in range(1, 9):
        for i in range(n):
            e = np.zeros(n)
            e[i] = r * 2.0**-j
            sym.append((xbar - e, xbar + e))
    U = rng.standard_normal((2 * samples, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    U *= r * rng.random((2 * samples, 1)) ** (1.0 / n)
    rand = [(xbar + U[2 * i], xbar + U[2 * i + 1]) for i in range(samples)]
    pairs = sym + rand
    X = np.array([a for a, _ in pairs])
    X2 = np.array([b for _, b in pairs])
    fx, fx2 = _feval(f, X), _feval(f, X2)
    nd = np.linalg.norm(X2 - X, axis=1)
    worst = np.inf
    for t in ts:
        fz = _feval(f, (1 - t) * X + t * X2)
        rhs = (1 - t) * fx + t * fx2 + eps * t * (1 - t) * nd
        gap = rhs - fz
        worst = min(worst, float(gap.min()))
        bad = np.where(fz - rhs > STRICT * np.maximum(np.maximum(np.abs(fz), np.abs(rhs)), 1e-300))[0]
        if bad.size:
            j = int(bad[0])
            return RegularityVerdict("function-approx-convexity", str(f), xbar, eps, r, VIOLATED, float(gap[j]),
                                     len(pairs), seed, {"x": X[j], "x2": X2[j], "t": float(t), "lhs": float(fz[j]),
                                                        "rhs": float(rhs[j])})
    return RegularityVerdict("function-approx-convexity", str(f), xbar, eps, r, NO_VIOLATION, worst, len(pairs), seed)


# ---------------------------------------------------------------- prox-regularity


def co_minimal(C: SetOracle, z, cfg: ProjectionConfig = DEFAULT_PROJECTION, factor: float = 1.05):
    """Distinct nearest-point candidates within factor x best distance.

    Two candidates count as distinct when they are more than 10 cluster radii
    apart and the segment joining them leaves C.
    """
    cands = C.candidates(z, cfg)
    if not cands:
        return []
    best = cands[0][0]
    keep = [cands[0]]
    for d, p in cands[1:]:
        if d > factor * best + cfg.cluster:
            break
        distinct = True
        for _, q in keep:
            if np.linalg.norm(p - q) <= 10 * cfg.cluster:
                distinct = False
                break
            if C.contains(0.5 * (p + q), 1e-9):
                distinct = False
                break
        if distinct:
            keep.append((d, p))
    return keep


def probe_prox_regularity(C: SetOracle, xbar, r: float, grid: int = 11, cfg: ProjectionConfig = DEFAULT_PROJECTION,
                          seed: int = 42, extra_points=None) -> RegularityVerdict:
    """Project off-set points of B_r(x̄); a multivalued projection is a violation."""
    xbar = as_vec(xbar, C.dim)
    probes = [as_vec(p, C.dim) for p in (extra_points or [])]
    if C.mirror is not None:
        M, c = C.mirror
        w, V = np.linalg.eigh(0.5 * (M + M.T))
        for axis in V[:, w > 0].T:
            for j in range(1, 9):
                for s in (1.0, -1.0):
                    probes.append(xbar + s * r * 2.0**-j * axis)
    axes = [np.linspace(-r, r, grid) for _ in range(C.dim)]
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, C.dim) + xbar
    probes += [g for g in G if np.linalg.norm(g - xbar) <= r]
    P = np.array(probes)
    off = ~C.members(P, 1e-9)
    checked = 0
    for z in P[off]:
        checked += 1
        near = co_minimal(C, z, cfg)
        if len(near) > 1:
            ds = [d for d, _ in near]
            return RegularityVerdict("prox-regularity", C.name, xbar, None, r, VIOLATED, -(max(ds) - min(ds)), checked, seed,
                                     {"point": z, "nearest": [p for _, p in near], "distances": ds,
                                      "lhs": len(near), "rhs": 1})
    return RegularityVerdict("prox-regularity", C.name, xbar, None, r, NO_VIOLATION, np.inf, checked, seed)


# ---------------------------------------------------------------- Clarke regularity (exact)


def clarke_verdict_catalog(C, x) -> RegularityVerdict:
    """Compare closed-form regular and limiting normal cones at x (planar catalog sets)."""
    if isinstance(C, str):
        C = _catalog(C)
    x = as_vec(x, C.dim)
    if C.exact_normals is None:
        raise ValueError(f"set {C.name!r} has no closed-form normal cones")
    cones = C.exact_normals(x)
    regular = cones.clarke_regular()
    witness = {}
    if not regular:
        for s, e in cones.limiting + cones.regular:
            for th in (s, e, 0.5 * (s + e)):
                v = np.array([np.cos(th), np.sin(th)])
                if cones.contains(v, "limiting") != cones.contains(v, "regular"):
                    witness = {"v": v, "in_limiting": cones.contains(v, "limiting"),
                               "in_regular": cones.contains(v, "regular"), "lhs": 1, "rhs": 0}
                    break
            if witness:
                break
    return RegularityVerdict("clarke-regularity", C.name, x, None, None, NO_VIOLATION if regular else VIOLATED,
                             0.0, 1, 0, witness, note="exact")


# ---------------------------------------------------------------- eps-path search


def _smooth_candidate(t, pts):
    curve = SampledCurve(t, pts, fd_derivative(pts, t), {})
    return curve


def search_eps_path_violation(C: SetOracle, xbar, eps: float, pairs, pitch: float | None = None,
                              seed: int = 42) -> RegularityVerdict:
    """Best achieved deviation over candidate curves for each pair (a heuristic search, not a proof).

    A candidate whose image keeps a corner under refinement cannot be the image
    of a C^1 path with nonvanishing velocity, so its achievable deviation is
    taken as 1 (the velocity must drop to zero at the corner).
    """
    xbar = as_vec(xbar, C.dim)
    results = []
    first_bad = None
    for x, x2 in pairs:
        x, x2 = as_vec(x, C.dim), as_vec(x2, C.dim)
        best, best_name, rows = np.inf, "", []
        for name, t, pts in _candidate_curves(C, x, x2, pitch=pitch):
            curve = _smooth_candidate(t, pts)
            rep = verify_eps_path(curve, C, x, x2, eps, tol=1e-8)
            achieved = rep.achieved
            corner = has_persistent_corner(pts)
            if corner:
                achieved = max(achieved, 1.0)
            if rep.feasibility > 1e-8:
                achieved = np.inf
            rows.append({"curve": name, "achieved": achieved, "raw": rep.achieved, "corner": corner})
            if achieved < best:
                best, best_name = achieved, name
        results.append({"x": x, "x2": x2, "best": best, "curve": best_name, "candidates": rows})
        if first_bad is None and _strict(best, eps):
            first_bad = len(results) - 1
    margin = float(min(eps - r["best"] for r in results)) if results else np.inf
    verdict = VIOLATED if first_bad is not None else NO_VIOLATION
    w = {"pairs": results}
    if first_bad is not None:
        w.update({"lhs": results[first_bad]["best"], "rhs": eps, "x": results[first_bad]["x"],
                  "x2": results[first_bad]["x2"]})
    return RegularityVerdict("eps-path", C.name, xbar, eps, None, verdict, margin, len(results), seed, w,
                             confidence="lower", note="search over candidate curves; not a proof")


# ---------------------------------------------------------------- recomputation and ladders


def recheck(verdict: RegularityVerdict, C=None, f=None) -> bool:
    """Recompute a violation witness from scratch; True when it is a strict violation."""
    if not verdict.violated:
        return False
    w = verdict.witness
    prop = verdict.property
    if prop == "super-regularity":
        if C is not None and C.exact_normals is not None and not C.exact_normals(w["x"]).contains(w["v"]):
            return False
        return _strict(*super_regularity_sides(w["x"], w["x2"], w["v"], verdict.eps))
    if prop == "intrinsic-approx-convexity":
        z = (1 - w["t"]) * np.asarray(w["x"]) + w["t"] * np.asarray(w["x2"])
        lhs = _set_distance_exact(C, z)
        rhs = verdict.eps * w["t"] * (1 - w["t"]) * np.linalg.norm(np.asarray(w["x2"]) - np.asarray(w["x"]))
        return _strict(lhs, rhs)
    if prop == "function-approx-convexity":
        return _strict(*function_convexity_sides(f, w["x"], w["x2"], w["t"], verdict.eps))
    if prop == "prox-regularity":
        return len(co_minimal(C, np.asarray(w["point"]))) > 1
    if prop == "clarke-regularity":
        return not C.exact_normals(verdict.point).clarke_regular()
    if prop == "uag":
        again = check_uag(C, verdict.point, verdict.eps, verdict.radius, pairs=[(w["x"], w["x2"])], seed=verdict.seed)
        return again.violated
    if prop == "eps-path":
        again = search_eps_path_violation(C, verdict.point, verdict.eps, [(w["x"], w["x2"])], seed=verdict.seed)
        return again.violated
    raise ValueError(f"unknown property {prop!r}")


EPS_LADDER = tuple(2.0**-j for j in range(1, 7))
RADIUS_LADDER = tuple(2.0**-j for j in range(2, 10))
PROPERTIES = ("super-regularity", "uag", "intrinsic-approx-convexity", "prox-regularity", "clarke-regularity")


def run_property(C: SetOracle, prop: str, x, eps: float | None, r: float | None, samples: int, seed: int):
    if prop == "super-regularity":
        return check_super_regularity(C, x, eps, r, samples=samples, seed=seed)
    if prop == "uag":
        return check_uag(C, x, eps, r, samples=max(4, samples // 25), seed=seed)
    if prop == "intrinsic-approx-convexity":
        return check_intrinsic_approx_convexity(C, x, eps, r, samples=max(8, samples // 4), seed=seed)
    if prop == "prox-regularity":
        return probe_prox_regularity(C, x, r, seed=seed)
    if prop == "clarke-regularity":
        return clarke_verdict_catalog(C, x)
    raise ValueError(f"unknown property {prop!r}; choose from {', '.join(PROPERTIES)}")


def ladder_cells(prop: str, eps_list, r_list):
    """(eps, r) cells a property is evaluated on."""
    if prop == "clarke-regularity":
        return [(None, None)]
    if prop == "prox-regularity":
        return [(None, r) for r in r_list]
    return [(e, r) for e in eps_list for r in r_list]
