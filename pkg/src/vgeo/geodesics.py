"""Midpoint-projection refinement, a grid-graph intrinsic distance oracle and curvature fits."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .core import SampledCurve, as_vec, curve_length, fd_derivative, polyline_length
from .oracles import DEFAULT_PROJECTION, ProjectionConfig, SetOracle
from .paths import verify_eps_path


class GeodesicError(RuntimeError):
    pass


class MultivaluedProjection(GeodesicError):
    def __init__(self, message, point=None, nearest=None):
        super().__init__(message)
        self.point = point
        self.nearest = nearest


@dataclass
class RefinementTrace:
    levels: list = field(default_factory=list)  # node arrays per level
    lengths: list = field(default_factory=list)
    displacement: list = field(default_factory=list)  # max |u_k - m_k| per level (level >= 1)
    converged: bool = False
    stopped_early: bool = False

    def decay_ratios(self, lo: int = 4, hi: int = 12) -> np.ndarray:
        d = np.asarray(self.displacement, dtype=float)
        # displacement[i] belongs to level i + 1
        seg = d[lo - 1 : hi]
        return seg[1:] / seg[:-1]

    def to_json(self) -> dict:
        return {"lengths": [float(v) for v in self.lengths], "displacement": [float(v) for v in self.displacement],
                "converged": self.converged, "stopped_early": self.stopped_early,
                "nodes": [int(len(v)) for v in self.levels]}


def _project_checked(C: SetOracle, M, cfg: ProjectionConfig):
    out = np.empty_like(M)
    for i, m in enumerate(M):
        pts = C.project(m, cfg)
        if len(pts) > 1:
            spread = max(np.linalg.norm(a - b) for a in pts for b in pts)
            if spread > 10 * cfg.cluster:
                raise MultivaluedProjection(f"projection of {m.tolist()} is multivalued", m, pts)
        out[i] = pts[0]
    return out


def averaging_map(C: SetOracle, x, x2, levels: int = 14, cfg: ProjectionConfig = DEFAULT_PROJECTION,
                  checked_levels: int = 3, stop: float = 1e-10, keep_levels: bool = True):
    """Insert the projection of every consecutive midpoint, level by level."""
    x, x2 = as_vec(x, C.dim), as_vec(x2, C.dim)
    nodes = np.vstack([x, x2])
    trace = RefinementTrace()
    trace.levels.append(nodes.copy())
    trace.lengths.append(polyline_length(nodes))
    for level in range(1, levels + 1):
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        if level <= checked_levels:
            proj = _project_checked(C, mids, cfg)
        else:
            proj = C.project_local(mids)
        disp = float(np.max(np.linalg.norm(proj - mids, axis=1)))
        merged = np.empty((2 * nodes.shape[0] - 1, C.dim))
        merged[0::2] = nodes
        merged[1::2] = proj
        nodes = merged
        if keep_levels:
            trace.levels.append(nodes.copy())
        trace.lengths.append(polyline_length(nodes))
        trace.displacement.append(disp)
        # a single quiet level can be a dyadic coincidence; require two, past level 2
        if level >= 3 and disp < stop and trace.displacement[-2] < stop:
            trace.stopped_early = level < levels
            break
    d = np.asarray(trace.displacement)
    L = np.asarray(trace.lengths)
    nondecreasing = bool(np.all(np.diff(L) >= -1e-12 * max(1.0, L[-1])))
    decaying = d.size < 2 or d[-1] <= max(0.5 * d.max(), stop)
    if d.size >= 4 and d[-1] > 0.5 * d.max() and d[-1] > 1e-6 * max(L[-1], 1e-300):
        raise GeodesicError("node displacement does not decay; the refinement is not converging")
    trace.converged = nondecreasing and decaying
    grid = np.linspace(0.0, 1.0, nodes.shape[0])
    if nodes.shape[0] < 3:
        nodes = np.vstack([nodes[0], 0.5 * (nodes[0] + nodes[1]), nodes[1]])
        grid = np.linspace(0.0, 1.0, 3)
    curve = SampledCurve(grid, nodes, fd_derivative(nodes, grid), {"route": "averaging", "levels": len(trace.lengths) - 1})
    return curve, trace


def second_difference_bound(curve: SampledCurve) -> float:
    """max |γ(t) - 2γ(t+h) + γ(t+2h)| / h^2 on the dyadic grid (a smoothness diagnostic)."""
    P = curve.points
    if P.shape[0] < 3:
        return 0.0
    h = curve.grid[1] - curve.grid[0]
    return float(np.max(np.linalg.norm(P[:-2] - 2 * P[1:-1] + P[2:], axis=1)) / h**2)


# ---------------------------------------------------------------- grid oracle


@dataclass
class IntrinsicDistance:
    p: np.ndarray
    q: np.ndarray
    estimate: float
    pitch: float
    polyline: np.ndarray
    cells: int = 0
    note: str = "grid-graph estimate; overestimates by O(pitch) per unit length"

    def to_json(self) -> dict:
        return {"p": self.p.tolist(), "q": self.q.tolist(), "estimate": float(self.estimate), "pitch": self.pitch,
                "cells": self.cells, "note": self.note}


def _offsets(n: int):
    if n <= 3:
        offs = [o for o in itertools.product((-1, 0, 1), repeat=n) if any(o)]
    else:
        offs = [tuple(int(i == j) * s for j in range(n)) for i in range(n) for s in (1, -1)]
        offs += [tuple(1 if j in (a, b) else 0 for j in range(n)) for a in range(n) for b in range(a + 1, n)]
    # keep one of each +-pair; the graph is undirected
    half = []
    for o in offs:
        if tuple(-v for v in o) not in half:
            half.append(o)
    return np.array(half)


def _grid_path(C, p, q, pitch, lo, hi, strict=True):
    n = C.dim
    shape = np.maximum(np.ceil((hi - lo) / pitch).astype(int), 1)
    if np.prod(shape.astype(float)) > 2.5e7:
        raise GeodesicError("grid too large; increase the pitch or shrink the box")
    axes = [lo[i] + pitch * (np.arange(shape[i]) + 0.5) for i in range(n)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    tol = pitch * np.sqrt(n) / 2
    member = C.distance(centers, resolution=pitch / 4, cap=2 * tol) <= tol
    ids = -np.ones(centers.shape[0], dtype=np.int64)
    ids[member] = np.arange(member.sum())
    grid_ids = ids.reshape(tuple(shape))
    snapped = C.snap(centers[member]) if strict else None
    rows, cols, w = [], [], []
    for off in _offsets(n):
        src = tuple(slice(max(0, -o), s - max(0, o)) for o, s in zip(off, shape))
        dst = tuple(slice(max(0, o), s - max(0, -o)) for o, s in zip(off, shape))
        a, b = grid_ids[src].ravel(), grid_ids[dst].ravel()
        ok = (a >= 0) & (b >= 0)
        if snapped is not None and ok.any():
            # only join cells whose nearest set points are joined through C
            ia, ib = a[ok], b[ok]
            mid = 0.5 * (snapped[ia] + snapped[ib])
            gap = C.distance(mid, resolution=pitch / 4, cap=tol)
            chord = np.linalg.norm(snapped[ia] - snapped[ib], axis=1)
            keep = (gap <= tol / 4) | (gap <= 0.35 * chord)
            ok[np.where(ok)[0][~keep]] = False
        rows.append(a[ok])
        cols.append(b[ok])
        w.append(np.full(ok.sum(), pitch * np.linalg.norm(off)))
    pts = centers[member]
    k = pts.shape[0]
    link = np.sqrt(n) * pitch
    for idx, end in ((k, p), (k + 1, q)):
        dd = np.linalg.norm(pts - end, axis=1)
        near = np.where(dd <= link)[0]
        rows.append(np.full(near.size, idx))
        cols.append(near)
        w.append(np.maximum(dd[near], 1e-300))
    if np.linalg.norm(p - q) <= link:
        rows.append(np.array([k]))
        cols.append(np.array([k + 1]))
        w.append(np.array([max(np.linalg.norm(p - q), 1e-300)]))
    G = coo_matrix((np.concatenate(w), (np.concatenate(rows), np.concatenate(cols))), shape=(k + 2, k + 2)).tocsr()
    if G[k].nnz == 0 and G[:, k].nnz == 0 or G[k + 1].nnz == 0 and G[:, k + 1].nnz == 0:
        raise GeodesicError("an endpoint is not covered by any member cell")
    dist, pred = dijkstra(G, directed=False, indices=k, return_predecessors=True)
    if not np.isfinite(dist[k + 1]):
        return np.inf, None, k
    path = [k + 1]
    while path[-1] != k:
        path.append(pred[path[-1]])
    path = path[::-1]
    allpts = np.vstack([pts, p, q])
    return float(dist[k + 1]), allpts[path], k


def _string_pull(C, poly, tol, pitch):
    """Greedy shortcut of a polyline through segments that stay within tol of C."""

    def visible(a, b):
        m = max(int(np.ceil(np.linalg.norm(b - a) / (pitch / 2))), 1)
        s = np.linspace(0, 1, m + 1)[:, None]
        return bool(np.all(C.distance(a + s * (b - a), resolution=pitch / 4, cap=2 * tol) <= tol))

    out = [poly[0]]
    i, last = 0, len(poly) - 1
    while i < last:
        step, j = 1, i + 1
        while i + 2 * step <= last and visible(poly[i], poly[i + 2 * step]):
            step *= 2
        lo, hi = i + step, min(i + 2 * step, last)
        while lo < hi:  # largest visible index in (lo, hi]
            mid = (lo + hi + 1) // 2
            if visible(poly[i], poly[mid]):
                lo = mid
            else:
                hi = mid - 1
        j = max(lo, i + 1)
        out.append(poly[j])
        i = j
    return np.array(out)


def intrinsic_distance_grid(C: SetOracle, p, q, pitch: float, local: bool = True, pull: bool = True,
                            strict: bool = True) -> IntrinsicDistance:
    """Shortest path through member grid cells (3^n - 1 neighbourhood), then string pulling.

    With strict links two cells are not joined when the midpoint of their nearest
    set points is far from C, both absolutely (tol/4) and relative to the chord
    between them, so nearly touching branches are not merged while corners are kept.
    """
    p, q = as_vec(p, C.dim), as_vec(q, C.dim)
    blo, bhi = C.bbox
    if not (np.all(np.isfinite(blo)) and np.all(np.isfinite(bhi))):
        raise GeodesicError("the set's bounding box is not finite")
    tol = pitch * np.sqrt(C.dim) / 2
    for end in (p, q):
        if C.distance(end[None], resolution=pitch / 4)[0] > tol:
            raise GeodesicError(f"endpoint {end.tolist()} is not a member at the grid resolution")
    span = max(np.linalg.norm(p - q), 4 * pitch)
    margin = span if local else np.inf
    while True:
        lo = np.maximum(np.minimum(p, q) - margin, blo)
        hi = np.minimum(np.maximum(p, q) + margin, bhi)
        full = np.all(lo <= blo) and np.all(hi >= bhi)
        est, poly, cells = _grid_path(C, p, q, pitch, lo, hi, strict)
        if np.isfinite(est) or full:
            break
        margin *= 2
    if poly is None:
        return IntrinsicDistance(p, q, np.inf, pitch, np.zeros((0, C.dim)), cells, "disconnected at this pitch")
    if pull and poly.shape[0] > 2:
        poly = _string_pull(C, poly, tol, pitch)
    est = max(polyline_length(poly), float(np.linalg.norm(p - q)))
    return IntrinsicDistance(p, q, est, pitch, poly, cells)


# ---------------------------------------------------------------- verification and curvature


def verify_averaging_map(curve: SampledCurve, C: SetOracle, dist=None, pairs=((0.0, 0.5), (0.5, 1.0)),
                         eps: float | None = None, pitch: float | None = None) -> dict:
    """Check d_C(γ(t1), γ(t2)) = |t1 - t2| d_C(x, x') with an intrinsic-distance oracle."""
    L = curve_length(curve)
    if dist is None:
        span = float(np.max(curve.points.max(axis=0) - curve.points.min(axis=0)))
        pitch = pitch or max(span / 200, 1e-4)

        def dist(a, b):
            return intrinsic_distance_grid(C, a, b, pitch).estimate

    total = dist(curve.start, curve.end)
    rows = []
    ok = True
    tol_abs = 3 * (pitch or 0.0)
    for t1, t2 in pairs:
        i1 = int(np.argmin(np.abs(curve.grid - t1)))
        i2 = int(np.argmin(np.abs(curve.grid - t2)))
        a, b = sorted((i1, i2))
        sub = polyline_length(curve.points[a : b + 1])
        est = dist(curve.points[i1], curve.points[i2])
        expect = abs(t1 - t2) * total
        tol = tol_abs + 0.02 * expect
        good = abs(est - expect) <= tol
        ok &= good
        rows.append({"t1": t1, "t2": t2, "oracle": est, "expected": expect, "sublength": sub,
                     "sublength_expected": abs(t1 - t2) * L, "tol": tol, "ok": bool(good)})
    report = {"length": L, "oracle_total": total, "pairs": rows, "proportional": bool(ok)}
    if eps is not None:
        report["eps_path"] = verify_eps_path(curve, C, curve.start, curve.end, eps).to_json()
    return report


@dataclass
class SigmaFit:
    radius: float
    sigma: float
    d: np.ndarray
    defect: np.ndarray  # d_C - d
    max_violation: float
    margin: float = 0.1
    cross_check: list = field(default_factory=list)
    endpoints: list = field(default_factory=list)

    def refit(self) -> float:
        return fit_sigma_from_samples(self.d, self.defect)

    def to_json(self) -> dict:
        return {"radius": self.radius, "sigma": self.sigma, "max_violation": self.max_violation,
                "margin": self.margin, "pairs": [[float(a), float(b)] for a, b in zip(self.d, self.defect)],
                "cross_check": self.cross_check}


def fit_sigma_from_samples(d, defect) -> float:
    d, defect = np.asarray(d, dtype=float), np.asarray(defect, dtype=float)
    den = float(np.sum(d**6))
    return max(float(np.sum(d**3 * defect)) / den, 0.0) if den > 0 else 0.0


def fit_sigma(C: SetOracle, xbar, r: float, pairs: int = 40, seed: int = 42, pitch: float | None = None,
              levels: int = 12, cross_fraction: float = 0.1, margin: float = 0.1) -> SigmaFit:
    """Least-squares σ in d_C - d = σ d^3 over member pairs in B_r(x̄), d_C from averaging maps."""
    xbar = as_vec(xbar, C.dim)
    rng = np.random.default_rng(seed)
    pitch = pitch or r / 100
    P = C.sample(xbar, r, 2 * pairs, rng)
    ds, defects, used, checks = [], [], [], []
    for i in range(0, P.shape[0] - 1, 2):
        a, b = P[i], P[i + 1]
        d = float(np.linalg.norm(a - b))
        if d < 10 * pitch:
            continue
        curve, _ = averaging_map(C, a, b, levels=levels)
        dc = curve_length(curve)
        ds.append(d)
        defects.append(dc - d)
        used.append((a, b, dc))
    ds, defects = np.array(ds), np.array(defects)
    if ds.size == 0:
        raise GeodesicError("no sample pair is long enough relative to the pitch")
    sigma = fit_sigma_from_samples(ds, defects)
    ncheck = max(1, int(round(cross_fraction * ds.size)))
    for a, b, dc in used[:ncheck]:
        g = intrinsic_distance_grid(C, a, b, pitch).estimate
        checks.append({"d": float(np.linalg.norm(a - b)), "averaging": dc, "grid": g})
    viol = float(np.max(defects - sigma * (1 + margin) * ds**3))
    return SigmaFit(r, sigma, ds, defects, viol, margin, checks, [(a, b) for a, b, _ in used])
