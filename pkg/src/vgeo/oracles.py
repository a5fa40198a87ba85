"""Feasible regions: membership, multistart projection, bounding boxes, sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .bodies import Box, ConvexBody, Orthant, Singleton
from .core import as_vec, fd_jacobian, fd_jacobian_batch
from .expr import ScalarExpr, parse_expr

MEMBER_TOL = 1e-9


class ProjectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProjectionConfig:
    starts: int = 64
    tol: float = 1e-10
    cluster: float = 1e-6
    scan: int = 4096
    seed: int = 42
    max_points: int = 64


DEFAULT_PROJECTION = ProjectionConfig()


class SmoothMap:
    """A map R^n -> R^m evaluated row-wise on (k, n) arrays."""

    def __init__(self, func, n: int, m: int, jac=None, c1: bool = True, name: str = "", exprs=None, identity=False):
        self._func = func
        self.n, self.m = int(n), int(m)
        self._jac = jac
        self.c1 = bool(c1)
        self.name = name
        self.exprs = exprs
        self.is_identity = identity

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        out = np.asarray(self._func(np.atleast_2d(arr)), dtype=float).reshape(-1, self.m)
        return out[0] if single else out

    def jacobian(self, x, h: float | None = None) -> np.ndarray:
        x = as_vec(x, self.n)
        if self._jac is not None:
            return np.asarray(self._jac(x), dtype=float).reshape(self.m, self.n)
        return fd_jacobian(self, x, h)

    def jacobian_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._jac is not None:
            return np.array([self.jacobian(x) for x in X])
        return fd_jacobian_batch(self, X)

    def scaled(self, c: float) -> "SmoothMap":
        jac = None if self._jac is None else (lambda x: c * self._jac(x))
        return SmoothMap(lambda X: c * self._func(X), self.n, self.m, jac, self.c1, f"{c}*{self.name}")

    @classmethod
    def from_exprs(cls, exprs, n: int | None = None) -> "SmoothMap":
        parsed = [e if isinstance(e, ScalarExpr) else parse_expr(e) for e in exprs]
        if n is None:
            n = max(max(p.nvars for p in parsed), 1)

        def func(X):
            return np.column_stack([p(X) for p in parsed])

        return cls(func, n, len(parsed), c1=all(p.claims_c1() for p in parsed),
                   name="(" + ", ".join(str(p) for p in parsed) + ")", exprs=parsed)

    @classmethod
    def identity(cls, n: int) -> "SmoothMap":
        return cls(lambda X: X, n, n, jac=lambda x: np.eye(n), name="id", identity=True)

    @classmethod
    def linear(cls, A, b=None) -> "SmoothMap":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
        return cls(lambda X: X @ A.T + b, A.shape[1], A.shape[0], jac=lambda x: A, name="linear")


def _cluster(cands, cfg: ProjectionConfig, slack: float | None = None):
    """Keep candidates within `slack` of the best distance; merge near-duplicates."""
    if not cands:
        return []
    cands = sorted(cands, key=lambda c: c[0])
    best = cands[0][0]
    slack = cfg.cluster if slack is None else slack
    kept = []
    for d, p in cands:
        if d > best + slack:
            break
        if all(np.linalg.norm(p - q) > cfg.cluster for _, q in kept):
            kept.append((d, p))
        if len(kept) >= cfg.max_points:
            break
    return kept


class SetOracle:
    """Base class. Subclasses implement residual/candidates/distance/snap/sample."""

    kind = "set"
    name = ""
    preimage = None  # optional amenable representation (a Preimage)
    exact_normals = None  # optional callable x -> AngularCone pair (catalog sets)
    mirror = None  # optional reflection (matrix, point) declared by the oracle
    family = None  # optional callable s -> member point, for structured witness search

    def __init__(self, dim: int, bbox):
        self.dim = int(dim)
        lo, hi = bbox
        self.bbox = (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))

    def residual(self, X):
        raise NotImplementedError

    def contains(self, x, tol: float = MEMBER_TOL) -> bool:
        x = as_vec(x, self.dim)
        return bool(self.residual(x[None])[0] <= tol)

    def members(self, X, tol: float = MEMBER_TOL) -> np.ndarray:
        return np.asarray(self.residual(np.atleast_2d(X)) <= tol)

    def candidates(self, x, cfg: ProjectionConfig = DEFAULT_PROJECTION):
        """All local nearest points found, as (distance, point) sorted by distance."""
        raise NotImplementedError

    def project(self, x, cfg: ProjectionConfig = DEFAULT_PROJECTION) -> list:
        x = as_vec(x, self.dim)
        kept = _cluster(self.candidates(x, cfg), cfg)
        if not kept:
            raise ProjectionError("no nearest-point candidate found inside the bounding box")
        return [p for _, p in kept]

    def distance(self, X, resolution: float | None = None, cap: float | None = None) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.array([self.candidates(x)[0][0] for x in X])

    def snap(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.project(x)[0] for x in X])

    def project_local(self, X, hints=None) -> np.ndarray:
        return self.snap(X)

    def sample(self, center, radius: float, count: int, rng) -> np.ndarray:
        """Member points in the closed ball B_radius(center)."""
        center = as_vec(center, self.dim)
        out = []
        for _ in range(8):
            dirs = rng.standard_normal((count, self.dim))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            Y = center + dirs * radius * rng.random((count, 1)) ** (1.0 / self.dim)
            P = self.snap(Y)
            P = P[np.linalg.norm(P - center, axis=1) <= radius]
            out.extend(P)
            if len(out) >= count:
                break
        return np.array(out[:count]).reshape(-1, self.dim)

    def reflect(self, X):
        M, p = self.mirror
        return p + (np.asarray(X, dtype=float) - p) @ M.T

    def describe(self) -> dict:
        return {"kind": self.kind, "name": self.name, "dim": self.dim}


def _local_minima(vals, periodic=False):
    idx = []
    n = vals.size
    for i in range(n):
        left = vals[i - 1] if i > 0 or periodic else np.inf
        right = vals[(i + 1) % n] if i < n - 1 or periodic else np.inf
        if vals[i] <= left and vals[i] <= right:
            idx.append(i)
    return idx


class _Branch:
    """A parametrised curve piece s -> p(s), s in [a, b], p vectorised over s."""

    def __init__(self, func, interval, implicit=None, periodic=False):
        self.func = func
        self.a, self.b = map(float, interval)
        self.implicit = implicit
        self.periodic = periodic

    def points(self, s):
        return np.asarray(self.func(np.asarray(s, dtype=float)), dtype=float)

    def candidates(self, x, cfg):
        s = np.linspace(self.a, self.b, cfg.scan + 1)
        P = self.points(s)
        d2 = np.sum((P - x) ** 2, axis=1)
        if self.periodic:
            d2 = d2[:-1]
            s = s[:-1]
        mins = _local_minima(d2, self.periodic)
        floor = d2.min()
        out = []
        for i in mins:
            if d2[i] > floor * 1.25 + 1e-8:
                continue
            lo = s[i - 1] if i > 0 else (s[-1] - (self.b - self.a) if self.periodic else s[0])
            hi = s[i + 1] if i < s.size - 1 else (s[0] + (self.b - self.a) if self.periodic else s[-1])

            def obj(t):
                return float(np.sum((self.points(np.array([t]))[0] - x) ** 2))

            res = minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
            t = float(res.x) if res.fun <= d2[i] else float(s[i])
            t = float(self.polish(x[None], np.array([t]), np.array([lo]), np.array([hi]))[0])
            p = self.points(np.array([t]))[0]
            out.append((float(np.linalg.norm(p - x)), p, t))
        return out

    def dense(self, spacing):
        P0 = self.points(np.linspace(self.a, self.b, 257))
        length = np.sum(np.linalg.norm(np.diff(P0, axis=0), axis=1))
        count = int(min(max(length / max(spacing, 1e-12), 256), 2_000_000)) + 1
        s = np.linspace(self.a, self.b, count)
        return s, self.points(s)

    def golden(self, X, lo, hi, iters=60):
        """Vectorised golden-section search of |p(s) - x| over per-row brackets."""
        g = (np.sqrt(5) - 1) / 2
        a, b = lo.copy(), hi.copy()
        c = b - g * (b - a)
        d = a + g * (b - a)

        def f(t):
            return np.sum((self.points(t) - X) ** 2, axis=1)

        fc, fd = f(c), f(d)
        for _ in range(iters):
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            new_c = b - g * (b - a)
            new_d = a + g * (b - a)
            c_next = np.where(left, new_c, d)
            d_next = np.where(left, c, new_d)
            fc_next = np.where(left, f(new_c), fd)
            fd_next = np.where(left, fc, f(new_d))
            c, d, fc, fd = c_next, d_next, fc_next, fd_next
            if np.all(b - a < 1e-14 * (1 + np.abs(a))):
                break
        return self.polish(X, 0.5 * (a + b), lo, hi)

    def polish(self, X, s, lo, hi, iters=4):
        """Newton on <p(s) - x, p'(s)> = 0; squared distance alone only resolves s to ~1e-8."""
        h = 1e-6 * max(1.0, abs(self.b - self.a))

        def g(t):
            dp = (self.points(t + h) - self.points(t - h)) / (2 * h)
            return np.sum((self.points(t) - X) * dp, axis=1)

        for _ in range(iters):
            gp = (g(s + h) - g(s - h)) / (2 * h)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(gp > 0, g(s) / gp, 0.0)
            cand = s - step
            ok = np.isfinite(cand) & (cand >= lo) & (cand <= hi) & (np.abs(step) <= 1e-3 * max(1.0, abs(self.b - self.a)))
            s = np.where(ok, cand, s)
        return s


class CurveUnion(SetOracle):
    """Union of parametric branches."""

    kind = "curve-union"

    def __init__(self, branches, bbox, name: str = ""):
        self.branches = [b if isinstance(b, _Branch) else _Branch(*b) for b in branches]
        dim = self.branches[0].points(np.array([self.branches[0].a])).shape[1]
        super().__init__(dim, bbox)
        self.name = name
        self._trees = {}

    def _tree(self, spacing):
        key = round(np.log2(max(spacing, 1e-12)) * 4)
        if key not in self._trees:
            pts, owner, params = [], [], []
            for i, br in enumerate(self.branches):
                s, P = br.dense(2.0 ** (key / 4))
                pts.append(P)
                owner.append(np.full(s.size, i))
                params.append(s)
            self._trees[key] = (cKDTree(np.vstack(pts)), np.concatenate(owner), np.concatenate(params), 2.0 ** (key / 4))
        return self._trees[key]

    def residual(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if all(b.implicit is not None for b in self.branches):
            return np.min(np.stack([np.abs(b.implicit(X)) for b in self.branches]), axis=0)
        # sampled distance alone is only accurate to the sample spacing; refine the nearest parameter
        return np.linalg.norm(X - self.snap(X), axis=1)

    def candidates(self, x, cfg=DEFAULT_PROJECTION):
        x = as_vec(x, self.dim)
        out = []
        for br in self.branches:
            out.extend((d, p) for d, p, _ in br.candidates(x, cfg))
        return sorted(out, key=lambda c: c[0])

    def distance(self, X, resolution=None, cap=None):
        span = float(np.max(self.bbox[1] - self.bbox[0]))
        spacing = resolution / 4 if resolution else span / 20000
        tree = self._tree(spacing)[0]
        d = tree.query(np.atleast_2d(X), distance_upper_bound=np.inf if cap is None else cap)[0]
        return np.minimum(d, np.finfo(float).max)

    def _nearest_params(self, X, spacing):
        tree, owner, params, h = self._tree(spacing)
        _, idx = tree.query(X)
        return owner[idx], params[idx], h

    def snap(self, X, spacing=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        span = float(np.max(self.bbox[1] - self.bbox[0]))
        spacing = spacing or span / 20000
        own, s0, h = self._nearest_params(X, spacing)
        out = np.empty_like(X)
        for i, br in enumerate(self.branches):
            mask = own == i
            if not np.any(mask):
                continue
            step = (br.b - br.a) / max((br.b - br.a) / max(h, 1e-12), 1) * 2
            lo = np.maximum(s0[mask] - 2 * step, br.a) if not br.periodic else s0[mask] - 2 * step
            hi = np.minimum(s0[mask] + 2 * step, br.b) if not br.periodic else s0[mask] + 2 * step
            out[mask] = br.points(br.golden(X[mask], lo, hi))
        return out

    def project_local(self, X, hints=None):
        return self.snap(X)

    def sample(self, center, radius, count, rng):
        center = as_vec(center, self.dim)
        pts = []
        for br in self.branches:
            _, P = br.dense(radius / 2000 if radius > 0 else 1e-4)
            pts.append(P[np.linalg.norm(P - center, axis=1) <= radius])
        P = np.vstack(pts) if pts else np.zeros((0, self.dim))
        if P.shape[0] == 0:
            return P
        idx = rng.choice(P.shape[0], size=min(count, P.shape[0]), replace=False)
        return P[idx]


class FunctionGraph(SetOracle):
    """gph f for f: R^(n-1) -> R given as a vectorised callable or ScalarExpr."""

    kind = "graph"

    def __init__(self, f, dim: int = 2, bbox=None, name: str = "", c1: bool | None = None):
        self.f = parse_expr(f) if isinstance(f, str) else f
        if bbox is None:
            bbox = (np.full(dim, -2.0), np.full(dim, 2.0))
        super().__init__(dim, bbox)
        self.name = name
        self.c1 = self.f.claims_c1() if (c1 is None and isinstance(self.f, ScalarExpr)) else bool(c1)
        if dim == 2:
            lo, hi = self.bbox[0][0], self.bbox[1][0]
            self._curve = CurveUnion([_Branch(self._param, (lo, hi), implicit=self._graph_residual)], self.bbox)
        else:
            self._curve = None

    def fvals(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return np.asarray(self.f(U), dtype=float).reshape(-1)

    def _param(self, s):
        s = np.atleast_1d(s)
        return np.column_stack([s, self.fvals(s[:, None])])

    def _graph_residual(self, X):
        X = np.atleast_2d(X)
        return np.abs(X[:, -1] - self.fvals(X[:, :-1]))

    def residual(self, X):
        return self._graph_residual(X)

    def _candidates_nd(self, x, cfg):
        rng = np.random.default_rng(cfg.seed)
        lo, hi = self.bbox[0][:-1], self.bbox[1][:-1]
        starts = np.vstack([x[:-1], lo + (hi - lo) * rng.random((cfg.starts, self.dim - 1))])
        out = []
        for u0 in starts:
            res = minimize(lambda u: np.sum((np.append(u, self.fvals(u)[0]) - x) ** 2), u0, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
            p = np.append(res.x, self.fvals(res.x)[0])
            out.append((float(np.linalg.norm(p - x)), p))
        return sorted(out, key=lambda c: c[0])

    def candidates(self, x, cfg=DEFAULT_PROJECTION):
        x = as_vec(x, self.dim)
        if self._curve is not None:
            return self._curve.candidates(x, cfg)
        return self._candidates_nd(x, cfg)

    def distance(self, X, resolution=None, cap=None):
        if self._curve is not None:
            return self._curve.distance(X, resolution, cap)
        return super().distance(X)

    def snap(self, X):
        if self._curve is not None:
            return self._curve.snap(X)
        return super().snap(X)

    def sample(self, center, radius, count, rng):
        if self._curve is not None:
            return self._curve.sample(center, radius, count, rng)
        return super().sample(center, radius, count, rng)

    def as_preimage(self) -> "Preimage":
        n = self.dim

        def F(X):
            return (self.fvals(X[:, :-1]) - X[:, -1])[:, None]

        fmap = SmoothMap(F, n, 1, c1=self.c1, name=f"f(x) - x{n}")
        return Preimage(fmap, Singleton([0.0]), bbox=self.bbox, name=self.name, projector=self)


class FunctionEpigraph(FunctionGraph):
    kind = "epigraph"

    def residual(self, X):
        X = np.atleast_2d(X)
        return np.maximum(self.fvals(X[:, :-1]) - X[:, -1], 0.0)

    def candidates(self, x, cfg=DEFAULT_PROJECTION):
        x = as_vec(x, self.dim)
        if self.residual(x[None])[0] <= 0:
            return [(0.0, x.copy())]
        return super().candidates(x, cfg)

    def distance(self, X, resolution=None, cap=None):
        X = np.atleast_2d(X)
        inside = self.residual(X) <= 0
        d = np.zeros(X.shape[0])
        if np.any(~inside):
            d[~inside] = super().distance(X[~inside], resolution, cap)
        return d

    def snap(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = X.copy()
        outside = self.residual(X) > 0
        if np.any(outside):
            out[outside] = super().snap(X[outside])
        return out

    def sample(self, center, radius, count, rng):
        center = as_vec(center, self.dim)
        edge = super().sample(center, radius, count // 2 + 1, rng)
        Y = center + (rng.random((4 * count, self.dim)) * 2 - 1) * radius
        Y = Y[(self.residual(Y) <= 0) & (np.linalg.norm(Y - center, axis=1) <= radius)]
        return np.vstack([edge, Y[: count - edge.shape[0]]])

    def as_preimage(self) -> "Preimage":
        rep = super().as_preimage()
        rep.D = Orthant(1, "nonpositive")
        rep.projector = self
        return rep


class Preimage(SetOracle):
    """C = {x in V : F(x) in D} with V the ball (center, radius) when given."""

    kind = "preimage"

    def __init__(self, F: SmoothMap, D: ConvexBody, center=None, radius=None, bbox=None, name: str = "",
                 projector: SetOracle | None = None, boundary: SetOracle | None = None):
        if F.m != D.dim:
            raise ValueError(f"map codomain dimension {F.m} does not match body dimension {D.dim}")
        if bbox is None:
            c = np.zeros(F.n) if center is None else np.asarray(center, dtype=float)
            r = 2.0 if radius is None else float(radius)
            bbox = (c - r, c + r)
        super().__init__(F.n, bbox)
        self.F = F
        self.D = D
        self.center = None if center is None else np.asarray(center, dtype=float)
        self.radius = None if radius is None else float(radius)
        self.name = name
        self.projector = projector
        self.boundary = boundary

    @property
    def preimage(self):
        return self

    def in_domain(self, X):
        X = np.atleast_2d(X)
        if self.center is None or self.radius is None:
            return np.ones(X.shape[0], dtype=bool)
        return np.linalg.norm(X - self.center, axis=1) <= self.radius

    def residual(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        FX = self.F(X)
        r = np.linalg.norm(FX - self.D.project(FX), axis=1)
        return np.where(self.in_domain(X), r, np.inf)

    def margin(self, X):
        """Interior margin of F(x) in D (positive means F(x) in int D)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.D.interior_margin(self.F(X)), dtype=float).reshape(-1)

    def candidates(self, x, cfg=DEFAULT_PROJECTION):
        x = as_vec(x, self.dim)
        if self.F.is_identity:
            p = self.D.project(x)
            return [(float(np.linalg.norm(p - x)), p)]
        if self.projector is not None:
            return self.projector.candidates(x, cfg)
        if self.residual(x[None])[0] <= 0:
            return [(0.0, x.copy())]
        if self.boundary is not None:
            return self.boundary.candidates(x, cfg)
        return self._generic_candidates(x, cfg)

    def _restore(self, y, iters=30):
        """Gauss-Newton pull back onto {F in D}."""
        for _ in range(iters):
            Fy = self.F(y)
            r = Fy - self.D.project(Fy)
            if np.linalg.norm(r) <= 1e-13:
                break
            y = y - np.linalg.pinv(self.F.jacobian(y)) @ r
        return y

    def _generic_candidates(self, x, cfg):
        gi, ge = self.D.constraints()
        cons = []
        if gi is not None:
            cons.append({"type": "ineq", "fun": lambda y: np.atleast_1d(gi(self.F(y)))})
        if ge is not None:
            cons.append({"type": "eq", "fun": lambda y: np.atleast_1d(ge(self.F(y)))})
        if self.center is not None and self.radius is not None:
            cons.append({"type": "ineq", "fun": lambda y: np.atleast_1d(self.radius**2 - np.sum((y - self.center) ** 2))})
        lo, hi = self.bbox
        starts = lo + (hi - lo) * qmc.LatinHypercube(d=self.dim, seed=cfg.seed).random(cfg.starts)
        starts = np.vstack([x, starts])
        out = []
        for y0 in starts:
            res = minimize(lambda y: np.sum((y - x) ** 2), y0, jac=lambda y: 2 * (y - x), constraints=cons,
                           method="SLSQP", options={"ftol": 1e-14, "maxiter": 300})
            y = self._restore(res.x)
            if self.residual(y[None])[0] <= MEMBER_TOL and np.all(y >= lo - 1e-9) and np.all(y <= hi + 1e-9):
                out.append((float(np.linalg.norm(y - x)), y))
        return sorted(out, key=lambda c: c[0])

    def distance(self, X, resolution=None, cap=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.F.is_identity:
            return self.D.distance(X)
        if self.projector is not None:
            return self.projector.distance(X, resolution, cap)
        res = self.residual(X)
        out = np.zeros(X.shape[0])
        outside = res > 0
        if self.boundary is not None and np.any(outside):
            out[outside] = self.boundary.distance(X[outside], resolution, cap)
            return out
        if np.any(outside):
            J = self.F.jacobian_batch(X[outside])
            scale = np.linalg.norm(J, axis=(1, 2))
            out[outside] = res[outside] / np.maximum(scale, 1e-12)
        return out

    def snap(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.F.is_identity:
            return self.D.project(X)
        if self.projector is not None:
            return self.projector.snap(X)
        out = X.copy()
        outside = self.residual(X) > 0
        if self.boundary is not None and np.any(outside):
            out[outside] = self.boundary.snap(X[outside])
            return out
        for i in np.where(outside)[0]:
            out[i] = self._restore(X[i])
        return out

    def sample(self, center, radius, count, rng):
        if self.projector is not None:
            return self.projector.sample(center, radius, count, rng)
        center = as_vec(center, self.dim)
        interior = center + (rng.random((6 * count, self.dim)) * 2 - 1) * radius
        interior = interior[(np.linalg.norm(interior - center, axis=1) <= radius) & self.members(interior)]
        edge = super().sample(center, radius, count // 2 + 1, rng)
        return np.vstack([edge, interior[: count - edge.shape[0]]])


class GridCloud(SetOracle):
    """A finite point cloud; membership tolerance is the grid pitch."""

    kind = "grid-cloud"

    def __init__(self, points, pitch: float, name: str = ""):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        super().__init__(pts.shape[1], (pts.min(axis=0), pts.max(axis=0)))
        self.points = pts
        self.pitch = float(pitch)
        self.tree = cKDTree(pts)
        self.name = name

    def residual(self, X):
        d = self.tree.query(np.atleast_2d(X))[0]
        return np.where(d <= self.pitch, 0.0, d)

    def candidates(self, x, cfg=DEFAULT_PROJECTION):
        x = as_vec(x, self.dim)
        d, idx = self.tree.query(x, k=min(cfg.max_points, len(self.points)))
        return [(float(a), self.points[i].copy()) for a, i in zip(np.atleast_1d(d), np.atleast_1d(idx))]

    def distance(self, X, resolution=None, cap=None):
        return self.tree.query(np.atleast_2d(X))[0]

    def snap(self, X):
        return self.points[self.tree.query(np.atleast_2d(X))[1]]
