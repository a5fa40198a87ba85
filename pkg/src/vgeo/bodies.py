"""Closed convex bodies D with exact projections and variational data.

Every projection accepts one point (m,) or a batch (k, m).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import null_space, orth
from scipy.optimize import minimize


class ConvexBody:
    dim: int
    kind: str = "body"

    def project(self, y):
        raise NotImplementedError

    def distance(self, y):
        y = np.asarray(y, dtype=float)
        return np.linalg.norm(y - self.project(y), axis=-1)

    def contains(self, y, tol: float = 1e-9) -> bool:
        return bool(self.distance(y) <= tol)

    def affine_hull(self) -> tuple[np.ndarray, np.ndarray]:
        """(point, orthonormal basis (m, k)) of aff(D)."""
        raise NotImplementedError

    def relative_margin(self, y):
        """Radius of the largest relative ball of aff(D) around y inside D (negative outside)."""
        raise NotImplementedError

    def interior_margin(self, y):
        """Radius of the largest full-dimensional ball around y inside D; -dist outside."""
        y = np.asarray(y, dtype=float)
        d = self.distance(y)
        if self.has_interior():
            inside = self.relative_margin(y)
            return np.where(d > 0, -d, inside)
        return np.where(d > 0, -d, 0.0)

    def has_interior(self) -> bool:
        return self.affine_hull()[1].shape[1] == self.dim

    def project_tangent(self, y, u):
        """Projection of u onto the tangent cone T_D(y) (y assumed in D)."""
        raise NotImplementedError

    def tangent_distance(self, y, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(np.linalg.norm(u - self.project_tangent(y, u)))

    def in_normal_cone(self, y, v, tol: float = 1e-9) -> bool:
        """v ∈ N_D(y)  iff  P_D(y + v) = y (scaled to unit length)."""
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v)
        if nv == 0:
            return True
        y = np.asarray(y, dtype=float)
        return bool(np.linalg.norm(self.project(y + v / nv) - y) <= tol)

    def constraints(self):
        """Smooth description (ineq(z) >= 0, eq(z) = 0) for local solvers."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def _full_hull(m):
    return np.zeros(m), np.eye(m)


class Ball(ConvexBody):
    kind = "ball"

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")
        self.dim = self.center.size

    def project(self, y):
        y = np.asarray(y, dtype=float)
        d = y - self.center
        n = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(n > self.radius, self.radius / np.where(n > 0, n, 1.0), 1.0)
        return self.center + d * scale

    def affine_hull(self):
        if self.radius == 0:
            return self.center.copy(), np.zeros((self.dim, 0))
        return self.center.copy(), np.eye(self.dim)

    def relative_margin(self, y):
        return self.radius - np.linalg.norm(np.asarray(y, dtype=float) - self.center, axis=-1)

    def project_tangent(self, y, u):
        y, u = np.asarray(y, dtype=float), np.asarray(u, dtype=float)
        d = y - self.center
        nd = np.linalg.norm(d)
        if self.radius == 0:
            return np.zeros_like(u)
        if nd < self.radius * (1 - 1e-12):
            return u
        n = d / nd
        return u - max(float(n @ u), 0.0) * n

    def constraints(self):
        return (lambda z: np.atleast_1d(self.radius**2 - np.sum((z - self.center) ** 2))), None

    def to_json(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


class Box(ConvexBody):
    """Coordinatewise bounds; infinite bounds allowed, lo == hi pins a coordinate."""

    kind = "box"

    def __init__(self, lo, hi):
        self.lo = np.asarray([-np.inf if v is None else v for v in np.atleast_1d(lo)], dtype=float)
        self.hi = np.asarray([np.inf if v is None else v for v in np.atleast_1d(hi)], dtype=float)
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise ValueError("box needs lo <= hi componentwise")
        self.dim = self.lo.size

    def project(self, y):
        return np.clip(np.asarray(y, dtype=float), self.lo, self.hi)

    def free(self):
        return self.lo < self.hi

    def affine_hull(self):
        free = self.free()
        point = np.where(free, 0.0, self.lo)
        return point, np.eye(self.dim)[:, free]

    def relative_margin(self, y):
        y = np.asarray(y, dtype=float)
        free = self.free()
        gaps = np.minimum(y - self.lo, self.hi - y)
        gaps = np.where(free, gaps, np.inf)
        out = np.min(gaps, axis=-1)
        return out

    def project_tangent(self, y, u, tol: float = 1e-9):
        y, u = np.asarray(y, dtype=float), np.array(u, dtype=float)
        at_lo = np.abs(y - self.lo) <= tol
        at_hi = np.abs(y - self.hi) <= tol
        u = np.where(at_lo, np.maximum(u, 0.0), u)
        u = np.where(at_hi, np.minimum(u, 0.0), u)
        return u

    def constraints(self):
        free = self.free()
        lo_idx = np.where(free & np.isfinite(self.lo))[0]
        hi_idx = np.where(free & np.isfinite(self.hi))[0]
        fixed = np.where(~free)[0]

        def ineq(z):
            return np.concatenate([z[lo_idx] - self.lo[lo_idx], self.hi[hi_idx] - z[hi_idx]])

        eq = (lambda z: z[fixed] - self.lo[fixed]) if fixed.size else None
        return (ineq if lo_idx.size + hi_idx.size else None), eq

    def to_json(self):
        def enc(v):
            return [None if not np.isfinite(a) else float(a) for a in v]

        return {"type": "box", "lo": enc(self.lo), "hi": enc(self.hi)}


def Orthant(dim: int, sign: str = "nonpositive") -> Box:
    if sign == "nonpositive":
        return Box(np.full(dim, -np.inf), np.zeros(dim))
    if sign == "nonnegative":
        return Box(np.zeros(dim), np.full(dim, np.inf))
    raise ValueError("orthant sign must be 'nonpositive' or 'nonnegative'")


def Singleton(point) -> Box:
    p = np.atleast_1d(np.asarray(point, dtype=float))
    return Box(p, p.copy())


class Halfspaces(ConvexBody):
    """{y : A y <= b}, assumed to have nonempty interior."""

    kind = "halfspaces"

    def __init__(self, A, b):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        self.dim = self.A.shape[1]
        self.row_norms = np.linalg.norm(self.A, axis=1)

    def _project_one(self, y):
        if np.all(self.A @ y <= self.b):
            return y.copy()
        res = minimize(
            lambda z: 0.5 * np.sum((z - y) ** 2),
            y,
            jac=lambda z: z - y,
            constraints=[{"type": "ineq", "fun": lambda z: self.b - self.A @ z, "jac": lambda z: -self.A}],
            method="SLSQP",
            options={"ftol": 1e-15, "maxiter": 500},
        )
        return res.x

    def project(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return self._project_one(y)
        return np.array([self._project_one(row) for row in y])

    def affine_hull(self):
        return _full_hull(self.dim)

    def relative_margin(self, y):
        y = np.asarray(y, dtype=float)
        return np.min((self.b - y @ self.A.T) / self.row_norms, axis=-1)

    def project_tangent(self, y, u, tol: float = 1e-9):
        y, u = np.asarray(y, dtype=float), np.asarray(u, dtype=float)
        active = np.abs(self.A @ y - self.b) <= tol * np.maximum(1.0, self.row_norms)
        if not np.any(active):
            return u.copy()
        return Halfspaces(self.A[active], np.zeros(active.sum()))._project_one(u)

    def constraints(self):
        return (lambda z: self.b - self.A @ z), None

    def to_json(self):
        return {"type": "halfspaces", "A": self.A.tolist(), "b": self.b.tolist()}


class Affine(ConvexBody):
    """{point + basis @ s}."""

    kind = "affine"

    def __init__(self, point, basis):
        self.point = np.asarray(point, dtype=float)
        self.dim = self.point.size
        basis = np.asarray(basis, dtype=float).reshape(self.dim, -1)
        self.basis = orth(basis) if basis.size else np.zeros((self.dim, 0))
        self.normal = null_space(self.basis.T) if self.basis.shape[1] else np.eye(self.dim)

    def project(self, y):
        y = np.asarray(y, dtype=float)
        return self.point + (y - self.point) @ self.basis @ self.basis.T

    def affine_hull(self):
        return self.point.copy(), self.basis.copy()

    def relative_margin(self, y):
        y = np.asarray(y, dtype=float)
        return np.full(y.shape[:-1], np.inf) if y.ndim > 1 else np.inf

    def project_tangent(self, y, u):
        u = np.asarray(u, dtype=float)
        return self.basis @ (self.basis.T @ u)

    def constraints(self):
        if self.normal.shape[1] == 0:
            return None, None
        return None, (lambda z: self.normal.T @ (z - self.point))

    def to_json(self):
        return {"type": "affine", "point": self.point.tolist(), "basis": self.basis.T.tolist()}


class Product(ConvexBody):
    kind = "product"

    def __init__(self, parts):
        self.parts = list(parts)
        self.sizes = [p.dim for p in self.parts]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.dim = int(self.offsets[-1])

    def _split(self, y):
        return [y[..., a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def project(self, y):
        y = np.asarray(y, dtype=float)
        return np.concatenate([p.project(s) for p, s in zip(self.parts, self._split(y))], axis=-1)

    def affine_hull(self):
        pts, bases = [], []
        for p in self.parts:
            pt, B = p.affine_hull()
            pts.append(pt)
            bases.append(B)
        point = np.concatenate(pts)
        cols = []
        for i, B in enumerate(bases):
            for j in range(B.shape[1]):
                col = np.zeros(self.dim)
                col[self.offsets[i] : self.offsets[i + 1]] = B[:, j]
                cols.append(col)
        basis = np.array(cols).T if cols else np.zeros((self.dim, 0))
        return point, basis

    def relative_margin(self, y):
        y = np.asarray(y, dtype=float)
        return np.min(np.stack([np.asarray(p.relative_margin(s), dtype=float) for p, s in zip(self.parts, self._split(y))]), axis=0)

    def project_tangent(self, y, u):
        return np.concatenate([p.project_tangent(a, b) for p, a, b in zip(self.parts, self._split(np.asarray(y, float)), self._split(np.asarray(u, float)))])

    def constraints(self):
        ineqs, eqs = [], []
        for p, a, b in zip(self.parts, self.offsets[:-1], self.offsets[1:]):
            gi, ge = p.constraints()
            if gi is not None:
                ineqs.append((gi, a, b))
            if ge is not None:
                eqs.append((ge, a, b))

        def stack(items):
            if not items:
                return None
            return lambda z: np.concatenate([np.atleast_1d(g(z[a:b])) for g, a, b in items])

        return stack(ineqs), stack(eqs)

    def to_json(self):
        return {"type": "product", "parts": [p.to_json() for p in self.parts]}


class HullSlice(ConvexBody):
    """D̃ = {s : point + basis @ s ∈ D}, the body D in coordinates of its affine hull."""

    kind = "hull-slice"

    def __init__(self, body: ConvexBody, point, basis):
        self.body = body
        self.point = np.asarray(point, dtype=float)
        self.basis = np.asarray(basis, dtype=float)
        self.dim = self.basis.shape[1]

    def lift(self, s):
        return self.point + np.asarray(s, dtype=float) @ self.basis.T

    def project(self, s):
        return (self.body.project(self.lift(s)) - self.point) @ self.basis

    def affine_hull(self):
        return _full_hull(self.dim)

    def relative_margin(self, s):
        return self.body.relative_margin(self.lift(s))

    def project_tangent(self, s, u):
        lifted = self.body.project_tangent(self.lift(s), self.basis @ np.asarray(u, dtype=float))
        return self.basis.T @ lifted

    def constraints(self):
        gi, ge = self.body.constraints()
        return (None if gi is None else (lambda s: gi(self.lift(s)))), None

    def to_json(self):
        return {"type": "hull-slice", "body": self.body.to_json(), "point": self.point.tolist(), "basis": self.basis.tolist()}


def body_from_json(spec: dict) -> ConvexBody:
    kind = spec.get("type")
    if kind == "ball":
        return Ball(spec["center"], spec["radius"])
    if kind == "box":
        return Box(spec["lo"], spec["hi"])
    if kind == "orthant":
        return Orthant(int(spec["dim"]), spec.get("sign", "nonpositive"))
    if kind == "singleton":
        return Singleton(spec["point"])
    if kind == "halfspaces":
        return Halfspaces(spec["A"], spec["b"])
    if kind == "affine":
        basis = np.asarray(spec.get("basis", []), dtype=float)
        point = np.asarray(spec["point"], dtype=float)
        return Affine(point, basis.T if basis.size else np.zeros((point.size, 0)))
    if kind == "product":
        return Product([body_from_json(p) for p in spec["parts"]])
    raise ValueError(f"unknown convex body type {kind!r}")
