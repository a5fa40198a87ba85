"""Vectors, sampled curves and finite differences shared by the rest of the toolkit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS = np.finfo(float).eps
DEFAULT_NODES = 1024


def as_vec(x, dim: int | None = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a flat vector, got shape {v.shape}")
    if v.size < 1 or not np.all(np.isfinite(v)):
        raise ValueError("vectors must be non-empty and finite")
    if dim is not None and v.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.size}")
    return v


def uniform_grid(nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Uniform grid on [0, 1] with `nodes` intervals (nodes + 1 points)."""
    if nodes < 2:
        raise ValueError("a curve needs at least two intervals")
    return np.linspace(0.0, 1.0, nodes + 1)


@dataclass(frozen=True)
class SampledCurve:
    """A curve on [0, 1] stored as grid values, points and derivative estimates."""

    grid: np.ndarray
    points: np.ndarray
    deriv: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        der = np.asarray(self.deriv, dtype=float)
        if grid.ndim != 1 or grid.size < 3:
            raise ValueError("grid must hold at least 3 nodes")
        if abs(grid[0]) > 1e-12 or abs(grid[-1] - 1.0) > 1e-12:
            raise ValueError("grid must cover [0, 1]")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if pts.ndim != 2 or pts.shape[0] != grid.size or der.shape != pts.shape:
            raise ValueError("points/deriv must have one row per grid node")
        for name, arr in (("grid", grid), ("points", pts), ("deriv", der)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    @classmethod
    def from_points(cls, points, grid=None, meta=None) -> "SampledCurve":
        pts = np.asarray(points, dtype=float)
        if grid is None:
            grid = np.linspace(0.0, 1.0, pts.shape[0])
        return cls(grid, pts, fd_derivative(pts, grid), dict(meta or {}))

    @classmethod
    def from_function(cls, func, deriv=None, nodes: int = DEFAULT_NODES, meta=None) -> "SampledCurve":
        """Sample `func` (vectorised over t) on a uniform grid; `deriv` is optional."""
        grid = uniform_grid(nodes)
        pts = np.asarray(func(grid), dtype=float)
        der = fd_derivative(pts, grid) if deriv is None else np.asarray(deriv(grid), dtype=float)
        return cls(grid, pts, der, dict(meta or {}))

    def refine(self) -> "SampledCurve":
        """Double the grid by linear interpolation of points (derivatives re-estimated)."""
        mids = 0.5 * (self.grid[:-1] + self.grid[1:])
        grid = np.sort(np.concatenate([self.grid, mids]))
        pts = np.column_stack([np.interp(grid, self.grid, self.points[:, j]) for j in range(self.dim)])
        return SampledCurve.from_points(pts, grid, self.meta)


def polyline_length(points) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def curve_length(curve: SampledCurve) -> float:
    """Polygonal length of the curve over its grid."""
    return polyline_length(curve.points)


def fd_derivative(points, grid) -> np.ndarray:
    """Second-order finite differences: central inside, one-sided at both ends.

    Exact for curves that are quadratic in t on uniform grids.
    """
    pts = np.asarray(points, dtype=float)
    t = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if t.ndim != 1 or t.size != pts.shape[0]:
        raise ValueError("grid and points disagree in length")
    if t.size < 3:
        raise ValueError("need at least 3 nodes for second-order differences")
    if np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly increasing")
    # built on divided differences so constant curves give exact zeros
    h = np.diff(t)[:, None]
    D = np.diff(pts, axis=0) / h
    out = np.empty_like(pts)
    h1, h2 = h[:-1], h[1:]
    out[1:-1] = (h2 * D[:-1] + h1 * D[1:]) / (h1 + h2)
    out[0] = D[0] - h[0] * (D[1] - D[0]) / (h[0] + h[1])
    out[-1] = D[-1] + h[-1] * (D[-1] - D[-2]) / (h[-2] + h[-1])
    return out


def default_step(x) -> float:
    return float(np.cbrt(EPS) * max(1.0, np.linalg.norm(x)))


def fd_jacobian(F, x, h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of F at x, shape (m, n).

    F takes an array of shape (k, n) and returns shape (k, m).
    """
    x = as_vec(x)
    n = x.size
    if h is None:
        h = default_step(x)
    stencil = np.concatenate([x + h * np.eye(n), x - h * np.eye(n)])
    vals = np.asarray(F(stencil), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if not np.all(np.isfinite(vals)):
        raise ArithmeticError("map evaluation failed inside the difference stencil")
    return ((vals[:n] - vals[n:]) / (2.0 * h)).T


def fd_jacobian_batch(F, X, h: float | None = None) -> np.ndarray:
    """Jacobians at every row of X, shape (k, m, n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k, n = X.shape
    if h is None:
        h = default_step(np.max(np.abs(X)) if X.size else 0.0)
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        fp = np.asarray(F(X + e), dtype=float).reshape(k, -1)
        fm = np.asarray(F(X - e), dtype=float).reshape(k, -1)
        cols.append((fp - fm) / (2.0 * h))
    return np.stack(cols, axis=2)


def resample_by_arclength(points, count: int) -> np.ndarray:
    """Redistribute a polyline to `count` points equally spaced in arc length."""
    pts = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 0])
    pts = pts[keep]
    if pts.shape[0] < 2:
        return np.repeat(pts[:1], count, axis=0)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    target = np.linspace(0.0, s[-1], count)
    return np.column_stack([np.interp(target, s, pts[:, j]) for j in range(pts.shape[1])])


def turning_angles(points) -> np.ndarray:
    """Angle between consecutive segment directions at each interior vertex."""
    pts = np.asarray(points, dtype=float)
    seg = np.diff(pts, axis=0)
    norms = np.linalg.norm(seg, axis=1)
    ok = norms > 0
    u = np.zeros_like(seg)
    u[ok] = seg[ok] / norms[ok, None]
    cos = np.clip(np.sum(u[:-1] * u[1:], axis=1), -1.0, 1.0)
    return np.arccos(cos)


def corner_profile(points, coarse: int = 256, factor: int = 16) -> tuple[float, float]:
    """Largest turning angle after arc-length resampling at two resolutions.

    A C^1 image gives a fine/coarse ratio near 1/factor; a corner keeps it near 1.
    """
    a = turning_angles(resample_by_arclength(points, coarse + 1))
    b = turning_angles(resample_by_arclength(points, coarse * factor + 1))
    return float(a.max(initial=0.0)), float(b.max(initial=0.0))


def has_persistent_corner(points, threshold: float = 1e-3, coarse: int = 256, factor: int = 16) -> bool:
    coarse_turn, fine_turn = corner_profile(points, coarse, factor)
    return fine_turn > threshold and fine_turn > 0.4 * coarse_turn
