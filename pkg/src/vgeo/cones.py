"""Constraint qualification with certificates, amenable tangent cones, regular normal sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.stats import norm, qmc

from .core import as_vec
from .oracles import Preimage, SetOracle


class CQError(RuntimeError):
    pass


class SamplingError(RuntimeError):
    pass


@dataclass
class AmenableRep:
    """A representation C = {x in V : F(x) in D} pinned at a base point x̄."""

    oracle: Preimage
    xbar: np.ndarray
    jac: np.ndarray = None

    def __post_init__(self):
        self.xbar = as_vec(self.xbar, self.oracle.dim)
        if self.jac is None:
            self.jac = self.oracle.F.jacobian(self.xbar)
        z = self.oracle.F(self.xbar)
        if not self.oracle.D.contains(z, 1e-9):
            raise CQError(f"F(x̄) = {z.tolist()} is not in D")

    @property
    def F(self):
        return self.oracle.F

    @property
    def D(self):
        return self.oracle.D

    @property
    def dim(self) -> int:
        return self.oracle.dim

    def at(self, x) -> "AmenableRep":
        return AmenableRep(self.oracle, x)

    @classmethod
    def of(cls, C, xbar) -> "AmenableRep":
        """Wrap an oracle (or its attached preimage representation) at x̄."""
        rep = C if isinstance(C, Preimage) else getattr(C, "preimage", None)
        if rep is None:
            raise CQError(f"set {getattr(C, 'name', '')!r} carries no preimage representation")
        return cls(rep, xbar)


@dataclass
class CQCertificate:
    status: str  # "holds" or "fails"
    w: np.ndarray | None = None
    lam: float | None = None
    delta: float | None = None
    y: np.ndarray | None = None
    residual: float | None = None
    reduced: bool = False
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def verify(self, rep: AmenableRep, samples: int = 1000, seed: int = 0, tol: float = 1e-9) -> bool:
        """Recheck the certificate from scratch."""
        if self.reduced:
            return self.holds
        J = rep.F.jacobian(rep.xbar)
        z = rep.F(rep.xbar)
        if self.holds:
            center = z + self.lam * (J @ self.w)
            rng = np.random.default_rng(seed)
            U = rng.standard_normal((samples, z.size))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
            radii = self.delta * (1 - 1e-9) * np.concatenate([np.ones(samples // 2), rng.random(samples - samples // 2)])
            pts = center + U * radii[:, None]
            return bool(np.all(rep.D.distance(pts) <= tol))
        if self.y is None:
            return False
        return bool(np.linalg.norm(J.T @ self.y) <= 1e-6 and rep.D.in_normal_cone(z, self.y, 1e-7))


def _margin_ascent(z, J, D, restarts=16, iters=200, seed=0):
    """Maximise r -> interior_margin(z + J r) over the unit ball by projected subgradient ascent."""
    n = J.shape[1]
    rng = np.random.default_rng(seed)

    def m(r):
        return float(D.interior_margin(z + J @ r))

    def grad(r, h=1e-7):
        g = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            g[i] = (m(r + e) - m(r - e)) / (2 * h)
        return g

    best_r, best = np.zeros(n), m(np.zeros(n))
    starts = [np.zeros(n)] + [rng.standard_normal(n) * 0.5 for _ in range(restarts - 1)]
    for r in starts:
        nr = np.linalg.norm(r)
        if nr > 1:
            r = r / nr
        for it in range(iters):
            g = grad(r)
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            r = r + (0.5 / np.sqrt(it + 1)) * g / gn
            nr = np.linalg.norm(r)
            if nr > 1:
                r = r / nr
            val = m(r)
            if val > best:
                best, best_r = val, r.copy()
    return best_r, best


def _dual_witness(z, J, D, samples=720):
    """Nonzero y in N_D(z) ∩ Ker(J^T), searched over unit vectors of Ker(J^T)."""
    K = null_space(J.T)
    if K.shape[1] == 0:
        return None, np.inf
    q = K.shape[1]
    if q == 1:
        cands = np.array([[1.0], [-1.0]])
    elif q == 2:
        th = np.linspace(0, 2 * np.pi, samples, endpoint=False)
        cands = np.column_stack([np.cos(th), np.sin(th)])
    else:
        cands = np.random.default_rng(0).standard_normal((samples * q, q))
        cands /= np.linalg.norm(cands, axis=1, keepdims=True)
    Y = cands @ K.T
    gaps = np.linalg.norm(D.project(z + Y) - z, axis=1)
    i = int(np.argmin(gaps))
    y = Y[i]
    if q == 2:  # polish the angle by golden section near the best sample
        from scipy.optimize import minimize_scalar

        def gap(t):
            v = K @ np.array([np.cos(t), np.sin(t)])
            return float(np.linalg.norm(D.project(z + v) - z))

        h = 2 * np.pi / samples
        res = minimize_scalar(gap, bounds=(th[i] - h, th[i] + h), method="bounded", options={"xatol": 1e-12})
        if res.fun <= gaps[i]:
            y = K @ np.array([np.cos(res.x), np.sin(res.x)])
            return y, float(res.fun)
    return y, float(gaps[i])


def check_cq(rep: AmenableRep, tol: float = 1e-8, reduce: bool = False, seed: int = 0) -> CQCertificate:
    """Constraint qualification at rep.xbar.

    With int D nonempty this is the dual test: some r puts F(x̄) + ∇F(x̄) r in int D.
    When int D is empty the check needs the affine-hull reduction (`reduce=True`).
    """
    z = rep.F(rep.xbar)
    J = rep.jac
    if not rep.D.has_interior():
        if not reduce:
            raise CQError("int(D) is empty; run the check on the reduced representation (reduce=True)")
        from .paths import ReductionError, reduce_representation

        try:
            chart, reduced = reduce_representation(rep)
        except ReductionError as exc:
            return CQCertificate("fails", reduced=True, note=str(exc), y=getattr(exc, "witness", None))
        if reduced is None:
            return CQCertificate("holds", w=np.zeros(0), lam=0.0, delta=np.inf, reduced=True,
                                 note="aff(D) is a point; C is locally the manifold F2^-1(0)", extra={"chart": chart})
        inner = check_cq(reduced, tol, reduce=False, seed=seed)
        inner.reduced = True
        inner.extra = {"chart": chart, "reduced": reduced}
        return inner
    r, margin = _margin_ascent(z, J, rep.D, seed=seed)
    if margin > tol:
        nr = np.linalg.norm(r)
        if nr < 1e-12:
            w = np.eye(rep.dim)[0]
            lam = 1e-12
        else:
            w, lam = r / nr, nr
        delta = float(rep.D.interior_margin(z + lam * (J @ w)))
        return CQCertificate("holds", w=w, lam=float(lam), delta=delta, residual=float(margin))
    y, gap = _dual_witness(z, J, rep.D)
    note = "" if (y is not None and gap <= 1e-6) else "maximal interior margin is zero but no dual witness was isolated"
    return CQCertificate("fails", y=y, residual=gap, note=note, extra={"margin": margin})


def low_discrepancy_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Unit vectors spread over the sphere: van der Corput angles in R^2, Sobol otherwise."""
    if count <= 0:
        return np.zeros((0, n))
    if n == 1:
        return np.array([[1.0], [-1.0]] * ((count + 1) // 2))[:count]
    if n == 2:
        th = 2 * np.pi * qmc.Halton(d=1, scramble=False).random(count + 1)[1:, 0]
        return np.column_stack([np.cos(th), np.sin(th)])
    pts = qmc.Sobol(d=n, scramble=True, seed=seed).random(count)
    G = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return G / np.linalg.norm(G, axis=1, keepdims=True)


@dataclass
class ConeSample:
    base: np.ndarray
    directions: np.ndarray
    kind: str
    info: dict = field(default_factory=dict)

    def __len__(self):
        return self.directions.shape[0]


def tangent_cone_amenable(rep: AmenableRep, x, dirs: int = 256, tol: float = 1e-2,
                          include_kernel: bool = True, check: bool = True) -> ConeSample:
    """Sample T_C(x) = {u : ∇F(x) u ∈ T_D(F(x))}."""
    x = as_vec(x, rep.dim)
    if not rep.oracle.contains(x, 1e-8):
        raise ValueError("x is not in the set")
    at = rep.at(x)
    if check:
        cert = check_cq(at, reduce=True)
        if not cert.holds:
            raise CQError(f"constraint qualification fails at {x.tolist()}")
    J, z = at.jac, rep.F(x)
    U = low_discrepancy_directions(rep.dim, dirs)
    scale = max(1.0, np.linalg.norm(J, 2))
    keep = [u for u in U if rep.D.tangent_distance(z, J @ u) <= tol * scale]
    if include_kernel:
        K = null_space(J)
        for j in range(K.shape[1]):
            keep.extend([K[:, j], -K[:, j]])
    D = np.array(keep).reshape(-1, rep.dim)
    return ConeSample(x, D, "tangent", {"sampled": dirs, "tol": tol})


def regular_normal_sample(C: SetOracle, x, radius: float, samples: int = 400, dirs: int = 256,
                          tol: float = 0.05, levels: int = 4, seed: int = 0) -> ConeSample:
    """Directions v whose sup-ratio <v, x' - x>/|x' - x| over C ∩ B_rho(x) decays as rho shrinks."""
    x = as_vec(x, C.dim)
    if not C.contains(x, 1e-8):
        raise ValueError("x is not in the set")
    rng = np.random.default_rng(seed)
    V = low_discrepancy_directions(C.dim, dirs, seed)
    sups = []
    for j in range(levels):
        rho = radius / 4**j
        P = C.sample(x, rho, samples, rng)
        diff = P - x
        nd = np.linalg.norm(diff, axis=1)
        diff, nd = diff[nd > 1e-14], nd[nd > 1e-14]
        if diff.shape[0] < 10:
            raise SamplingError(f"only {diff.shape[0]} set samples within radius {rho:.3g}; enlarge the radius")
        sups.append(np.max((diff / nd[:, None]) @ V.T, axis=0))
    S = np.array(sups)  # (levels, dirs)
    halving = np.all((S[1:] <= 0.5 * S[:-1]) | (S[:-1] <= tol), axis=0)
    keep = (S[-1] <= tol) | halving
    return ConeSample(x, V[keep], "regular-normal", {"sup_ratios": S[:, keep], "radius": radius, "tol": tol})
