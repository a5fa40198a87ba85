"""Nearly straight feasible paths (eps-paths) in amenable sets and their verification."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import null_space, orth

from .bodies import HullSlice
from .cones import AmenableRep, CQError, check_cq, low_discrepancy_directions
from .core import SampledCurve, as_vec, corner_profile, curve_length, fd_jacobian_batch, uniform_grid
from .oracles import Preimage, SetOracle, SmoothMap


class PathError(RuntimeError):
    pass


class ReductionError(RuntimeError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class EpsPathReport:
    eps: float
    achieved: float
    length: float
    chord: float
    midline_linear: float  # max |γ(t) - ℓ(t)| / (t |d|)
    midline_quadratic: float  # max |γ(t) - ℓ(t)| / (2 t (1-t) |d|)
    feasibility: float
    corner_turn: float = 0.0
    passed: bool = False
    checks: dict = field(default_factory=dict)
    route: str = ""

    def to_json(self) -> dict:
        out = asdict(self)
        return {k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in out.items()}


def verify_eps_path(curve: SampledCurve, C: SetOracle, x, x2, eps: float, tol: float = 1e-9,
                    endpoint_tol: float = 1e-8) -> EpsPathReport:
    """Check |γ'(t) - d| <= eps|d| at every node, feasibility, the length bound and both midline bounds."""
    x, x2 = as_vec(x, C.dim), as_vec(x2, C.dim)
    d = x2 - x
    nd = float(np.linalg.norm(d))
    scale = max(1.0, nd)
    if np.linalg.norm(curve.start - x) > endpoint_tol * scale or np.linalg.norm(curve.end - x2) > endpoint_tol * scale:
        raise ValueError("curve endpoints do not match the requested pair")
    t = curve.grid
    feas = float(np.max(np.minimum(C.residual(curve.points), 1e300)))
    length = curve_length(curve)
    coarse, fine = corner_profile(curve.points) if nd > 0 else (0.0, 0.0)
    if nd == 0:
        speed = float(np.max(np.linalg.norm(curve.deriv, axis=1)))
        spread = float(np.max(np.linalg.norm(curve.points - x, axis=1)))
        ok = speed == 0 and spread == 0 and feas <= tol
        return EpsPathReport(eps, 0.0 if speed == 0 else np.inf, length, 0.0, 0.0, 0.0, feas, 0.0, ok,
                             {"derivative": speed == 0, "feasible": feas <= tol, "length": spread == 0,
                              "midline_linear": True, "midline_quadratic": True})
    dev = np.linalg.norm(curve.deriv - d, axis=1) / nd
    line = (1 - t)[:, None] * x + t[:, None] * x2
    # rounding in the coordinates themselves, which matters only for nearly coincident pairs
    fp = 8 * np.finfo(float).eps * max(float(np.max(np.abs(curve.points))), 1e-300)
    gap = np.maximum(np.linalg.norm(curve.points - line, axis=1) - fp, 0.0)
    inner = (t > 0) & (t < 1)
    lin = float(np.max(gap[inner] / (t[inner] * nd))) if np.any(inner) else 0.0
    quad = float(np.max(gap[inner] / (2 * t[inner] * (1 - t[inner]) * nd))) if np.any(inner) else 0.0
    bound = eps * (1 + 1e-9) + 1e-12
    checks = {
        "derivative": bool(np.max(dev) <= bound),
        "feasible": bool(feas <= tol),
        "length": bool(length <= (1 + eps) * nd * (1 + 1e-9) + 1e-12),
        "midline_linear": bool(lin <= bound),
        "midline_quadratic": bool(quad <= bound),
    }
    return EpsPathReport(eps, float(np.max(dev)), length, nd, lin, quad, feas, fine, all(checks.values()), checks)


# ---------------------------------------------------------------- charts and reduction


class Chart:
    """u -> H(u) = x̄ + T u + N c(u) parametrising the manifold {F2 = 0} near x̄."""

    def __init__(self, F2: SmoothMap, xbar, iters: int = 20, tol: float = 1e-10):
        self.F2 = F2
        self.xbar = as_vec(xbar, F2.n)
        J = F2.jacobian(self.xbar)
        s = np.linalg.svd(J, compute_uv=False)
        if s.size < J.shape[0] or s.min() <= 1e-8 * max(1.0, s.max()):
            raise ReductionError("∇F2(x̄) is not surjective; the constraint qualification fails")
        self.T = null_space(J)
        self.N = orth(J.T)
        self.JN_inv = np.linalg.inv(J @ self.N)
        self.iters, self.tol = iters, tol
        self.dim = self.T.shape[1]
        self.radius = self._validity_radius()

    def _correct(self, U):
        U = np.atleast_2d(U)
        base = self.xbar + U @ self.T.T
        c = np.zeros((U.shape[0], self.N.shape[1]))
        res = np.full(U.shape[0], np.inf)
        for _ in range(self.iters):
            Y = base + c @ self.N.T
            R = self.F2(Y)
            res = np.linalg.norm(R, axis=1)
            if np.all(res <= self.tol):
                break
            c = c - R @ self.JN_inv.T
        return base + c @ self.N.T, res

    def __call__(self, U, check: bool = True):
        arr = np.asarray(U, dtype=float)
        single = arr.ndim == 1
        Y, res = self._correct(arr.reshape(-1, self.dim))
        if check:
            if np.any(np.linalg.norm(arr.reshape(-1, self.dim), axis=1) > getattr(self, "radius", np.inf) * (1 + 1e-12)):
                raise PathError("point leaves the chart's validity ball")
            if np.any(res > self.tol * 10):
                raise PathError("chart corrector did not converge")
        return Y[0] if single else Y

    def inverse(self, Y):
        return (np.asarray(Y, dtype=float) - self.xbar) @ self.T

    def jacobian(self, U) -> np.ndarray:
        """∇H(u) = T + N c'(u), c' = -(∇F2(H) N)^-1 ∇F2(H) T, shape (k, n, dim)."""
        Y = np.atleast_2d(self(U, check=False))
        J = fd_jacobian_batch(self.F2, Y)
        cp = -np.linalg.solve(J @ self.N, J @ self.T)
        return self.T + self.N @ cp

    def _validity_radius(self, rmax: float = 1.0, probes: int = 16) -> float:
        if self.dim == 0:
            return 0.0
        V = np.random.default_rng(0).standard_normal((probes, self.dim))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        V = np.vstack([V, np.eye(self.dim), -np.eye(self.dim)])
        r = rmax
        while r > 1e-8:
            Y, res = self._correct(r * V)
            back = self.inverse(Y)
            if np.all(res <= self.tol) and np.all(np.linalg.norm(back - r * V, axis=1) <= 1e-8):
                return r
            r /= 2
        return 0.0


@dataclass
class Reduction:
    chart: Chart
    F1: SmoothMap | None
    body: HullSlice | None


def reduce_representation(rep: AmenableRep):
    """Split F along aff(D) = a0 + span(B): F1 = B^T(F - a0), F2 = B_perp^T(F - a0).

    Returns (chart of {F2 = 0}, reduced AmenableRep in chart coordinates), the
    latter None when aff(D) is a single point.
    """
    D = rep.D
    a0, B = D.affine_hull()
    if B.shape[1] == D.dim:
        raise ReductionError("int(D) nonempty; reduction not applicable")
    Bp = null_space(B.T) if B.shape[1] else np.eye(D.dim)
    F = rep.F
    F2 = SmoothMap(lambda X: (F(X) - a0) @ Bp, F.n, Bp.shape[1], c1=F.c1, name="F2")
    chart = Chart(F2, rep.xbar)
    if B.shape[1] == 0:
        return chart, None
    F1 = SmoothMap(lambda U: (F(chart(U, check=False)) - a0) @ B, chart.dim, B.shape[1], c1=F.c1, name="F1∘H")
    body = HullSlice(D, a0, B)
    reduced = Preimage(F1, body, center=np.zeros(chart.dim), radius=chart.radius, name="reduced")
    return chart, AmenableRep(reduced, np.zeros(chart.dim))


def pushforward_path(embedding, curve: SampledCurve) -> SampledCurve:
    """H∘γ with derivatives by the chain rule at every node."""
    if isinstance(embedding, Chart):
        pts = embedding(curve.points)
        J = embedding.jacobian(curve.points)
    else:
        pts = embedding(curve.points)
        J = embedding.jacobian_batch(curve.points)
    der = np.einsum("kij,kj->ki", J, curve.deriv)
    meta = dict(curve.meta)
    meta["pushforward"] = True
    return SampledCurve(curve.grid, np.atleast_2d(pts).reshape(curve.grid.size, -1), der, meta)


# ---------------------------------------------------------------- constructions


def straight_segment(x, x2, nodes: int = 1024) -> SampledCurve:
    x, x2 = as_vec(x), as_vec(x2)
    t = uniform_grid(nodes)
    pts = x + t[:, None] * (x2 - x)
    pts[-1] = x2
    return SampledCurve(t, pts, np.tile(x2 - x, (t.size, 1)), {"route": "segment"})


def interior_formula(x, x2, eps: float, w, nodes: int = 1024) -> SampledCurve:
    """γ(t) = (1-t)x + t x' + eps t(1-t)|x - x'| w with its exact derivative."""
    x, x2, w = as_vec(x), as_vec(x2), as_vec(w)
    t = uniform_grid(nodes)
    nd = np.linalg.norm(x2 - x)
    pts = (1 - t)[:, None] * x + t[:, None] * x2 + (eps * nd * t * (1 - t))[:, None] * w
    der = (x2 - x) + (eps * nd * (1 - 2 * t))[:, None] * w
    return SampledCurve(t, pts, der, {"route": "interior", "eps": eps})


def _interior_cert(rep: AmenableRep, cert=None):
    if not rep.D.has_interior():
        raise PathError("int(D) is empty; use build_eps_path, which reduces first")
    # the certificate depends only on x̄; keep it on the representation
    cert = cert or getattr(rep, "_cert", None) or check_cq(rep)
    rep._cert = cert
    if not cert.holds:
        raise CQError("constraint qualification fails at x̄")
    return cert


def build_eps_path_interior(rep: AmenableRep, x, x2, eps: float, cert=None, nodes: int = 1024) -> SampledCurve:
    """The quadratic perturbation of the chord along the certificate direction w.

    Interior nodes must lie strictly inside C (F(γ(t)) in int D).
    """
    cert = _interior_cert(rep, cert)
    x, x2 = as_vec(x, rep.dim), as_vec(x2, rep.dim)
    if np.array_equal(x, x2):
        t = uniform_grid(nodes)
        return SampledCurve(t, np.tile(x, (t.size, 1)), np.zeros((t.size, rep.dim)), {"route": "constant"})
    curve = interior_formula(x, x2, eps, cert.w, nodes)
    res = rep.oracle.residual(curve.points)
    marg = rep.oracle.margin(curve.points[1:-1])
    if np.max(res) > 1e-9 or np.min(marg) <= 0:
        raise PathError("the perturbed chord leaves C; the pair lies outside the certified neighbourhood")
    return curve


def _feasible(rep: AmenableRep, curve: SampledCurve, tol=1e-10) -> bool:
    return bool(np.max(rep.oracle.residual(curve.points)) <= tol)


def _build_interior_dispatch(rep, x, x2, eps, cert, nodes, ladder=12):
    """Straight chord when feasible, otherwise the smallest dyadic fraction of eps that works."""
    seg = straight_segment(x, x2, nodes)
    if _feasible(rep, seg):
        return seg
    for j in range(ladder, -1, -1):
        curve = interior_formula(x, x2, eps * 2.0**-j, cert.w, nodes)
        if _feasible(rep, curve):
            return curve
    raise PathError("no perturbation up to eps keeps the path feasible; shrink the pair distance")


def build_eps_path(rep: AmenableRep, x, x2, eps: float, nodes: int = 1024, C: SetOracle | None = None):
    """ε-path between two nearby points of an amenable set, with its verification report."""
    x, x2 = as_vec(x, rep.dim), as_vec(x2, rep.dim)
    target = C if C is not None else rep.oracle
    if rep.D.has_interior():
        cert = _interior_cert(rep)
        curve = _build_interior_dispatch(rep, x, x2, eps, cert, nodes)
        report = verify_eps_path(curve, target, x, x2, eps)
        report.route = curve.meta.get("route", "")
        return curve, report
    chart, reduced = reduce_representation(rep)
    u, u2 = chart.inverse(x), chart.inverse(x2)
    if max(np.linalg.norm(u), np.linalg.norm(u2)) > chart.radius:
        raise PathError("endpoints lie outside the chart's validity ball")
    # the tangent coordinate alone cannot tell x from a far point of C with the same shadow
    back = chart(np.vstack([u, u2]), check=False)
    if max(np.linalg.norm(back[0] - x), np.linalg.norm(back[1] - x2)) > 1e-8 * max(1.0, np.linalg.norm(x2 - x)):
        raise PathError("endpoints are not in the chart's image near the base point")
    inner_eps = eps
    last = None
    for _ in range(20):
        if reduced is None:
            inner = straight_segment(u, u2, nodes)
        else:
            inner, _ = build_eps_path(reduced, u, u2, inner_eps, nodes)
        curve = pushforward_path(chart, inner)
        # the chart reproduces the endpoints only up to the corrector tolerance; pin them
        pts = np.array(curve.points)
        pts[0], pts[-1] = x, x2
        curve = SampledCurve(curve.grid, pts, curve.deriv, {**curve.meta, "route": "chart"})
        report = verify_eps_path(curve, target, x, x2, eps, tol=1e-9)
        report.route = "chart"
        last = (curve, report)
        if report.passed or reduced is None:
            return last
        inner_eps /= 2
    return last


def certify_radius(rep: AmenableRep, eps: float, r0: float | None = None, pairs: int = 8, seed: int = 0,
                   min_radius: float = 1e-6):
    """Largest dyadic radius r <= r0 such that sampled pairs in C ∩ B_r(x̄) admit verified eps-paths."""
    rng = np.random.default_rng(seed)
    C = rep.oracle
    if r0 is None:
        r0 = 0.5
        if rep.D.has_interior():
            cert = getattr(rep, "_cert", None) or check_cq(rep)
            rep._cert = cert
            if cert.holds:
                r0 = min(r0, 4 * cert.lam / max(eps, 1e-12), max(cert.delta, 1e-6) * 4)
    U = low_discrepancy_directions(rep.dim, pairs, seed)
    r = r0
    while r >= min_radius:
        P = C.sample(rep.xbar, r, 2 * pairs, rng)
        ok = P.shape[0] >= 2
        # projections of pushes off x̄ land on the boundary, where chords are least likely to stay feasible
        Q = [C.project(rep.xbar + s * r * u)[0] for s in (1.0, 0.75, 0.5, 0.25) for u in U]
        Q = [q for q in Q if np.linalg.norm(q - rep.xbar) <= r]
        edge = [(Q[i], Q[j]) for i in range(len(Q)) for j in range(i + 1, len(Q))]
        for a, b in edge + [(P[i], P[i + 1]) for i in range(0, P.shape[0] - 1, 2)]:
            try:
                _, rpt = build_eps_path(rep, a, b, eps)
            except (PathError, CQError, ReductionError):
                ok = False
                break
            if not rpt.passed:
                ok = False
                break
        if ok:
            return r
        r /= 2
    raise PathError("no certified radius found above the minimum")
