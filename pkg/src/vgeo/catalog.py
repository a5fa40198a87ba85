"""Named example sets with exact planar normal cones where they are known in closed form."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bodies import Ball, Box, Orthant, Singleton
from .core import as_vec
from .expr import parse_expr
from .oracles import CurveUnion, FunctionEpigraph, FunctionGraph, Preimage, SetOracle, SmoothMap, _Branch

TAU = 2 * np.pi


# ---------------------------------------------------------------- sawtooth


def sawtooth(x):
    """Closed-form sawtooth: zero off (0, 1/2], teeth of slope +-2^-k on (2^-(k+1), 2^-k]."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    on = (x > 0) & (x <= 0.5)
    if np.any(on):
        xs = x[on]
        m, e = np.frexp(xs)
        k = np.where(m == 0.5, 1 - e, -e)
        low = np.ldexp(1.0, -(k + 1))
        top = np.ldexp(1.0, -k)
        apex = np.ldexp(3.0, -(k + 2))
        out[on] = np.where(xs <= apex, (xs - low) * top, (top - xs) * top)
    return float(out[0]) if scalar else out


def sawtooth_slopes(x: float):
    """(left slope, right slope) of the sawtooth at x."""
    x = float(x)
    if x <= 0 or x > 0.5:
        return 0.0, 0.0
    m, e = np.frexp(x)
    k = 1 - e if m == 0.5 else -e
    apex = 3.0 * 2.0 ** -(k + 2)
    left = 2.0**-k if x <= apex else -(2.0**-k)
    if m == 0.5:  # trough at 2^-k, next tooth to the right is wider
        right = 0.0 if k == 1 else 2.0 ** -(k - 1)
    elif x == apex:
        right = -(2.0**-k)
    else:
        right = left
    return left, right


def sawtooth_kinks(kmax: int = 40):
    """Apexes (3/2^(k+2), 1/2^(2k+2)) and troughs (1/2^k, 0) for k = 1..kmax."""
    ks = np.arange(1, kmax + 1)
    apex = np.column_stack([3.0 * 2.0 ** -(ks + 2), 2.0 ** -(2 * ks + 2)])
    trough = np.column_stack([2.0**-ks, np.zeros(ks.size)])
    return apex, trough


def _saw_f(U):
    U = np.asarray(U, dtype=float)
    return sawtooth(U[:, 0] if U.ndim == 2 else U)


# ---------------------------------------------------------------- cones as arcs


def _ang(v):
    return float(np.arctan2(v[1], v[0]) % TAU)


def _unit(theta):
    return np.array([np.cos(theta), np.sin(theta)])


def _half_arcs_intersection(a: float, b: float):
    """Intersection of arcs [a, a+pi] and [b, b+pi] (mod 2 pi) as (start, end) pieces."""
    out = []
    for shift in (0.0, -TAU, TAU):
        lo, hi = max(a, b + shift), min(a + np.pi, b + shift + np.pi)
        if hi >= lo - 1e-15:
            out.append((lo % TAU, lo % TAU + max(hi - lo, 0.0)))
    return tuple(out)


@dataclass(frozen=True)
class NormalCones:
    """Regular and limiting normal cones in R^2 as unions of closed arcs of directions.

    An empty arc tuple means the cone is {0}. `generators` are representative
    (unnormalised) vectors of the limiting cone used by witness searches.
    """

    regular: tuple
    limiting: tuple
    generators: tuple = field(default=())

    def contains(self, v, which: str = "limiting", tol: float = 1e-12) -> bool:
        v = np.asarray(v, dtype=float)
        if np.linalg.norm(v) == 0:
            return True
        return _arc_member(_ang(v), self.regular if which == "regular" else self.limiting, tol)

    def clarke_regular(self) -> bool:
        return arcs_equal(self.regular, self.limiting)


def _arc_member(theta, arcs, tol=1e-12):
    for s, e in arcs:
        d = (theta - s) % TAU
        if d <= (e - s) + tol or d >= TAU - tol:
            return True
    return False


def arcs_equal(A, B, tol: float = 1e-12) -> bool:
    """Exact comparison of two finite unions of closed arcs.

    Two such unions agree iff they agree at every arc endpoint and at the
    midpoints between consecutive endpoints.
    """
    pts = sorted({s % TAU for s, _ in A + B} | {e % TAU for _, e in A + B})
    if not pts:
        return True
    probes = list(pts)
    for i, p in enumerate(pts):
        q = pts[(i + 1) % len(pts)] + (TAU if i == len(pts) - 1 else 0.0)
        probes.append(0.5 * (p + q) % TAU)
    if len(pts) == 1:
        probes.append((pts[0] + np.pi) % TAU)
    return all(_arc_member(t, A, tol) == _arc_member(t, B, tol) for t in probes)


def zero_cone() -> NormalCones:
    return NormalCones((), (), ())


def ray_cone(v) -> NormalCones:
    t = _ang(v)
    return NormalCones(((t, t),), ((t, t),), (np.asarray(v, dtype=float),))


def line_cone(v) -> NormalCones:
    v = np.asarray(v, dtype=float)
    t = _ang(v)
    arcs = ((t, t), ((t + np.pi) % TAU, (t + np.pi) % TAU))
    return NormalCones(arcs, arcs, (v, -v))


def graph_kink_cones(mL: float, mR: float) -> NormalCones:
    """Graph of a function with one-sided slopes mL, mR at a corner."""
    if mL == mR:
        return line_cone(np.array([-mL, 1.0]))
    r1, r2 = np.array([-1.0, -mL]), np.array([1.0, mR])
    # polar of the union of the two tangent rays
    reg = _half_arcs_intersection(_ang(r1) + np.pi / 2, _ang(r2) + np.pi / 2)
    nl, nr = np.array([-mL, 1.0]), np.array([-mR, 1.0])
    lines = tuple((t, t) for t in (_ang(nl), _ang(-nl), _ang(nr), _ang(-nr)))
    gens = (nl, -nl, nr, -nr) + tuple(_unit(s) for s, _ in reg) + tuple(_unit(e) for _, e in reg)
    return NormalCones(reg, reg + lines, gens)


def epi_kink_cones(mL: float, mR: float) -> NormalCones:
    """Epigraph boundary point with one-sided slopes mL, mR."""
    a, b = _ang(np.array([mL, -1.0])), _ang(np.array([mR, -1.0]))
    if mL == mR:
        return ray_cone(np.array([mL, -1.0]))
    gens = (np.array([mL, -1.0]), np.array([mR, -1.0]))
    if mL < mR:  # convex corner: the sector between the two piece normals
        arc = ((b, b + (a - b) % TAU),)
        return NormalCones(arc, arc, gens)
    return NormalCones((), ((a, a), (b, b)), gens)


# ---------------------------------------------------------------- the catalog


def _circle_branch():
    return _Branch(lambda s: np.column_stack([np.cos(s), np.sin(s)]), (0.0, TAU),
                   implicit=lambda X: np.hypot(X[:, 0], X[:, 1]) - 1.0, periodic=True)


def _parabola_branch(sign, lo=-2.0, hi=2.0):
    return _Branch(lambda s: np.column_stack([s, sign * s**2]), (lo, hi),
                   implicit=lambda X: X[:, 1] - sign * X[:, 0] ** 2)


def _member_check(C: SetOracle, x):
    x = as_vec(x, C.dim)
    if not C.contains(x, 1e-9):
        raise ValueError(f"point {x.tolist()} is not in {C.name}")
    return x


def _smooth_graph_normals(C, fprime):
    def normals(x):
        x = _member_check(C, x)
        return line_cone(np.array([-fprime(x[0]), 1.0]))
    return normals


def parabola_pair() -> SetOracle:
    C = CurveUnion([_parabola_branch(1.0), _parabola_branch(-1.0)], ([-2.0, -4.0], [2.0, 4.0]), "parabola-pair")
    C.mirror = (np.diag([1.0, -1.0]), np.zeros(2))
    C.family = lambda s: np.array([s, s * s])

    def normals(x):
        x = _member_check(C, x)
        if x[0] == 0:
            return line_cone(np.array([0.0, 1.0]))
        sign = 1.0 if abs(x[1] - x[0] ** 2) <= abs(x[1] + x[0] ** 2) else -1.0
        return line_cone(np.array([-2.0 * sign * x[0], 1.0]))

    C.exact_normals = normals
    return C


def _sawtooth_normals(C, epi: bool):
    def normals(x):
        x = _member_check(C, x)
        if epi and x[1] > sawtooth(x[0]) + 1e-12:
            return zero_cone()
        mL, mR = sawtooth_slopes(float(x[0]))
        if x[0] == 0:
            # tangent cone is the horizontal axis on both sides
            return ray_cone(np.array([0.0, -1.0])) if epi else line_cone(np.array([0.0, 1.0]))
        return epi_kink_cones(mL, mR) if epi else graph_kink_cones(mL, mR)
    return normals


def sawtooth_graph() -> SetOracle:
    C = FunctionGraph(_saw_f, 2, ([-0.5, -0.5], [1.0, 0.5]), "sawtooth-graph", c1=False)
    C.exact_normals = _sawtooth_normals(C, epi=False)
    return C


def sawtooth_epigraph() -> SetOracle:
    C = FunctionEpigraph(_saw_f, 2, ([-0.5, -0.5], [1.0, 0.5]), "sawtooth-epigraph", c1=False)
    C.exact_normals = _sawtooth_normals(C, epi=True)
    return C


def power32_graph() -> SetOracle:
    C = FunctionGraph(parse_expr("abs(x1)^(3/2)"), 2, ([-2.0, -1.0], [2.0, 3.0]), "power32-graph")
    C.mirror = (np.diag([-1.0, 1.0]), np.zeros(2))
    C.family = lambda s: np.array([s, abs(s) ** 1.5])
    C.exact_normals = _smooth_graph_normals(C, lambda u: 1.5 * np.sign(u) * np.sqrt(abs(u)))
    C.preimage = C.as_preimage()
    return C


def parabola_graph() -> SetOracle:
    C = FunctionGraph(parse_expr("x1^2"), 2, ([-2.0, -1.0], [2.0, 4.0]), "parabola-graph")
    C.exact_normals = _smooth_graph_normals(C, lambda u: 2 * u)
    C.preimage = C.as_preimage()
    return C


def _smooth_epi_normals(C, fprime):
    def normals(x):
        x = _member_check(C, x)
        if C.residual(x[None])[0] <= 0 and x[1] - C.fvals(x[:1])[0] > 1e-12:
            return zero_cone()
        return ray_cone(np.array([fprime(x[0]), -1.0]))
    return normals


def parabola_epigraph() -> SetOracle:
    C = FunctionEpigraph(parse_expr("x1^2"), 2, ([-2.0, -1.0], [2.0, 4.0]), "parabola-epigraph")
    C.exact_normals = _smooth_epi_normals(C, lambda u: 2 * u)
    C.preimage = C.as_preimage()
    return C


def neg_parabola_epigraph() -> SetOracle:
    C = FunctionEpigraph(parse_expr("-x1^2"), 2, ([-2.0, -4.0], [2.0, 1.0]), "neg-parabola-epigraph")
    C.exact_normals = _smooth_epi_normals(C, lambda u: -2 * u)
    C.preimage = C.as_preimage()
    return C


def parabola_band() -> SetOracle:
    F = SmoothMap.from_exprs(["x2 - x1^2", "-x2 - x1^2"], 2)
    boundary = CurveUnion([_parabola_branch(1.0), _parabola_branch(-1.0)], ([-2.0, -4.0], [2.0, 4.0]))
    C = Preimage(F, Orthant(2, "nonpositive"), bbox=([-2.0, -4.0], [2.0, 4.0]), name="parabola-band", boundary=boundary)
    C.mirror = (np.diag([1.0, -1.0]), np.zeros(2))
    C.family = lambda s: np.array([s, s * s])

    def normals(x):
        x = _member_check(C, x)
        if x[0] == 0:
            return line_cone(np.array([0.0, 1.0]))
        up, down = x[1] - x[0] ** 2, -x[1] - x[0] ** 2
        if up < -1e-12 and down < -1e-12:
            return zero_cone()
        if up >= -1e-12:
            return ray_cone(np.array([-2 * x[0], 1.0]))
        return ray_cone(np.array([-2 * x[0], -1.0]))

    C.exact_normals = normals
    return C


def quartic_cross() -> SetOracle:
    """{(u, v) : u^2 = v^4}, the two parabolas u = +-v^2 touching at the origin."""
    branches = [
        _Branch(lambda s: np.column_stack([s**2, s]), (-2.0, 2.0), implicit=lambda X: X[:, 0] - X[:, 1] ** 2),
        _Branch(lambda s: np.column_stack([-(s**2), s]), (-2.0, 2.0), implicit=lambda X: X[:, 0] + X[:, 1] ** 2),
    ]
    C = CurveUnion(branches, ([-4.0, -2.0], [4.0, 2.0]), "quartic-cross")
    C.mirror = (np.diag([-1.0, 1.0]), np.zeros(2))
    C.family = lambda s: np.array([s * s, s])

    def normals(x):
        x = _member_check(C, x)
        if x[1] == 0:
            return line_cone(np.array([1.0, 0.0]))
        sign = 1.0 if abs(x[0] - x[1] ** 2) <= abs(x[0] + x[1] ** 2) else -1.0
        return line_cone(np.array([1.0, -2.0 * sign * x[1]]))

    C.exact_normals = normals
    return C


def unit_circle() -> SetOracle:
    C = CurveUnion([_circle_branch()], ([-1.5, -1.5], [1.5, 1.5]), "unit-circle")
    C.exact_normals = lambda x: line_cone(_member_check(C, x))
    C.preimage = Preimage(SmoothMap.from_exprs(["x1^2 + x2^2 - 1"], 2), Singleton([0.0]),
                          bbox=C.bbox, name="unit-circle", projector=C)
    return C


def unit_ball() -> SetOracle:
    C = Preimage(SmoothMap.identity(2), Ball(np.zeros(2), 1.0), bbox=([-1.5, -1.5], [1.5, 1.5]), name="unit-ball")

    def normals(x):
        x = _member_check(C, x)
        return ray_cone(x) if np.linalg.norm(x) >= 1 - 1e-12 else zero_cone()

    C.exact_normals = normals
    return C


def halfplane() -> SetOracle:
    C = Preimage(SmoothMap.identity(2), Box([-np.inf, -np.inf], [np.inf, 0.0]), bbox=([-2.0, -2.0], [2.0, 2.0]),
                 name="halfplane")

    def normals(x):
        x = _member_check(C, x)
        return ray_cone(np.array([0.0, 1.0])) if x[1] >= -1e-12 else zero_cone()

    C.exact_normals = normals
    return C


_CATALOG = {
    "parabola-pair": parabola_pair,
    "sawtooth-graph": sawtooth_graph,
    "sawtooth-epigraph": sawtooth_epigraph,
    "power32-graph": power32_graph,
    "parabola-band": parabola_band,
    "quartic-cross": quartic_cross,
    "unit-circle": unit_circle,
    "unit-ball": unit_ball,
    "halfplane": halfplane,
    "parabola-graph": parabola_graph,
    "parabola-epigraph": parabola_epigraph,
    "neg-parabola-epigraph": neg_parabola_epigraph,
}

CONVEX = frozenset({"unit-ball", "halfplane", "parabola-epigraph"})


def names() -> list:
    return sorted(_CATALOG) + ["graph:<expr>", "epigraph:<expr>"]


def catalog(name: str) -> SetOracle:
    """Build a named set. `graph:EXPR` and `epigraph:EXPR` give generic planar variants."""
    if name.startswith("graph:") or name.startswith("epigraph:"):
        kind, src = name.split(":", 1)
        f = parse_expr(src)
        cls = FunctionGraph if kind == "graph" else FunctionEpigraph
        C = cls(f, 2, name=name)
        if C.c1:
            C.preimage = C.as_preimage()
        return C
    if name not in _CATALOG:
        raise KeyError(f"unknown set {name!r}; available: {', '.join(names())}")
    return _CATALOG[name]()


def local_representation(C: SetOracle, x):
    """A C^1 preimage representation of C valid near x, or None."""
    x = as_vec(x, C.dim)
    if C.preimage is not None:
        return C.preimage
    if C.name == "parabola-pair" and x[0] != 0:
        sign = 1.0 if abs(x[1] - x[0] ** 2) <= abs(x[1] + x[0] ** 2) else -1.0
        F = SmoothMap.from_exprs([f"{sign} * x1^2 - x2"], 2)
        r = 0.5 * x[0] ** 2
        return Preimage(F, Singleton([0.0]), center=x, radius=r, name="parabola-pair",
                        projector=C)
    if C.name == "quartic-cross" and x[1] != 0:
        sign = 1.0 if abs(x[0] - x[1] ** 2) <= abs(x[0] + x[1] ** 2) else -1.0
        F = SmoothMap.from_exprs([f"{sign} * x2^2 - x1"], 2)
        return Preimage(F, Singleton([0.0]), center=x, radius=0.5 * x[1] ** 2, name="quartic-cross",
                        projector=C)
    return None
