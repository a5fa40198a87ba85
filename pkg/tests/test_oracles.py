import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from vgeo.bodies import Ball, Orthant, Singleton
from vgeo.catalog import (CONVEX, catalog, local_representation, names, sawtooth, sawtooth_kinks,
                          sawtooth_slopes)
from vgeo.oracles import (DEFAULT_PROJECTION, FunctionGraph, GridCloud, Preimage, ProjectionError,
                          SmoothMap)

CATALOG = [n for n in names() if ":" not in n]


def _brute_power32(t):
    """Nearest points of {(x, |x|^1.5)} to (0, t) by dense 1-D search plus bounded refinement."""
    xs = np.linspace(0, 1, 200_001)
    d2 = xs**2 + (t - xs**1.5) ** 2
    i = int(np.argmin(d2))
    res = minimize_scalar(lambda x: x**2 + (t - x**1.5) ** 2, bounds=(xs[max(i - 1, 0)], xs[i + 1]),
                          method="bounded", options={"xatol": 1e-14})
    return res.x, np.sqrt(res.fun)


def test_membership_examples():
    S = catalog("sawtooth-graph")
    assert S.contains([3 / 16, 1 / 64], 1e-12)
    P = catalog("parabola-pair")
    assert P.contains([1.0, 1.0])
    assert not P.contains([1.0, 0.5])
    E = Preimage(SmoothMap.from_exprs(["x1^2 - x2"], 2), Orthant(1))
    assert E.contains([1.0, 2.0])
    assert catalog("parabola-band").contains([0.5, 0.2])
    assert catalog("quartic-cross").contains([0.25, 0.5])
    assert catalog("sawtooth-graph").contains([3 / 8, 1 / 16])


def test_sawtooth_values():
    assert sawtooth(3 / 8) == 1 / 16
    assert sawtooth(3 / 16) == 1 / 64
    assert sawtooth(0.0) == 0.0 and sawtooth(-1.0) == 0.0 and sawtooth(0.75) == 0.0
    assert sawtooth(0.5) == 0.0 and sawtooth(0.25) == 0.0
    # k-th tooth: rises with slope 2^-k then falls with slope -2^-k
    for k in range(1, 30):
        a = 3 * 2.0 ** -(k + 2)
        assert sawtooth(a) == pytest.approx(2.0 ** -(2 * k + 2), rel=1e-15)
        assert sawtooth_slopes(a) == (2.0**-k, -(2.0**-k))
    apex, trough = sawtooth_kinks(5)
    assert np.allclose(apex[:, 1], sawtooth(apex[:, 0]))
    assert np.all(trough[:, 1] == 0)


def test_sawtooth_lipschitz_modulus_shrinks():
    x = np.linspace(1e-9, 0.5, 400_001)
    f = sawtooth(x)
    for r in (0.5, 0.25, 0.125, 1 / 16):
        m = x <= r
        slope = np.max(np.abs(np.diff(f[m]) / np.diff(x[m])))
        assert slope <= 2 * r + 1e-9


def test_ball_projection():
    B = catalog("unit-ball")
    out = B.project([2.0, 0.0])
    assert len(out) == 1 and np.allclose(out[0], [1.0, 0.0])


@pytest.mark.parametrize("t", [0.1, 0.05, 0.2])
def test_power32_projection_two_symmetric_points(t):
    C = catalog("power32-graph")
    pts = C.project([0.0, t])
    assert len(pts) == 2
    xb, db = _brute_power32(t)
    # brute force agrees with the stationarity equation in s = sqrt(x): 2s + 3s^3 = 3t
    s = brentq(lambda s: 2 * s + 3 * s**3 - 3 * t, 0, 1)
    assert xb == pytest.approx(s * s, abs=1e-7)
    xs = sorted(p[0] for p in pts)
    assert xs[0] == pytest.approx(-xb, abs=1e-6) and xs[1] == pytest.approx(xb, abs=1e-6)
    for p in pts:
        assert np.linalg.norm(p - [0.0, t]) == pytest.approx(db, abs=1e-9)
    assert db < t  # both beat (0, 0)


def test_circle_center_projection_all_at_distance_one():
    pts = catalog("unit-circle").project([0.0, 0.0])
    assert len(pts) >= 2
    for p in pts:
        assert np.linalg.norm(p) == pytest.approx(1.0, abs=1e-12)


def test_unknown_catalog_name_lists_available():
    with pytest.raises(KeyError) as e:
        catalog("no-such-set")
    assert "parabola-pair" in str(e.value)


def test_generic_graph_names():
    G = catalog("graph:x1^3")
    assert G.contains([0.5, 0.125])
    E = catalog("epigraph:abs(x1)")
    assert E.contains([0.2, 0.5]) and not E.contains([0.2, 0.1])


@pytest.mark.parametrize("name", CATALOG)
def test_projection_is_member_and_not_beaten(name):
    """Random queries: outputs are members and no dense member sample is strictly closer."""
    C = catalog(name)
    rng = np.random.default_rng(3)
    lo, hi = C.bbox
    lo, hi = np.maximum(lo, -1.2), np.minimum(hi, 1.2)
    dense = C.sample(np.zeros(C.dim), 1.5, 20_000, rng)
    queries = lo + (hi - lo) * rng.random((1000 if C.kind == "curve-union" else 120, C.dim))
    for q in queries:
        out = C.project(q)
        assert out
        best = np.linalg.norm(out[0] - q)
        for p in out:
            assert C.contains(p, 1e-8)
        assert np.min(np.linalg.norm(dense - q, axis=1)) >= best - DEFAULT_PROJECTION.cluster


def test_preimage_membership_monotone_in_tol():
    C = catalog("parabola-band")
    X = np.random.default_rng(0).uniform(-1, 1, (500, 2))
    prev = C.members(X, 0.0)
    for tol in (1e-6, 1e-3, 1e-1):
        cur = C.members(X, tol)
        assert np.all(cur | ~prev)
        prev = cur


def test_preimage_domain_ball():
    C = Preimage(SmoothMap.identity(2), Ball([0, 0], 1.0), center=[0, 0], radius=0.5)
    assert C.contains([0.4, 0.0])
    assert not C.contains([0.8, 0.0])


def test_generic_preimage_projection():
    # circle as F^-1(0) with no special projector: multistart local solver
    C = Preimage(SmoothMap.from_exprs(["x1^2 + x2^2 - 1"], 2), Singleton([0.0]), bbox=([-2, -2], [2, 2]))
    p = C.project([2.0, 0.0])[0]
    assert np.allclose(p, [1.0, 0.0], atol=1e-7)


def test_projection_error_when_nothing_found():
    G = GridCloud(np.array([[0.0, 0.0]]), 0.1)
    assert G.project([1.0, 1.0])[0].tolist() == [0.0, 0.0]
    with pytest.raises(ProjectionError):
        FunctionGraph(lambda U: np.full(U.shape[0], np.nan), 2, ([-1, -1], [1, 1])).project([0.0, 0.0])


def test_smooth_map_features():
    F = SmoothMap.from_exprs(["x1^2 - x2", "x1 * x2"], 2)
    assert F.c1
    assert np.allclose(F.jacobian([1.0, 2.0]), [[2.0, -1.0], [2.0, 1.0]], atol=1e-7)
    assert F([1.0, 2.0]).shape == (2,)
    assert F(np.ones((3, 2))).shape == (3, 2)
    A = np.array([[1.0, 2.0]])
    L = SmoothMap.linear(A, [1.0])
    assert np.allclose(L.jacobian([0.0, 0.0]), A)
    assert np.allclose(L.scaled(2.0)([1.0, 1.0]), [8.0])
    assert not SmoothMap.from_exprs(["abs(x1)"]).c1


def test_mirror_and_family():
    P = catalog("parabola-pair")
    x = np.asarray(P.family(1 / 3))
    assert np.allclose(x, [1 / 3, 1 / 9])
    assert np.allclose(P.reflect(x), [1 / 3, -1 / 9])
    assert P.contains(P.reflect(x))


def test_local_representation_away_from_origin():
    rep = local_representation(catalog("parabola-pair"), [0.5, 0.25])
    assert rep is not None and rep.contains([0.5, 0.25])


def test_convex_catalog_flag():
    assert {"unit-ball", "halfplane"} <= set(CONVEX)


def test_grid_cloud_oracle():
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    G = GridCloud(pts, 0.1)
    assert G.contains([0.05, 0.0]) and not G.contains([0.5, 0.0])
    assert np.allclose(G.snap([[0.9, 0.1]]), [[1.0, 0.0]])
