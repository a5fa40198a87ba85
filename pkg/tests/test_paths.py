import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vgeo.bodies import Orthant, Singleton
from vgeo.catalog import catalog
from vgeo.cones import AmenableRep, CQError
from vgeo.core import SampledCurve, uniform_grid
from vgeo.paths import (Chart, PathError, ReductionError, build_eps_path, build_eps_path_interior,
                        certify_radius, interior_formula, pushforward_path, reduce_representation,
                        straight_segment, verify_eps_path)
from vgeo.oracles import Preimage, SmoothMap


def _epi_rep(x=(0.0, 0.0)):
    return AmenableRep(Preimage(SmoothMap.from_exprs(["x1^2 - x2"], 2), Orthant(1)), x)


def test_segment_in_convex_set_is_exact():
    C = catalog("unit-ball")
    rpt = verify_eps_path(straight_segment([0.1, 0.0], [0.0, 0.3]), C, [0.1, 0.0], [0.0, 0.3], 0.0)
    assert rpt.passed and rpt.achieved == 0.0
    assert rpt.length == pytest.approx(rpt.chord, rel=1e-15)


def test_interior_formula_derived_bounds():
    # gamma' - d = eps |d| (1 - 2t) w, so the deviation peaks at eps; the midline gap is eps t(1-t)|d|
    x, x2, eps, w = np.array([0.2, 0.5]), np.array([-0.3, 0.4]), 0.25, np.array([0.0, 1.0])
    c = interior_formula(x, x2, eps, w, nodes=512)
    C = catalog("parabola-epigraph")
    rpt = verify_eps_path(c, C, x, x2, eps)
    assert rpt.achieved == pytest.approx(eps, abs=1e-12)
    assert rpt.midline_quadratic == pytest.approx(eps / 2, rel=1e-9)
    t = c.grid[(c.grid > 0) & (c.grid < 1)]
    assert rpt.midline_linear == pytest.approx(eps * (1 - t.min()), rel=1e-9)
    assert rpt.passed


def test_verify_rejects_wrong_endpoints_and_infeasible():
    C = catalog("parabola-epigraph")
    with pytest.raises(ValueError):
        verify_eps_path(straight_segment([0, 1], [1, 1]), C, [0, 1], [1, 2], 0.5)
    # chord below the parabola's graph leaves the epigraph of -x^2? use the negated one
    N = catalog("neg-parabola-epigraph")
    seg = straight_segment([-1.0, -1.0], [1.0, -1.0])
    rpt = verify_eps_path(seg, N, [-1.0, -1.0], [1.0, -1.0], 0.5)
    assert not rpt.checks["feasible"] and not rpt.passed


def test_constant_pair():
    C = catalog("unit-ball")
    curve, rpt = build_eps_path(AmenableRep.of(C, [0.0, 0.0]), [0.1, 0.1], [0.1, 0.1], 0.1)
    assert rpt.passed and rpt.length == 0.0


def test_interior_builder_requires_cq():
    rep = AmenableRep(Preimage(SmoothMap.from_exprs(["x1^2 + x2^2"], 2), Orthant(1)), [0.0, 0.0])
    with pytest.raises(CQError):
        build_eps_path_interior(rep, [0.0, 0.0], [0.0, 0.0], 0.1)


def test_chart_on_circle_matches_closed_form():
    C = catalog("unit-circle")
    rep = AmenableRep.of(C, [1.0, 0.0])
    a, b = -0.05, 0.08
    x, x2 = np.array([np.sqrt(1 - a * a), a]), np.array([np.sqrt(1 - b * b), b])
    curve, rpt = build_eps_path(rep, x, x2, 0.5)
    assert rpt.route == "chart" and rpt.passed
    assert np.max(np.abs(np.hypot(*curve.points.T) - 1)) < 1e-9
    # straight chart path u(t) = a + t(b - a) on (sqrt(1 - u^2), u)
    t = uniform_grid(4096)
    u = a + t * (b - a)
    der = np.column_stack([-u * (b - a) / np.sqrt(1 - u * u), np.full_like(u, b - a)])
    d = x2 - x
    dev = np.max(np.linalg.norm(der - d, axis=1)) / np.linalg.norm(d)
    assert rpt.achieved == pytest.approx(dev, rel=1e-3)


def test_chart_and_pushforward():
    F2 = SmoothMap.from_exprs(["x1^2 + x2^2 - 1"], 2)
    ch = Chart(F2, [0.0, 1.0])
    U = np.array([[0.1], [-0.2]])
    P = ch(U)
    assert np.allclose(np.hypot(P[:, 0], P[:, 1]), 1.0, atol=1e-10)
    assert np.allclose(ch.inverse(P[0]), U[0], atol=1e-10)
    inner = SampledCurve.from_function(lambda t: (0.2 * t - 0.1)[:, None], nodes=64)
    out = pushforward_path(ch, inner)
    fd = np.gradient(out.points, out.grid, axis=0)
    assert np.allclose(out.deriv[1:-1], fd[1:-1], atol=1e-4)


def test_reduction_rejects_degenerate_gradient():
    rep = AmenableRep(Preimage(SmoothMap.from_exprs(["x1^2 - x2^2"], 2), Singleton([0.0])), [0.0, 0.0])
    with pytest.raises(ReductionError):
        reduce_representation(rep)


def test_eps_path_outside_chart_raises():
    rep = AmenableRep.of(catalog("unit-circle"), [1.0, 0.0])
    with pytest.raises(PathError):
        build_eps_path(rep, [1.0, 0.0], [-1.0, 0.0], 0.5)


def test_certify_radius_positive():
    r = certify_radius(_epi_rep(), 0.25, seed=1)
    assert 1e-6 <= r <= 0.5


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(0, 0.3), st.floats(-0.3, 0.3), st.floats(0, 0.3), st.sampled_from([0.5, 0.1, 0.02]))
def test_epigraph_pairs_always_pass(a, ha, b, hb, eps):
    x, x2 = np.array([a, a * a + ha]), np.array([b, b * b + hb])
    curve, rpt = build_eps_path(_epi_rep(), x, x2, eps, nodes=256)
    assert rpt.passed
    assert rpt.achieved <= eps * (1 + 1e-9)
    assert rpt.length <= (1 + eps) * rpt.chord + 1e-12
