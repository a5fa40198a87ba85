import numpy as np
import pytest

from vgeo.catalog import catalog
from vgeo.expr import parse_expr
from vgeo.optimality import (DescentError, backtracking, check_first_order, descent_path, feasible_chords,
                             gradient, recipe_eps)


def test_gradient_quadratic():
    f = parse_expr("x1^2 + 3 * x1 * x2")
    assert np.allclose(gradient(f, [1.0, 2.0]), [8.0, 3.0], atol=1e-8)


def test_recipe_eps():
    assert recipe_eps(np.array([2.0, 0.0]), np.array([-1.0, 0.0])) == 0.5
    assert recipe_eps(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1e-3


def test_first_order_at_minimisers():
    assert check_first_order(parse_expr("x2"), catalog("epigraph:abs(x1)"), [0.0, 0.0]).holds
    assert check_first_order(parse_expr("x1"), catalog("unit-ball"), [-1.0, 0.0]).holds
    assert check_first_order(parse_expr("x1^2 + x2^2"), catalog("unit-circle"), [1.0, 0.0]).holds


def test_first_order_fails_inside():
    fo = check_first_order(parse_expr("x1"), catalog("unit-ball"), [0.0, 0.0])
    assert not fo.holds
    assert fo.value == pytest.approx(-1.0, abs=1e-3)
    assert fo.direction[0] == pytest.approx(-1.0, abs=1e-3)


def test_feasible_chords_on_circle_are_tangent():
    U = feasible_chords(catalog("unit-circle"), [1.0, 0.0], dirs=64)
    assert np.all(np.abs(U[:, 0]) < 2e-3)


def test_descent_power32():
    C = catalog("power32-graph")
    f = parse_expr("x1")
    rep = descent_path(f, C, [0.0, 0.0], v=[-1.0, 0.0])
    assert np.max(C.residual(rep.curve.points)) <= 1e-8
    # the graph is tangent to the x1 axis, so the arc-length slope is -1 to leading order
    assert rep.slope == pytest.approx(-1.0, abs=0.05)
    i = np.searchsorted(rep.curve.grid, rep.t_star, side="right")
    assert np.all(np.diff(rep.values[:i]) < 0)
    assert rep.bound == pytest.approx(-1 + 2 * rep.eps, abs=1e-6)


def test_descent_along_parabola_boundary():
    C = catalog("parabola-epigraph")
    f = parse_expr("x1 + x2")
    v = np.array([-1.0, -2.0]) / np.sqrt(5)
    rep = descent_path(f, C, [1.0, 1.0], v=v)
    assert rep.slope == pytest.approx(-3 / np.sqrt(5), abs=2e-3)
    assert np.max(C.residual(rep.curve.points)) <= 1e-8
    t = backtracking(f, rep)
    assert 0 < t <= rep.t_star
    ft = np.interp(t, rep.curve.grid, rep.values)
    assert ft < rep.values[0]


def test_descent_refused_at_minimiser():
    with pytest.raises(DescentError) as e:
        descent_path(parse_expr("x1"), catalog("unit-ball"), [-1.0, 0.0])
    assert "first_order" in e.value.diagnostics


def test_ascent_direction_rejected():
    with pytest.raises(DescentError):
        descent_path(parse_expr("x1"), catalog("unit-ball"), [0.0, 0.0], v=[1.0, 0.0])


def test_report_rows_and_json():
    rep = descent_path(parse_expr("x1"), catalog("unit-ball"), [0.0, 0.0], v=[-1.0, 0.0])
    rows = list(rep.rows())
    assert len(rows) == rep.curve.grid.size and len(rows[0]) == 4
    js = rep.to_json()
    assert js["f_t_star"] < js["f0"]
