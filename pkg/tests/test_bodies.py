import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vgeo.bodies import Affine, Ball, Box, Halfspaces, HullSlice, Orthant, Product, Singleton, body_from_json


def _bodies():
    return [
        Ball([0.0, 0.0], 1.0),
        Box([-1.0, None], [1.0, 0.5]),
        Orthant(2),
        Orthant(2, "nonnegative"),
        Singleton([0.5, -0.5]),
        Halfspaces([[1.0, 1.0], [-1.0, 0.0]], [1.0, 0.5]),
        Affine([0.0, 1.0], [[1.0], [1.0]]),
        Product([Ball([0.0], 1.0), Singleton([2.0])]),
    ]


def test_ball_projection_radial():
    assert np.allclose(Ball([0, 0], 1).project([2.0, 0.0]), [1.0, 0.0])


def test_box_pins_and_bounds():
    B = Box([0.0, 1.0], [0.0, None])
    assert np.allclose(B.project([3.0, -2.0]), [0.0, 1.0])
    assert not B.has_interior()
    assert B.affine_hull()[1].shape == (2, 1)
    with pytest.raises(ValueError):
        Box([1.0], [0.0])


def test_interior_margin():
    assert Ball([0, 0], 1).interior_margin([0.5, 0.0]) == pytest.approx(0.5)
    assert Orthant(2).interior_margin([-0.2, -0.7]) == pytest.approx(0.2)
    assert Singleton([0.0]).interior_margin([0.0]) <= 0


def test_normal_cone_membership():
    O = Orthant(2)
    assert O.in_normal_cone([0.0, -1.0], [1.0, 0.0])
    assert not O.in_normal_cone([0.0, -1.0], [0.0, 1.0])
    assert Singleton([0.0, 0.0]).in_normal_cone([0.0, 0.0], [3.0, -7.0])


def test_tangent_projection_box():
    O = Orthant(2)
    assert np.allclose(O.project_tangent([0.0, -1.0], [1.0, 1.0]), [0.0, 1.0])
    assert O.tangent_distance([0.0, -1.0], [-1.0, 1.0]) == 0.0


def test_hull_slice_lift():
    D = Product([Orthant(1), Singleton([0.0])])
    p, V = D.affine_hull()
    S = HullSlice(D, p, V)
    assert S.dim == 1
    z = S.lift(np.array([-0.3]))
    assert D.contains(z)


@pytest.mark.parametrize("body", _bodies(), ids=lambda b: b.kind)
def test_json_round_trip(body):
    again = body_from_json(body.to_json())
    y = np.random.default_rng(1).standard_normal((20, body.dim)) * 2
    assert np.allclose(again.project(y), body.project(y), atol=1e-7)


@pytest.mark.parametrize("body", _bodies(), ids=lambda b: b.kind)
def test_projection_idempotent_and_nearest(body):
    rng = np.random.default_rng(7)
    Y = rng.standard_normal((40, body.dim)) * 2
    P = body.project(Y)
    assert np.allclose(body.project(P), P, atol=1e-7)
    # members drawn as projections of other points are never closer than the projection
    M = body.project(rng.standard_normal((200, body.dim)) * 2)
    for y, p in zip(Y, P):
        assert np.linalg.norm(y - p) <= np.min(np.linalg.norm(M - y, axis=1)) + 1e-7


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0, 1))
def test_convexity_segments(seed, t):
    rng = np.random.default_rng(seed)
    for body in _bodies():
        a, b = body.project(rng.standard_normal((2, body.dim)) * 2)
        assert body.contains((1 - t) * a + t * b, 1e-7)
