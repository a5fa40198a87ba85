import numpy as np
import pytest

from vgeo.bodies import Orthant, Singleton
from vgeo.catalog import catalog
from vgeo.cones import (AmenableRep, CQError, SamplingError, check_cq, low_discrepancy_directions,
                        regular_normal_sample, tangent_cone_amenable)
from vgeo.oracles import Preimage, SmoothMap


def _rep(exprs, D, x):
    return AmenableRep(Preimage(SmoothMap.from_exprs(exprs, 2), D), x)


def test_cq_holds_with_verifiable_certificate():
    rep = _rep(["x1^2 - x2"], Orthant(1), [0.0, 0.0])
    cert = check_cq(rep)
    assert cert.holds
    # the certificate direction must push F strictly into int D: J w = -w2 < 0
    assert rep.jac @ cert.w < 0
    assert cert.delta > 0 and cert.verify(rep)


def test_cq_fails_with_dual_witness():
    # F = x1^2 + x2^2 <= 0 at 0: the gradient vanishes, y = 1 is a nonzero normal with J^T y = 0
    rep = _rep(["x1^2 + x2^2"], Orthant(1), [0.0, 0.0])
    cert = check_cq(rep)
    assert not cert.holds
    assert cert.y is not None and np.linalg.norm(cert.y) > 0
    assert cert.verify(rep)


def test_cq_equality_needs_reduction():
    rep = _rep(["x1^2 + x2^2 - 1"], Singleton([0.0]), [1.0, 0.0])
    with pytest.raises(CQError):
        check_cq(rep)
    cert = check_cq(rep, reduce=True)
    assert cert.holds and cert.reduced


def test_cq_equality_degenerate_fails():
    rep = _rep(["x1^2 - x2^2"], Singleton([0.0]), [0.0, 0.0])
    assert not check_cq(rep, reduce=True).holds


def test_base_point_outside_set_rejected():
    with pytest.raises(CQError):
        _rep(["x1^2 - x2"], Orthant(1), [0.0, -1.0])


def test_low_discrepancy_directions_unit():
    for n in (1, 2, 3, 5):
        U = low_discrepancy_directions(n, 64)
        assert U.shape == (64, n)
        assert np.allclose(np.linalg.norm(U, axis=1), 1.0)
    # in the plane the angles cover the circle without large gaps
    U = low_discrepancy_directions(2, 256)
    th = np.sort(np.arctan2(U[:, 1], U[:, 0]))
    gaps = np.diff(np.concatenate([th, [th[0] + 2 * np.pi]]))
    assert gaps.max() < 4 * 2 * np.pi / 256


def test_tangent_cone_of_epigraph_at_vertex():
    rep = _rep(["x1^2 - x2"], Orthant(1), [0.0, 0.0])
    T = tangent_cone_amenable(rep, [0.0, 0.0])
    assert len(T) > 50
    # T = {u2 >= 0}
    assert np.all(T.directions[:, 1] >= -0.02)


def test_tangent_cone_of_circle_is_a_line():
    rep = _rep(["x1^2 + x2^2 - 1"], Singleton([0.0]), [1.0, 0.0])
    T = tangent_cone_amenable(rep, [1.0, 0.0], tol=1e-3)
    assert np.all(np.abs(T.directions[:, 0]) <= 1e-3 + 1e-12)
    assert np.any(T.directions[:, 1] > 0.99) and np.any(T.directions[:, 1] < -0.99)


def test_regular_normals_of_ball_boundary():
    N = regular_normal_sample(catalog("unit-ball"), [1.0, 0.0], radius=0.1, dirs=720)
    assert len(N) > 0
    # only the outward ray survives
    assert np.all(N.directions[:, 0] > 0.99)


def test_regular_normals_of_interior_point_empty():
    N = regular_normal_sample(catalog("unit-ball"), [0.0, 0.0], radius=0.1)
    assert len(N) == 0


def test_regular_normal_sampling_needs_points():
    with pytest.raises(ValueError):
        regular_normal_sample(catalog("unit-ball"), [2.0, 0.0], 0.1)
    with pytest.raises(SamplingError):
        regular_normal_sample(catalog("sawtooth-graph"), [0.0, 0.0], 1e-12, samples=20)


def test_exact_catalog_cones():
    Cn = catalog("sawtooth-graph").exact_normals([3 / 8, 1 / 16])
    assert not Cn.clarke_regular()
    assert catalog("unit-circle").exact_normals([1.0, 0.0]).clarke_regular()
    E = catalog("epigraph:abs(x1)")
    assert E.contains([0.0, 0.0])
