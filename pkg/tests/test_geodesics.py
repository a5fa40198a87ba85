import numpy as np
import pytest

from vgeo.catalog import catalog
from vgeo.core import SampledCurve, curve_length
from vgeo.geodesics import (GeodesicError, MultivaluedProjection, averaging_map, fit_sigma,
                            fit_sigma_from_samples, intrinsic_distance_grid, second_difference_bound,
                            verify_averaging_map)


def test_circle_levels_match_regular_polygons():
    C = catalog("unit-circle")
    curve, tr = averaging_map(C, [1.0, 0.0], [0.0, 1.0], levels=12)
    theta = np.pi / 2
    for L, length in enumerate(tr.lengths):
        n = 2**L
        assert length == pytest.approx(2 * n * np.sin(theta / (2 * n)), abs=1e-13)
    for L, disp in enumerate(tr.displacement, start=1):
        # the level-L midpoints bisect arcs of angle theta / 2^(L-1)
        assert disp == pytest.approx(1 - np.cos(theta / 2**L), abs=1e-13)
    assert tr.converged
    assert np.all(np.diff(tr.lengths) >= 0)
    assert np.all(tr.decay_ratios(4, 12) <= 0.26)
    assert curve_length(curve) == pytest.approx(np.pi / 2, abs=1e-6)


def test_convex_set_stops_on_segment():
    C = catalog("unit-ball")
    curve, tr = averaging_map(C, [-0.5, 0.0], [0.5, 0.2])
    assert tr.stopped_early
    assert curve_length(curve) == pytest.approx(np.hypot(1.0, 0.2), rel=1e-14)


def test_antipodal_circle_points_are_rejected():
    with pytest.raises(MultivaluedProjection) as e:
        averaging_map(catalog("unit-circle"), [1.0, 0.0], [-1.0, 0.0])
    assert np.allclose(e.value.point, [0.0, 0.0])


def test_second_difference_bound():
    t = np.linspace(0, 1, 65)
    line = SampledCurve(t, np.column_stack([t, 2 * t]), np.tile([1.0, 2.0], (65, 1)))
    assert second_difference_bound(line) < 1e-9
    arc = SampledCurve(t, np.column_stack([np.cos(t), np.sin(t)]), np.column_stack([-np.sin(t), np.cos(t)]))
    assert second_difference_bound(arc) == pytest.approx(1.0, rel=1e-3)


def test_grid_distance_convex_is_euclidean():
    D = intrinsic_distance_grid(catalog("unit-ball"), [-0.5, -0.2], [0.6, 0.3], pitch=0.02)
    assert D.estimate == pytest.approx(np.hypot(1.1, 0.5), rel=1e-12)


def test_grid_distance_circle_quarter():
    D = intrinsic_distance_grid(catalog("unit-circle"), [1.0, 0.0], [0.0, 1.0], pitch=0.005)
    assert D.estimate == pytest.approx(np.pi / 2, abs=0.01)
    assert D.estimate <= np.pi / 2 + 1e-9 or D.estimate - np.pi / 2 <= 4 * D.pitch


def test_grid_distance_rejects_nonmember():
    with pytest.raises(GeodesicError):
        intrinsic_distance_grid(catalog("unit-circle"), [0.0, 0.0], [1.0, 0.0], pitch=0.01)


def test_grid_distance_keeps_quartic_branches_apart():
    C = catalog("quartic-cross")
    t = 0.5
    D = intrinsic_distance_grid(C, [t**2, t], [t**2, -t], pitch=1 / 200)
    # any path must pass through the origin: at least twice the arc length from (t^2, t) to 0
    s = np.linspace(0, t, 20001)
    arc = np.sum(np.hypot(np.diff(s**2), np.diff(s)))
    assert D.estimate >= 2 * arc * 0.9
    assert D.estimate / (2 * t) >= 1.0


def test_verify_averaging_map_proportional():
    C = catalog("unit-circle")
    curve, _ = averaging_map(C, [1.0, 0.0], [0.0, 1.0], levels=10)
    rep = verify_averaging_map(curve, C, pitch=0.005, eps=0.9)
    assert rep["proportional"]
    assert rep["eps_path"]["passed"]
    # arc-proportional speed: |(pi/2)(-sin, cos) - (-1, 1)| / sqrt(2) peaks at the ends
    assert rep["eps_path"]["achieved"] == pytest.approx(np.sqrt(1 + (np.pi / 2 - 1) ** 2) / np.sqrt(2), abs=2e-3)


def test_sigma_from_exact_cubic():
    d = np.linspace(0.01, 0.2, 30)
    assert fit_sigma_from_samples(d, 0.7 * d**3) == pytest.approx(0.7, rel=1e-12)
    assert fit_sigma_from_samples(d, -d**3) == 0.0
    assert fit_sigma_from_samples([], []) == 0.0


def test_sigma_circle_matches_arcsine_series():
    # 2 arcsin(d/2) = d + d^3/24 + O(d^5)
    fit = fit_sigma(catalog("unit-circle"), [1.0, 0.0], 0.2, pairs=20, seed=3)
    assert fit.sigma * 24 == pytest.approx(1.0, abs=0.02)
    exact = 2 * np.arcsin(fit.d / 2) - fit.d
    assert np.allclose(fit.defect, exact, atol=1e-7)
    assert fit.refit() == pytest.approx(fit.sigma)


def test_sigma_convex_is_zero():
    fit = fit_sigma(catalog("unit-ball"), [0.0, 0.0], 0.5, pairs=10, seed=1)
    assert fit.sigma <= 1e-12
