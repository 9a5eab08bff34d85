import numpy as np
import pytest

from rigidlab import surfaces as sf
from rigidlab.expressions import parse_expression
from rigidlab.geometry import (DegenerateFrameError, GeodesicChartError,
                               brioschi_curvature, codazzi_residual,
                               covariant_hessian, frame_at,
                               geodesic_boundary_chart, interior_points,
                               second_form_derivatives)

CATALOG = [sf.sphere(1.0), sf.sphere(2.0), sf.ellipsoid(), sf.cylinder(1.0),
           sf.saddle(), sf.quartic_cap()]


def test_unit_sphere_frame_at_origin_of_chart():
    fr = frame_at(sf.sphere(1.0), np.array([0.0, 0.0]))
    assert fr.metric == pytest.approx(np.eye(2), abs=1e-14)
    assert fr.normal == pytest.approx(np.array([1.0, 0.0, 0.0]), abs=1e-14)
    assert fr.curvature == pytest.approx(1.0)
    # outward normal and mu > 0 make h = -g here
    assert fr.second_form == pytest.approx(-fr.metric, abs=1e-14)


def test_plane_frame():
    fr = frame_at(sf.plane(), np.array([0.3, -0.2]))
    assert fr.metric == pytest.approx(np.eye(2))
    assert fr.second_form == pytest.approx(np.zeros((2, 2)))
    assert fr.curvature == pytest.approx(0.0)


def test_saddle_curvature_at_origin():
    fr = frame_at(sf.saddle(), np.array([0.0, 0.0]))
    assert fr.curvature == pytest.approx(-4.0)


def test_degenerate_frame_raises():
    with pytest.raises(DegenerateFrameError):
        frame_at(sf.sphere(1.0), np.array([0.1, np.pi / 2]))


def test_covariant_hessian_of_constant_vanishes():
    for surf in (sf.sphere(1.0), sf.saddle()):
        h = covariant_hessian(surf, parse_expression("4", 2),
                              np.array([0.4, 0.2]))
        assert h == pytest.approx(np.zeros((2, 2)), abs=1e-14)


def test_covariant_hessian_of_support_on_cylinder():
    h = covariant_hessian(sf.cylinder(1.0), parse_expression("(1+x2^2)/2", 2),
                          np.array([1.0, 0.3]))
    assert h == pytest.approx(np.diag([0.0, 1.0]), abs=1e-14)


def test_second_form_parallel_on_sphere_and_plane():
    pts = np.array([[0.5, 0.3], [2.0, -0.8]])
    assert np.max(np.abs(second_form_derivatives(sf.sphere(1.0), pts))) < 1e-13
    assert np.max(np.abs(second_form_derivatives(sf.plane(), pts))) < 1e-13


def test_codazzi_residual_on_catalog():
    rng = np.random.default_rng(7)
    for surf in CATALOG:
        pts = interior_points(surf, 40, rng)
        assert np.max(codazzi_residual(surf, pts)) < 1e-8, surf.name


def test_gauss_equation_brioschi_vs_extrinsic():
    rng = np.random.default_rng(11)
    for surf in CATALOG:
        pts = interior_points(surf, 40, rng)
        fr = frame_at(surf, pts, order=3)
        intrinsic = brioschi_curvature(surf, pts, frame=fr)
        scale = np.maximum(1.0, np.abs(fr.curvature))
        assert np.max(np.abs(intrinsic - fr.curvature) / scale) < 1e-6, surf.name


def test_orientation_flip_negates_h_keeps_K():
    surf = sf.sphere(1.0)
    flipped = sf.load_surface({**sf.surface_to_dict(surf),
                               "orientation": "inward"})
    pts = np.array([[0.4, 0.2], [1.1, -0.5]])
    a = frame_at(surf, pts)
    b = frame_at(flipped, pts)
    assert b.normal == pytest.approx(-a.normal)
    assert b.second_form == pytest.approx(-a.second_form)
    assert b.curvature == pytest.approx(a.curvature)


# -- geodesic boundary charts ------------------------------------------------

def test_equator_chart_of_sphere():
    band = sf.spherical_cap(0.0, 1.4)
    chart = geodesic_boundary_chart(band, (1, "lo"), depth=0.8,
                                    n_s=32, n_t=32)
    assert np.max(np.abs(chart.B - np.cos(chart.t)[None, :])) < 1e-10
    assert np.max(np.abs(chart.kg)) < 1e-12          # the equator is geodesic
    assert chart.max_offdiag < 1e-6
    assert chart.max_gtt_error < 1e-10
    assert chart.max_b0_error < 1e-10


def test_flat_disk_chart():
    chart = geodesic_boundary_chart(sf.flat_disk_polar(), (1, "hi"),
                                    depth=0.5, n_s=32, n_t=16)
    assert np.max(np.abs(chart.B - (1.0 - chart.t)[None, :])) < 1e-10
    # inward-t convention: B_t(s, 0) = -1 on the unit circle
    assert chart.kg == pytest.approx(np.full(32, -1.0), abs=1e-12)


def test_spherical_cap_geodesic_curvature():
    lat0 = 0.5
    chart = geodesic_boundary_chart(sf.spherical_cap(lat0, 1.4), (1, "lo"),
                                    depth=0.3, n_s=32, n_t=16)
    assert np.max(np.abs(chart.kg + np.tan(lat0))) < 1e-6
    expected = np.cos(lat0 + chart.t) / np.cos(lat0)
    assert np.max(np.abs(chart.B - expected[None, :])) < 1e-10


def test_geodesic_leaves_domain_raises():
    band = sf.spherical_cap(0.0, 0.4)
    with pytest.raises(GeodesicChartError):
        geodesic_boundary_chart(band, (1, "lo"), depth=0.8, n_s=16, n_t=16)


def test_open_edge_rejected():
    with pytest.raises(GeodesicChartError):
        geodesic_boundary_chart(sf.saddle(), (1, "lo"), depth=0.1)
