import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelsmith.geometry import (GeometryError, ParamCurve, domain_from_spec, interior_probes, make_ar_domain,
                                  make_circle_domain, make_domain_from_curves, refine, spectral_diff,
                                  trig_resample)


@given(st.integers(1, 10), st.sampled_from([32, 64, 128]))
def test_spectral_diff_exact_on_trig_polynomials(k, m):
    t = np.arange(m) / m
    f = np.exp(2j * np.pi * k * t)
    assert np.allclose(spectral_diff(f), 2j * np.pi * k * f, atol=1e-9 * k)


@given(st.integers(0, 12))
def test_trig_resample_preserves_band_limited_signal(k):
    t = np.arange(64) / 64
    f = np.cos(2 * np.pi * k * t) + 0.5j * np.sin(2 * np.pi * 3 * t)
    t2 = np.arange(256) / 256
    g = np.cos(2 * np.pi * k * t2) + 0.5j * np.sin(2 * np.pi * 3 * t2)
    assert np.max(np.abs(trig_resample(f, 256) - g)) < 1e-12


def test_curve_rejects_bad_sample_counts():
    t = np.arange(100) / 100
    with pytest.raises(GeometryError):
        ParamCurve(np.exp(2j * np.pi * t), 2j * np.pi * np.exp(2j * np.pi * t))


def test_circle_domain_orientation_and_counts(c3):
    assert c3.n == 3 and c3.N == 3 * 256
    assert c3.outer.winding(0.0) == pytest.approx(1.0)
    for c, h in zip(c3.inner, c3.hole_points()):
        assert c.winding(h) == pytest.approx(-1.0)


def test_ar_boundary_solves_defining_equation(ar3):
    for c in ar3.curves:
        z = c.samples
        assert np.max(np.abs(np.abs(z + 1 / z) - 3.0)) < 1e-12
        assert c.spectral_deriv_error() < 1e-10


def test_ar_requires_r_above_two():
    with pytest.raises(GeometryError):
        make_ar_domain(1.9)
    with pytest.raises(GeometryError):
        domain_from_spec({"type": "ar", "r": 2.0})


def test_overlapping_holes_rejected():
    with pytest.raises(GeometryError):
        make_circle_domain([0, 0.3, 0.35], [1, 0.2, 0.2])
    with pytest.raises(GeometryError):
        make_circle_domain([0, 0.9], [1, 0.2])


def test_unknown_type_rejected():
    with pytest.raises(GeometryError):
        domain_from_spec({"type": "ellipse"})


def test_curves_orientation_normalized_by_builder():
    outer = (lambda t: 2 * np.exp(2j * np.pi * t), lambda t: 4j * np.pi * np.exp(2j * np.pi * t))
    inner = (lambda t: 0.5 * np.exp(2j * np.pi * t), lambda t: 1j * np.pi * np.exp(2j * np.pi * t))
    d = make_domain_from_curves([inner, outer], 64)
    assert d.n == 2
    assert d.contains(1.0) and not d.contains(0.1) and not d.contains(3.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0, 2 * np.pi))
def test_contains_matches_geometry_on_annulus(annulus, rad, th):
    z = rad * np.exp(1j * th)
    inside = 0.5 < rad < 1.0
    if abs(rad - 0.5) > 1e-6 and abs(rad - 1.0) > 1e-6:
        assert annulus.contains(z) == inside


def test_boundary_distance_on_circle(annulus):
    z = np.array([0.75, 0.6j, -0.9])
    exact = np.minimum(1 - np.abs(z), np.abs(z) - 0.5)
    assert np.max(np.abs(annulus.boundary_distance(z) - exact)) < 1e-3


def test_interior_probes_deterministic_and_guarded(c3):
    a = interior_probes(c3, 30, 0.05)
    b = interior_probes(c3, 30, 0.05)
    assert np.array_equal(a, b)
    assert np.all(c3.contains_many(a)) and np.all(c3.boundary_distance(a) >= 0.05)
    shifted = interior_probes(c3, 10, 0.05, offset=5)
    assert np.array_equal(shifted[:5], a[5:10])


def test_refine_doubles_grid_and_keeps_curve(annulus):
    fine = refine(annulus, 2)
    assert fine.sizes == [512, 512]
    assert np.allclose(fine.points[::2], annulus.points, atol=1e-13)


def test_invariant_report_has_expected_keys(ar3):
    rep = ar3.invariant_report()
    assert isinstance(rep, dict) and rep
