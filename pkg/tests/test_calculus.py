import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelsmith.calculus import (BoundaryField, GridMismatchError, GuardError, ZeroCountError, argument_count,
                                  boundary_derivative, cauchy_interior, check_points, find_zeros,
                                  holomorphic_defect, integrate_ds, integrate_dz, unit_tangent)
from kernelsmith.geometry import make_circle_domain


def test_arc_length_and_area_integrals(annulus):
    one = BoundaryField(np.ones(annulus.N), annulus)
    assert integrate_ds(one).real == pytest.approx(2 * np.pi * 1.5, rel=1e-14)
    # (1/2i) \oint conj(z) dz is the area
    zbar = BoundaryField(np.conj(annulus.points), annulus)
    assert (integrate_dz(zbar) / 2j).real == pytest.approx(np.pi * 0.75, rel=1e-13)


def test_unit_tangent_is_unimodular(c3):
    T = unit_tangent(c3)
    assert np.max(np.abs(T.abs() - 1)) < 1e-15


@settings(max_examples=20, deadline=None)
@given(st.integers(-4, 6))
def test_cauchy_reproduces_holomorphic_functions(annulus, p):
    f = BoundaryField(annulus.points ** p, annulus)
    z = np.array([0.75, 0.7j, -0.6 - 0.3j])
    assert np.max(np.abs(cauchy_interior(f, z) - z ** p)) < 1e-12
    assert np.max(np.abs(cauchy_interior(f, z, order=1) - p * z ** (p - 1))) < 1e-10


def test_boundary_derivative_of_power(annulus):
    f = BoundaryField(annulus.points ** 3, annulus)
    assert np.max(np.abs(boundary_derivative(f).values - 3 * annulus.points ** 2)) < 1e-11


def test_holomorphic_defect_separates_traces(annulus):
    z = annulus.points
    assert holomorphic_defect(BoundaryField(z ** 2 + 1 / z, annulus)) < 1e-12
    assert holomorphic_defect(BoundaryField(np.conj(z), annulus)) > 0.1


def test_guard_and_outside_points_raise(annulus):
    with pytest.raises(GuardError):
        check_points(annulus, 0.2)
    with pytest.raises(GuardError):
        check_points(annulus, 0.999)
    check_points(annulus, 0.75)


def test_fields_on_different_grids_do_not_mix(annulus):
    other = make_circle_domain([0, 0], [1, 0.5], 256)
    a = BoundaryField(np.ones(annulus.N), annulus)
    b = BoundaryField(np.ones(other.N), other)
    with pytest.raises(GridMismatchError):
        a + b
    with pytest.raises(GridMismatchError):
        BoundaryField(np.ones(10), annulus)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.floats(0.55, 0.95), st.floats(0, 2 * np.pi)), min_size=1, max_size=3, unique=True))
def test_find_zeros_recovers_polynomial_roots(annulus, polar):
    roots = np.array([r * np.exp(1j * t) for r, t in polar])
    d = np.abs(roots[:, None] - roots[None, :]) + np.eye(len(roots))
    if np.min(d) < 0.05 or not np.all(annulus.guard_ok(roots)):
        return
    z = annulus.points
    p = np.poly1d(roots, r=True)
    g, gp = BoundaryField(p(z), annulus), BoundaryField(p.deriv()(z), annulus)
    assert argument_count(g, gp) == pytest.approx(len(roots), abs=1e-8)
    found = np.array(find_zeros(g, gp, len(roots)))
    for r in roots:
        assert np.min(np.abs(found - r)) < 1e-9


def test_find_zeros_wrong_count_raises(annulus):
    z = annulus.points
    g, gp = BoundaryField(z - 0.75, annulus), BoundaryField(np.ones_like(z), annulus)
    with pytest.raises(ZeroCountError):
        find_zeros(g, gp, 2)
