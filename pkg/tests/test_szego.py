import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import annulus_szego, disc_garabedian, disc_szego, mobius
from kernelsmith.calculus import GuardError, integrate_ds
from kernelsmith.geometry import interior_probes
from kernelsmith.szego import (BasePointError, ahlfors, garabedian_kernel, kerzman_stein_kernel,
                               select_base_point, szego_kernel, szego_solve, szego_zeros, well_resolved,
                               zero_report)


def test_kerzman_stein_kernel_skew_hermitian(c3):
    A = kerzman_stein_kernel(c3)
    assert np.max(np.abs(A + A.conj().T)) < 1e-13


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 0.8), st.floats(0, 2 * np.pi), st.floats(0, 0.8), st.floats(0, 2 * np.pi))
def test_disc_szego_and_garabedian(disc, rz, tz, rw, tw):
    z, w = np.array([rz * np.exp(1j * tz)]), np.array([rw * np.exp(1j * tw)])
    S = szego_kernel(disc, z, w)
    assert np.allclose(S, disc_szego(z, w), rtol=1e-12)
    if abs(z[0] - w[0]) > 1e-2:
        assert np.allclose(garabedian_kernel(disc, z, w), disc_garabedian(z, w), rtol=1e-10)


def test_annulus_szego_matches_series(annulus):
    z = interior_probes(annulus, 6, 0.1)
    w = interior_probes(annulus, 6, 0.1, offset=6)
    ref = annulus_szego(z[:, None], w[None, :], 0.5)
    assert np.max(np.abs(szego_kernel(annulus, z, w) - ref)) / np.max(np.abs(ref)) < 1e-12


def test_szego_hermitian_symmetry(c3):
    z = interior_probes(c3, 6, 0.1)
    S = szego_kernel(c3, z, z)
    assert np.max(np.abs(S - S.conj().T)) < 1e-12
    assert np.all(np.diag(S).real > 0)


def test_reproducing_norm_on_disc(disc):
    sol = szego_solve(disc, 0j)
    assert abs(integrate_ds(sol.s_boundary.conj() * sol.s_boundary) - 1 / (2 * np.pi)) < 1e-12


def test_disc_ahlfors_is_mobius(disc):
    a = 0.3 - 0.2j
    amap = ahlfors(disc, a)
    z = interior_probes(disc, 10, 0.1)
    assert np.max(np.abs(amap.f(z) - mobius(a)(z))) < 1e-12
    assert amap.derivative_at_a == pytest.approx(1 / (1 - abs(a) ** 2), rel=1e-12)


def test_ahlfors_structure_on_three_connected(c3, base_points):
    a = base_points["c3"]
    amap = ahlfors(c3, a)
    assert amap.boundary_modulus_error() < 1e-10
    assert amap.degree() == 3
    assert all(w == 1 for w in amap.curve_windings())
    zs = szego_zeros(c3, a)
    assert len(zs) == 2
    assert np.max(np.abs(amap.f(np.array(zs)))) < 1e-10


def test_zero_report_simple(annulus, base_points):
    rep = zero_report(annulus, base_points["annulus"])
    assert rep["simple"] and rep["inside"] and len(rep["zeros"]) == 1


def test_base_point_walk_escapes_symmetry_center(c3):
    log = []
    a = select_base_point(c3, 1j, start=0j, log=log)
    assert log and log[-1][1] == "ok"
    assert well_resolved(c3, a)


def test_base_point_walk_fails_cleanly_when_start_outside(annulus):
    with pytest.raises(BasePointError):
        select_base_point(annulus, 1.0, start=0.1)


def test_guard_rejects_near_boundary_base(annulus):
    with pytest.raises(GuardError):
        szego_solve(annulus, 0.999)
