import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelsmith import algebra as alg
from kernelsmith.geometry import interior_probes


def synthetic(u, v):
    return alg.SamplePair(np.zeros_like(u), u, v, 0j)


@pytest.fixture(scope="module")
def ar3_fit(ar3):
    pm = alg.ar_proper_map(3.0)
    samples = alg.sample_triple(ar3, pm)
    return pm, samples, alg.ar_kernel_relation(3.0, samples, pm)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.complex_numbers(min_magnitude=0.2, max_magnitude=3))
def test_graph_of_polynomial_has_dv_one(deg, c):
    u = np.exp(2j * np.pi * np.arange(300) / 300) * (0.5 + 0.4 * np.cos(np.arange(300)))
    v = c * u ** deg + 1
    rel = alg.minimal_relation(synthetic(u, v)).relation
    assert (rel.du, rel.dv) == (deg, 1)
    assert rel.validation_residual < 1e-12


def test_square_root_relation_has_dv_two(rng):
    u = rng.normal(size=300) + 1j * rng.normal(size=300)
    v = np.sqrt(u + 2)
    rel = alg.minimal_relation(synthetic(u, v)).relation
    assert (rel.du, rel.dv) == (1, 2)
    roots = np.array([rel.v_roots(x) for x in u[:5]])
    for vv, rr in zip(v[:5], roots):
        assert np.min(np.abs(rr - vv)) < 1e-8


def test_disc_pair_relation_is_constant(disc):
    samples = alg.sample_pair(disc, alg.disc_identity_map(), 0j, count=100)
    assert np.allclose(samples.v, 1 / np.pi)
    rel = alg.minimal_relation(samples).relation
    assert (rel.du, rel.dv) == (0, 1)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
@settings(max_examples=20, deadline=None)
def test_fit_is_scale_invariant(su, sv):
    t = np.linspace(0, 1, 200)
    u = np.exp(2j * np.pi * t) * (1 + 0.3 * t)
    v = u ** 2 - 3 * u + 0.5j
    a = alg.fit_relation(synthetic(u, v), 2, 1)
    b = alg.fit_relation(synthetic(su * u, sv * v), 2, 1)
    phase = np.vdot(b.coeffs.ravel(), a.coeffs.ravel())
    phase /= abs(phase)
    assert np.max(np.abs(a.coeffs - phase * b.coeffs)) < 1e-10


def test_too_few_samples_rejected():
    u = np.linspace(0, 1, 10) + 0j
    with pytest.raises(ValueError):
        alg.fit_relation(synthetic(u, u), 3, 3)


def test_no_relation_raises(rng):
    u = rng.normal(size=400) + 1j * rng.normal(size=400)
    v = rng.normal(size=400) + 1j * rng.normal(size=400)
    with pytest.raises(alg.NoRelationFound):
        alg.minimal_relation(synthetic(u, v), max_degree=4)


def test_approximant_not_mistaken_for_identity(rng):
    # exp is approximated geometrically fast; no low bidegree is flat enough to pass
    u = rng.normal(size=400) + 1j * rng.normal(size=400)
    scan = alg.scan_until(synthetic(u, np.exp(u)), max_degree=3)
    assert scan.relation is None


def test_b_at_critical_point_rejected(ar3):
    with pytest.raises(ValueError):
        alg.sample_pair(ar3, alg.ar_proper_map(3.0), 1.0 + 1e-4j)


def test_relation_json_roundtrip(ar3):
    pm = alg.ar_proper_map(3.0)
    rel = alg.minimal_relation(alg.sample_pair(ar3, pm, 0.9 + 0.3j, count=300)).relation
    d = json.loads(rel.to_json())
    assert (d["du"], d["dv"]) == (rel.du, rel.dv)
    assert rel.dv == 2


def test_separation_of_primitive_pair(ar3):
    pm = alg.ar_proper_map(3.0)
    b = alg.choose_b(ar3, pm, 0.9 + 0.3j)
    assert alg.separation_test(pm, b, ar3)


def test_derivative_roots_are_both_branches():
    r, x = 3.0, 0.3 + 0.2j
    z = alg.ar_preimages(r, x)
    fp = alg.ar_proper_map(r).fp(z)
    got = np.sort_complex(alg.ar_derivative_roots(r, x))
    assert np.allclose(got, np.sort_complex(fp), atol=1e-13)


def test_invariant_symmetric_under_negation(ar3):
    pm = alg.ar_proper_map(3.0)
    z = interior_probes(ar3, 8, 0.05, avoid=[1, -1], avoid_dist=0.1)
    w = interior_probes(ar3, 8, 0.05, offset=8, avoid=[1, -1], avoid_dist=0.1)
    I0 = alg.invariant_I(ar3, pm, z, w)
    assert np.max(np.abs(alg.invariant_I(ar3, pm, -z, -w) - I0)) < 1e-10 * np.max(np.abs(I0))


def test_invariant_guard_near_critical_point(ar3):
    with pytest.raises(ValueError):
        alg.invariant_I(ar3, alg.ar_proper_map(3.0), [1.0 + 1e-5j], [0.5j])


def test_trivariate_structure(ar3_fit):
    pm, samples, fit = ar3_fit
    inv = fit.invariant
    assert (inv.dk, inv.dx, inv.dy) == (2, 6, 6)
    assert fit.k_degree == 4 * inv.dk
    assert fit.held_out_root_error < 1e-5
    assert alg.hermitian_swap_residual(samples, fit.relation) < 1e-10
    assert alg.shuffled_control(samples, fit, pm) > 1e-2


def test_kernel_roots_contain_true_value(ar3, ar3_fit):
    pm, samples, fit = ar3_fit
    z, w = 1.3 + 0.4j, 0.4 + 1.0j
    K = alg.bergman_oracle(ar3)([z], [w])[0, 0]
    roots = fit.relation.k_roots(pm.f(z), np.conj(pm.f(w)))
    assert len(roots) == fit.k_degree
    assert np.min(np.abs(roots - K)) / abs(K) < 1e-5


def test_branch_points_outside_domain(ar3, ar3_fit):
    _, _, fit = ar3_fit
    zb = alg.kernel_branch_points(fit, 0.4 + 1.0j)
    assert len(zb) > 0
    assert not any(ar3.contains(z) for z in zb)
    assert np.min(np.abs(zb - 4.2656)) < 1e-2


def test_loop_path_is_closed():
    p = alg.loop_path(1 + 1j, 3.0, 0.5)
    assert p[0] == p[-1]
    ring = p[12:-11]
    assert np.allclose(np.abs(ring - 3.0), 0.5)


def test_continuation_trace_csv(ar3, ar3_fit):
    pm, _, fit = ar3_fit
    w = 0.4 + 1.0j
    path = np.linspace(1.5 + 0.2j, 1.2 + 0.5j, 3)
    seed = alg.bergman_oracle(ar3)([path[0]], [w])[0, 0]
    tr = alg.continue_kernel(fit.relation, pm.f, w, path, seed)
    lines = tr.to_csv().splitlines()
    assert lines[0].startswith("re_z,im_z,re_k,im_k,re_root0")
    assert len(lines) == len(tr.points) + 1
    assert tr.branch_count == fit.k_degree
