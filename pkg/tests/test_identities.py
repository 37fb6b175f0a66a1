import numpy as np
import pytest

from kernelsmith.geometry import make_circle_domain
from kernelsmith.identities import (biholo_transport_check, build_generator_set, check_boundary_identities, cramer,
                                    fit_expansions, generated_map, green_factorization_check, reconstruct_bergman,
                                    reconstruction_check, report_json)
from kernelsmith.szego import ahlfors


@pytest.fixture(scope="module")
def annulus_gen(annulus, base_points):
    gs = build_generator_set(annulus, base_points["annulus"])
    return gs, fit_expansions(annulus, gs)


def test_cramer_matches_solve(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    r = rng.normal(size=4) + 0j
    assert np.allclose(cramer(A, r), np.linalg.solve(A, r), atol=1e-12)


def test_generator_set_structure(c3, base_points):
    gs = build_generator_set(c3, base_points["c3"])
    n = c3.n
    assert gs.points[0] == gs.a
    assert len(gs.zeros) == n - 1
    assert len(gs.points) <= n * n - 2 * n + 2
    assert gs.zero_set(0) == tuple(range(n))
    for k in range(1, n):
        zs = gs.zero_set(k)
        assert len(zs) == n and zs[0] == k and 0 in zs
    with pytest.raises(KeyError):
        gs.index(123.0)


def test_disc_generator_set_is_single_point(disc):
    gs = build_generator_set(disc, 0.2j)
    assert gs.points == (0.2j,) and gs.basis(np.array([0.1])).shape == (1, 0)


def test_fitted_matrices_hermitian(annulus_gen):
    _, ex = annulus_gen
    for M in (ex.A, ex.lam):
        assert np.max(np.abs(M - M.conj().T)) < 1e-8 * np.max(np.abs(M))


def test_generated_map_recovers_ahlfors(annulus, annulus_gen):
    gs, _ = annulus_gen
    gm = generated_map(gs, 0)
    z = np.array([0.7, -0.75j, 0.6 + 0.4j])
    assert np.max(np.abs(gm.f(z) - gs.maps[0].f(z))) < 1e-10


def test_boundary_identities_all_pass(c3, base_points):
    gs = build_generator_set(c3, base_points["c3"])
    recs = check_boundary_identities(c3, gs)
    assert len(recs) >= 5 and all(r.passed for r in recs)
    assert '"id"' in report_json(recs)


def test_green_factorization_on_ar(ar3, base_points):
    assert green_factorization_check(ar3, ahlfors(ar3, base_points["ar3"])).passed


def test_reconstruction_against_oracle(annulus_gen):
    gs, ex = annulus_gen
    rec, info = reconstruction_check(gs, reconstruct_bergman(gs, ex))
    assert rec.passed and info["max_rel_error"] < 1e-6


def test_scaling_transport_between_domains(annulus):
    big = make_circle_domain([0, 0], [2, 1])
    recs = biholo_transport_check(annulus, big, lambda z: 2 * z, lambda z: 2 * np.ones_like(z), count=20,
                                  label="scale")
    assert all(r.passed for r in recs), [r.to_dict() for r in recs if not r.passed]
