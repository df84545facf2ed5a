"""Field-operator factory and verification suites for the rank-2 field."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from freefields import emfield as em
from freefields.oscillator import ModeMismatch, permanent
from freefields.packets import (
    SpeciesError,
    bullet,
    conjugate,
    merge_terms,
    random_test_function,
)
from freefields.shell import IdentityFailure


def draw(rng, species="bivector", mass=0.0):
    scale = 0.8 if mass > 0 else 0.5
    return random_test_function(rng, species, n_packets=(1, 1), x0_scale=0.2,
                                p_scale=scale, sigma_eigs=(0.5, 1.0))


@pytest.fixture(scope="module")
def algebra():
    rng = np.random.default_rng(41)
    fs = [draw(rng) for _ in range(3)]
    return em.FieldAlgebra(fs, "bivector", 0.0), fs


# ---------------------------------------------------------------------------
# registry

def test_registry_contains_closure(algebra):
    alg, fs = algebra
    for f in fs:
        for h in (f, conjugate(f), bullet(f), bullet(conjugate(f))):
            alg.mode(h)  # must not raise


def test_double_involution_shares_the_mode(algebra):
    alg, fs = algebra
    for f in fs:
        assert alg.mode(bullet(bullet(f))) == alg.mode(f)


def test_unregistered_function_raises(algebra):
    alg, _ = algebra
    rng = np.random.default_rng(999)
    with pytest.raises(ModeMismatch):
        alg.mode(draw(rng))


def test_wrong_species_raises(algebra):
    alg, _ = algebra
    rng = np.random.default_rng(1)
    with pytest.raises(SpeciesError):
        alg.mode(draw(rng, "pair", 1.0))
    with pytest.raises(SpeciesError):
        em.FieldAlgebra([], species="spinor")


def test_gram_entries_are_hermitian(algebra):
    alg, fs = algebra
    i, j = alg.mode(fs[0]), alg.mode(fs[1])
    assert_allclose(alg._entry(j, i), np.conj(alg._entry(i, j)), rtol=0,
                    atol=0)


# ---------------------------------------------------------------------------
# operators

def test_quantum_field_is_self_adjoint_for_real_argument(algebra):
    alg, fs = algebra
    freal = merge_terms(fs[0] + conjugate(fs[0]))
    alg2 = em.FieldAlgebra([freal], "bivector", 0.0)
    F = alg2.quantum_field(freal)
    assert F == F.adjoint()


def test_raising_part_is_the_creation_operator(algebra):
    alg, fs = algebra
    f = fs[0]
    assert em.raising_part(alg.quantum_field(f)) \
        == alg.space.creation(alg.mode(f))
    assert em.raising_part(alg.random_field(bullet(f))) \
        == alg.space.creation(alg.mode(f))


def test_two_point_tables_match_operator_vevs(algebra):
    alg, fs = algebra
    f, g = fs[0], fs[1]
    for flavor, op in (("quantum", alg.quantum_field),
                       ("random", alg.random_field)):
        got = alg.vev(op(f) * op(g))
        assert_allclose(complex(got), complex(alg.two_point(flavor, f, g)),
                        rtol=1e-12)


def test_quantum_commutator_is_central_on_a_dense_oracle(algebra):
    alg, fs = algebra
    f, g = fs[0], fs[1]
    funcs = [f, conjugate(f), g, conjugate(g)]
    fo, remap = alg.sub_oracle(funcs, cutoff=5)
    occ = np.array([sum(s) for s in fo.basis])
    inner = occ <= fo.cutoff - 2

    def image(h):
        return (fo.a_mats[remap[alg.mode(conjugate(h))]]
                + fo.adag_mats[remap[alg.mode(h)]])

    A, B = image(f), image(g)
    c = alg.commutator_scalar("quantum", f, g)
    M = A @ B - B @ A - c * np.eye(fo.dim)
    assert np.abs(M[np.ix_(inner, inner)]).max() < 1e-12 * abs(c)


def test_random_fields_commute_on_a_dense_oracle(algebra):
    alg, fs = algebra
    f, g = fs[0], fs[1]
    funcs = [bullet(f), bullet(conjugate(f)), bullet(g), bullet(conjugate(g))]
    fo, remap = alg.sub_oracle(funcs, cutoff=5)
    occ = np.array([sum(s) for s in fo.basis])
    inner = occ <= fo.cutoff - 2

    def image(h):
        return (fo.a_mats[remap[alg.mode(bullet(conjugate(h)))]]
                + fo.adag_mats[remap[alg.mode(bullet(h))]])

    A, B = image(f), image(g)
    scale = abs(alg.two_point("random", f, g))
    M = A @ B - B @ A
    assert np.abs(M[np.ix_(inner, inner)]).max() < 1e-9 * max(scale, 1.0)


def test_two_particle_vev_is_a_permanent(algebra):
    alg, fs = algebra
    f_list, g_list = [fs[0], fs[1]], [fs[1], fs[2]]
    M = [[alg.pair(a, b) for b in g_list] for a in f_list]
    s = alg.space.one()
    for fi in reversed(f_list):
        s = s * alg.space.annihilation(alg.mode(fi))
    for gj in g_list:
        s = s * alg.space.creation(alg.mode(gj))
    assert_allclose(complex(s.vev()), complex(permanent(M)), rtol=1e-12)


# ---------------------------------------------------------------------------
# separation scan

def test_separation_scan_frozen_values():
    rng = np.random.default_rng(12345)
    fa, gb = em.scan_packet_pair(rng)
    rows = em.separation_scan(fa, gb, (0.0, 2.0, 4.0, 8.0))
    got = [v for _, v in rows]
    want = [5.987718917306129, 1.0844471417888002, 0.039888004186663745,
            4.1854760722862764e-07]
    assert_allclose(got, want, rtol=1e-5)


def test_scan_csv_format():
    text = em.scan_to_csv([(0.0, 1.5), (2.0, 0.25)])
    assert text == "separation,|commutator|\n0.0,1.5\n2.0,0.25\n"


# ---------------------------------------------------------------------------
# suites

def test_classicality_suite_passes():
    rep = em.classicality_suite(trials=4, rng=3)
    assert rep.passed
    assert [c.name for c in rep.checks] == [
        "random-commutator", "quantum-antisymmetry", "real-self-commutator",
        "translation-invariance", "separation-monotone",
        "separation-suppression"]
    vals = [v for _, v in rep.scan_rows]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_classicality_strict_raises_on_failure():
    # a two-point scan cannot show 1e-6 suppression at one width
    with pytest.raises(IdentityFailure):
        em.classicality_suite(trials=1, rng=3, separations=(0.0, 1.0))


def test_isomorphism_suite_passes():
    rng = np.random.default_rng(5)
    fs = [draw(rng) for _ in range(3)]
    rep = em.isomorphism_suite(fs, rng=7, n_max=3)
    assert rep.passed
    assert [c.name for c in rep.checks] == [
        "duality-involution", "random-two-point-symmetry", "n-particle-gram",
        "random-raising-modes", "real-argument-variance"]


def test_weyl_suite_passes():
    rng = np.random.default_rng(6)
    fs = [draw(rng) for _ in range(2)]
    rep = em.weyl_suite(fs, trials=5, probes=6, rng=8)
    assert rep.passed
    assert [c.name for c in rep.checks] == [
        "quantum-composition", "random-composition", "weyl-unit",
        "weyl-inverse", "weyl-adjoint", "vacuum-expectation-oracle",
        "coherent-state-match", "involution-transpose"]


def test_vacuum_projector_is_not_local():
    rng = np.random.default_rng(9)
    rep = em.vacuum_projector_check(draw(rng), draw(rng), cutoff=5)
    assert rep.passed
    assert len(rep.checks) == 4


def test_vacuum_projector_degenerate_zero():
    from freefields.packets import zero
    rep = em.vacuum_projector_check(zero("bivector"))
    assert rep.passed
    assert rep.checks[0].name == "degenerate-zero"


def test_complex_kg_suite_passes():
    rep = em.complex_kg_suite(trials=4, rng=11)
    assert rep.passed
    assert [c.name for c in rep.checks] == [
        "duality-involution", "component-swap-action", "random-commutator",
        "random-two-point-symmetry", "two-point-table", "mass-decay"]


def test_complex_kg_needs_positive_mass():
    with pytest.raises(ValueError):
        em.complex_kg_suite(trials=1, mass=0.0)


def test_potential_suite_passes():
    rep = em.potential_suite(trials=1, rng=13)
    assert rep.passed
    assert [c.name for c in rep.checks] == [
        "gauge-quantum", "gauge-random", "freq-quantum", "freq-random",
        "two-potential", "helicity-collapse"]


def test_suite_reports_are_deterministic():
    a = em.complex_kg_suite(trials=3, rng=21).to_json()
    b = em.complex_kg_suite(trials=3, rng=21).to_json()
    assert a == b
