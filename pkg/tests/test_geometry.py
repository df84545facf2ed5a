"""Tests for the fixed Minkowski conventions and pointwise spinor algebra."""

import numpy as np
import pytest

from freefields.geometry import (
    BIV_PAIRS,
    Bivector,
    CONVENTION,
    ConventionError,
    DiracMatrixSet,
    EPSILON,
    METRIC,
    METRIC_SIGNS,
    antisymmetrize2,
    charge_conjugate,
    contract_first,
    hodge_bivector,
    hodge_dual,
    hodge_form,
    minkowski_dot,
    random_onshell_k,
    slash,
    spinor_bar,
    verify_clifford_suite,
    wedge_first,
)


# ---------------------------------------------------------------------------
# independent oracles (written against the definitions, not the library code)

def oracle_epsilon(mu, nu, al, be):
    """Totally antisymmetric symbol via the product-of-differences formula."""
    idx = (mu, nu, al, be)
    prod = 1
    for b in range(4):
        for a in range(b):
            prod *= (idx[b] - idx[a])
    # prod equals eps * prod over the identity permutation (which is positive)
    ref = 1
    for b in range(4):
        for a in range(b):
            ref *= (b - a)
    return prod // ref if prod % ref == 0 else 0


def oracle_hodge_bivector(F):
    """(*F)_{mn} = 1/2 eps_{mn}{}^{ab} F_{ab} by explicit index loops."""
    out = np.zeros((4, 4), dtype=complex)
    s = [1.0, -1.0, -1.0, -1.0]
    for m in range(4):
        for n in range(4):
            acc = 0.0
            for a in range(4):
                for b in range(4):
                    acc += 0.5 * oracle_epsilon(m, n, a, b) * s[a] * s[b] * F[a, b]
            out[m, n] = acc
    return out


def test_epsilon_matches_oracle():
    for m in range(4):
        for n in range(4):
            for a in range(4):
                for b in range(4):
                    assert EPSILON[m, n, a, b] == oracle_epsilon(m, n, a, b)
    assert EPSILON[0, 1, 2, 3] == 1


def test_metric_is_plus_minus_minus_minus():
    np.testing.assert_array_equal(METRIC, np.diag([1.0, -1.0, -1.0, -1.0]))
    np.testing.assert_array_equal(METRIC_SIGNS, [1.0, -1.0, -1.0, -1.0])
    assert CONVENTION.check() == 0.0


def test_minkowski_dot_signature():
    a = np.array([2.0, 1.0, -3.0, 0.5])
    assert minkowski_dot(a, a) == pytest.approx(4.0 - 1.0 - 9.0 - 0.25)
    k = np.array([[1.0, 1.0, 0.0, 0.0], [5.0, 3.0, 0.0, 4.0]])
    np.testing.assert_allclose(minkowski_dot(k, k), [0.0, 0.0], atol=1e-15)


# ---------------------------------------------------------------------------
# Hodge dual

def test_hodge_bivector_matches_index_loop_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        F = antisymmetrize2(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        np.testing.assert_allclose(hodge_bivector(F), oracle_hodge_bivector(F),
                                   rtol=0, atol=1e-14)


def test_hodge_basis_image_e01():
    F = np.zeros((4, 4))
    F[0, 1], F[1, 0] = 1.0, -1.0
    img = hodge_bivector(F)
    want = np.zeros((4, 4))
    want[2, 3], want[3, 2] = -1.0, 1.0
    np.testing.assert_array_equal(img, want)


def test_hodge_anti_involution_on_bivectors():
    rng = np.random.default_rng(12)
    B = antisymmetrize2(rng.normal(size=(40, 4, 4)) + 1j * rng.normal(size=(40, 4, 4)))
    np.testing.assert_allclose(hodge_bivector(hodge_bivector(B)), -B,
                               rtol=0, atol=1e-13)
    # integer components stay exact
    Fi = np.zeros((4, 4))
    Fi[0, 2], Fi[2, 0] = 3.0, -3.0
    Fi[1, 3], Fi[3, 1] = -7.0, 7.0
    np.testing.assert_array_equal(hodge_bivector(hodge_bivector(Fi)), -Fi)


def test_hodge_form_double_dual_signs():
    # ** = -1 on 0- and 2-forms, +1 on 1- and 3-forms (Lorentzian signature)
    rng = np.random.default_rng(13)
    w0 = rng.normal() + 1j * rng.normal()
    np.testing.assert_allclose(hodge_form(hodge_form(w0, 0), 4), -w0,
                               rtol=0, atol=1e-14)
    w1 = rng.normal(size=4) + 1j * rng.normal(size=4)
    np.testing.assert_allclose(hodge_form(hodge_form(w1, 1), 3), w1,
                               rtol=0, atol=1e-14)
    w2 = antisymmetrize2(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    np.testing.assert_allclose(hodge_form(hodge_form(w2, 2), 2), -w2,
                               rtol=0, atol=1e-14)
    w3 = rng.normal(size=(4, 4, 4)) + 1j * rng.normal(size=(4, 4, 4))
    w3 = sum(sgn * np.transpose(w3, perm) for perm, sgn in
             [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
              ((0, 2, 1), -1), ((1, 0, 2), -1), ((2, 1, 0), -1)]) / 6.0
    np.testing.assert_allclose(hodge_form(hodge_form(w3, 3), 1), w3,
                               rtol=0, atol=1e-13)
    w4 = (2.0 - 0.5j) * EPSILON
    np.testing.assert_allclose(hodge_form(hodge_form(w4, 4), 0), -w4,
                               rtol=0, atol=1e-13)


def test_hodge_form_p2_agrees_with_bivector_path():
    rng = np.random.default_rng(14)
    F = antisymmetrize2(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    np.testing.assert_allclose(hodge_form(F, 2), hodge_bivector(F),
                               rtol=0, atol=1e-14)


def test_hodge_dual_on_bivector_class_and_linearity():
    rng = np.random.default_rng(15)
    b = Bivector(rng.normal(size=6) + 1j * rng.normal(size=6))
    c = Bivector(rng.normal(size=6) + 1j * rng.normal(size=6))
    z = 1.3 - 0.4j
    lhs = hodge_dual(b * z + c)
    rhs = hodge_dual(b) * z + hodge_dual(c)
    np.testing.assert_allclose(lhs.six, rhs.six, rtol=0, atol=1e-13)
    # anti-involution and zero map
    np.testing.assert_allclose(hodge_dual(hodge_dual(b)).six, -b.six,
                               rtol=0, atol=1e-13)
    np.testing.assert_array_equal(hodge_dual(Bivector(np.zeros(6))).six,
                                  np.zeros(6))


def test_bivector_roundtrip_and_validation():
    rng = np.random.default_rng(16)
    six = rng.normal(size=6) + 1j * rng.normal(size=6)
    b = Bivector(six)
    np.testing.assert_array_equal(Bivector.from_matrix(b.matrix).six, six)
    assert [tuple(p) for p in BIV_PAIRS] == [(0, 1), (0, 2), (0, 3),
                                             (2, 3), (3, 1), (1, 2)]
    with pytest.raises(ValueError):
        Bivector.from_matrix(np.eye(4))
    with pytest.raises(ValueError):
        Bivector([1.0, 2.0])


def test_wedge_contract_adjoint_pair():
    # <i_k a, b>_{p-1} * (p-1)! vs <a, k^flat ^ b>_p * p! / p  -- check the
    # standard adjointness sum_I (i_k a)_I conj(b)_I relation numerically via
    # full-component contraction with metric raising.
    rng = np.random.default_rng(17)
    k = rng.normal(size=4)
    a2 = antisymmetrize2(rng.normal(size=(4, 4)))
    b1 = rng.normal(size=4)
    ia = contract_first(k, a2, 2)            # one-form  (i_k a)_b = k^a a_ab
    wb = wedge_first(k * METRIC_SIGNS, b1, 1)  # two-form (k_flat ^ b)
    lhs = np.einsum("b,b,b->", ia, METRIC_SIGNS, b1)
    rhs = 0.5 * np.einsum("ab,a,b,ab->", a2, METRIC_SIGNS, METRIC_SIGNS, wb)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-13)


def test_wedge_first_antisymmetry():
    rng = np.random.default_rng(18)
    w = rng.normal(size=4)
    om = antisymmetrize2(rng.normal(size=(4, 4)))
    out = wedge_first(w, om, 2)
    np.testing.assert_allclose(out, -np.transpose(out, (1, 0, 2)),
                               rtol=0, atol=1e-14)
    np.testing.assert_allclose(out, -np.transpose(out, (0, 2, 1)),
                               rtol=0, atol=1e-14)


# ---------------------------------------------------------------------------
# Dirac matrices

@pytest.fixture(params=["standard", "chiral"])
def gs(request):
    return getattr(DiracMatrixSet, request.param)()


def test_clifford_relations(gs):
    for mu in range(4):
        for nu in range(4):
            ac = gs.gamma[mu] @ gs.gamma[nu] + gs.gamma[nu] @ gs.gamma[mu]
            np.testing.assert_array_equal(ac, 2 * METRIC[mu, nu] * np.eye(4))
    # the specific anticommutator used downstream
    g01 = gs.gamma[0] @ gs.gamma[1] + gs.gamma[1] @ gs.gamma[0]
    np.testing.assert_array_equal(g01, np.zeros((4, 4)))


def test_conjugator_and_hermiticity(gs):
    Cinv = np.linalg.inv(gs.C)
    for g in gs.gamma:
        np.testing.assert_allclose(gs.C @ g @ Cinv, -g.T, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(gs.gamma[0].conj().T, gs.gamma[0])
    for i in (1, 2, 3):
        np.testing.assert_array_equal(gs.gamma[i].conj().T, -gs.gamma[i])
    res = gs.residuals()
    assert max(res.values()) <= 1e-14


def test_gamma5_anticommutes(gs):
    for g in gs.gamma:
        np.testing.assert_allclose(gs.gamma5 @ g + g @ gs.gamma5,
                                   np.zeros((4, 4)), rtol=0, atol=1e-15)
    np.testing.assert_allclose(gs.gamma5 @ gs.gamma5, np.eye(4),
                               rtol=0, atol=1e-15)


def test_slash_squares_to_minkowski_norm(gs):
    rng = np.random.default_rng(19)
    k = rng.normal(size=(30, 4))
    sl = slash(k, gs)
    sq = np.einsum("nab,nbc->nac", sl, sl)
    want = minkowski_dot(k, k)[:, None, None] * np.eye(4)
    np.testing.assert_allclose(sq, want, rtol=0, atol=1e-13)


def test_charge_conjugation_bilinear_identities(gs):
    rng = np.random.default_rng(20)
    n = 10_000
    u = rng.normal(size=(n, 4)) + 1j * rng.normal(size=(n, 4))
    v = rng.normal(size=(n, 4)) + 1j * rng.normal(size=(n, 4))
    uc = charge_conjugate(u, gs)
    vc = charge_conjugate(v, gs)
    ucb = spinor_bar(uc, gs)
    vb = spinor_bar(v, gs)
    for mu in range(4):
        lhs = np.einsum("na,ab,nb->n", ucb, gs.gamma[mu], vc)
        rhs = np.einsum("na,ab,nb->n", vb, gs.gamma[mu], u)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13)
    lhs0 = np.einsum("na,na->n", ucb, vc)
    rhs0 = -np.einsum("na,na->n", vb, u)
    np.testing.assert_allclose(lhs0, rhs0, rtol=0, atol=1e-13)


def test_double_charge_conjugation_is_unit_phase(gs):
    rng = np.random.default_rng(21)
    u = rng.normal(size=(50, 4)) + 1j * rng.normal(size=(50, 4))
    ucc = charge_conjugate(charge_conjugate(u, gs), gs)
    # with C = i g2 g0 the phase is exactly +1
    np.testing.assert_allclose(ucc, u, rtol=0, atol=1e-14)
    M = gs.C @ gs.gamma[0].T
    phase_sq = M @ M.conj()
    np.testing.assert_allclose(phase_sq, np.eye(4), rtol=0, atol=1e-15)


def test_charge_conjugate_zero(gs):
    np.testing.assert_array_equal(charge_conjugate(np.zeros(4), gs),
                                  np.zeros(4))


def test_exact_ring_matrices_match_floats(gs):
    ge, Ce = gs.exact()
    for m_exact, m_float in zip(ge + [Ce], gs.gamma + [gs.C]):
        vals = np.array([[complex(m_exact[i, j]) for j in range(4)]
                         for i in range(4)])
        np.testing.assert_array_equal(vals, m_float)


# ---------------------------------------------------------------------------
# on-shell helpers and the verification suite

def test_random_onshell_k_is_on_shell():
    rng = np.random.default_rng(22)
    k = random_onshell_k(rng, 100, mass=1.7)
    np.testing.assert_allclose(minkowski_dot(k, k), np.full(100, 1.7 ** 2),
                               rtol=1e-12)
    assert set(np.sign(k[:, 0])) == {-1.0, 1.0}
    k0 = random_onshell_k(rng, 100, mass=0.0, both_signs=False)
    assert (k0[:, 0] > 0).all()
    np.testing.assert_allclose(minkowski_dot(k0, k0), np.zeros(100),
                               atol=1e-12)


def test_transversal_dual_adjoint_pointwise():
    rng = np.random.default_rng(23)
    k = random_onshell_k(rng, 500)
    f = antisymmetrize2(rng.normal(size=(500, 4, 4)) + 1j * rng.normal(size=(500, 4, 4)))
    g = antisymmetrize2(rng.normal(size=(500, 4, 4)) + 1j * rng.normal(size=(500, 4, 4)))
    vf = np.einsum("na,nam->nm", k, f)
    vg = np.einsum("na,nam->nm", k, g)
    vsf = np.einsum("na,nam->nm", k, hodge_bivector(f))
    vsg = np.einsum("na,nam->nm", k, hodge_bivector(g))
    lhs = np.einsum("nm,m,nm->n", vsf, METRIC_SIGNS, vg)
    rhs = -np.einsum("nm,m,nm->n", vf, METRIC_SIGNS, vsg)
    scale = np.abs(lhs).max() + np.abs(rhs).max()
    assert np.abs(lhs - rhs).max() / scale < 1e-12


def test_verify_clifford_suite_passes():
    rep = verify_clifford_suite()
    assert rep.passed
    names = {c.name for c in rep.checks}
    assert "hodge-basis-image" in names
    assert "standard-clifford" in names and "chiral-clifford" in names


def test_verify_clifford_suite_rejects_corrupted_gamma1():
    bad = DiracMatrixSet.standard()
    bad.gamma[1] = bad.gamma[1] + 1e-6 * np.eye(4)
    with pytest.raises(ConventionError):
        verify_clifford_suite(matrix_sets=[bad])
