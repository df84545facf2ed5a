"""Tests for the exact normal-ordered mode algebra and its dense Fock oracle."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from freefields.oscillator import (
    CutoffWarning,
    FockOracle,
    ModeMismatch,
    ModeSpace,
    NormalPoly,
    StatisticsError,
    anticommutator,
    coherent_overlap,
    commutator,
    determinant,
    op_string,
    permanent,
    weyl_vacuum_expectation,
)


# ---------------------------------------------------------------------------
# oracles and helpers

def random_gram(rng, n):
    """Random Hermitian positive-definite Gram matrix."""
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a @ a.conj().T + 0.1 * np.eye(n)


def exact_gram(n):
    """Small rational symmetric positive-definite Gram matrix."""
    a = [[Fraction((i * 7 + j * 3 + 1) % 5 - 2, j + 2) for j in range(n)]
         for i in range(n)]
    return [[sum(a[i][k] * a[j][k] for k in range(n)) + (2 if i == j else 0)
             for j in range(n)] for i in range(n)]


def wick_oracle(gram, anns, creats, fermi):
    """Vacuum value of a_{anns[-1]} .. a_{anns[0]} adag_{creats[0]} ..

    by recursive contraction: anns lists annihilators innermost (rightmost in
    the written string) first, creats lists creators left to right.  The
    innermost annihilator contracts against creator t with a (-1)^t sign for
    fermions, from hopping over the t creators to its left.
    """
    if not anns and not creats:
        return 1
    if len(anns) != len(creats):
        return 0
    total = 0
    for t in range(len(creats)):
        sgn = (-1) ** t if fermi else 1
        rest = creats[:t] + creats[t + 1:]
        total = total + sgn * gram[anns[0]][creats[t]] * wick_oracle(
            gram, anns[1:], rest, fermi)
    return total


def full_string(space, creats, anns):
    """a_{anns reversed} followed by adag_{creats}: the ladder sandwich."""
    ops = [("a", i) for i in reversed(anns)] + [("adag", j) for j in creats]
    return op_string(space, ops)


def random_poly(space, rng, max_deg=3, n_terms=3):
    out = space.one(complex(rng.normal(), rng.normal()))
    for _ in range(n_terms):
        deg = int(rng.integers(1, max_deg + 1))
        ops = [("adag" if rng.random() < 0.5 else "a",
                int(rng.integers(0, space.n))) for _ in range(deg)]
        out = out + complex(rng.normal(), rng.normal()) * op_string(space, ops)
    return out


def brute_permanent(M):
    n = len(M)
    total = 0
    for perm in itertools.permutations(range(n)):
        prod = 1
        for i in range(n):
            prod = prod * M[i][perm[i]]
        total = total + prod
    return total


def brute_determinant(M):
    n = len(M)
    total = 0
    for perm in itertools.permutations(range(n)):
        sgn = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sgn = -sgn
        prod = sgn
        for i in range(n):
            prod = prod * M[i][perm[i]]
        total = total + prod
    return total


def series_apply(mat, vec, n_terms=24):
    """exp(mat) @ vec by plain power series, the oracle exponential."""
    out = vec.astype(complex).copy()
    term = vec.astype(complex).copy()
    for k in range(1, n_terms + 1):
        term = (mat @ term) / k
        out = out + term
    return out


@pytest.fixture
def bose3():
    return ModeSpace(random_gram(np.random.default_rng(11), 3), "bose")


@pytest.fixture
def fermi3():
    return ModeSpace(random_gram(np.random.default_rng(12), 3), "fermi")


# ---------------------------------------------------------------------------
# elementary relations

def test_bose_commutation_relations(bose3):
    sp = bose3
    for i in range(3):
        for j in range(3):
            a_i = sp.annihilation(i)
            c_j = sp.creation(j)
            assert commutator(a_i, c_j) == sp.one(sp.g(i, j))
            assert commutator(a_i, sp.annihilation(j)) == sp.zero()
            assert commutator(sp.creation(i), c_j) == sp.zero()
            # product rule in canonical form
            assert a_i * c_j == sp.one(sp.g(i, j)) + c_j * a_i


def test_fermi_anticommutation_relations(fermi3):
    sp = fermi3
    for i in range(3):
        for j in range(3):
            b_i = sp.annihilation(i)
            d_j = sp.creation(j)
            assert anticommutator(b_i, d_j) == sp.one(sp.g(i, j))
            assert anticommutator(b_i, sp.annihilation(j)) == sp.zero()
            assert anticommutator(sp.creation(i), d_j) == sp.zero()
            assert b_i * d_j == sp.one(sp.g(i, j)) - d_j * b_i
    # nilpotency
    assert sp.annihilation(0) * sp.annihilation(0) == sp.zero()
    assert sp.creation(2) * sp.creation(2) == sp.zero()


def test_vacuum_normalization(bose3, fermi3):
    for sp in (bose3, fermi3):
        assert sp.one().vev() == 1
        assert sp.creation(0).vev() == 0
        assert sp.annihilation(1).vev() == 0
        assert (sp.creation(0) * sp.annihilation(1)).vev() == 0


def test_pair_vev_is_gram(bose3, fermi3):
    for sp in (bose3, fermi3):
        for i in range(3):
            for j in range(3):
                got = (sp.annihilation(i) * sp.creation(j)).vev()
                assert got == sp.g(i, j)


# ---------------------------------------------------------------------------
# Wick closed forms: permanent (bose) and determinant (fermi)

def test_bose_triple_string_permanent(bose3):
    sp = bose3
    G = sp.gram
    s = full_string(sp, creats=(0, 1, 2), anns=(0, 1, 2))
    want = permanent([[G[i][j] for j in range(3)] for i in range(3)])
    scale = abs(want)
    assert abs(s.vev() - want) < 1e-12 * scale
    # independent recursion gives the same value
    w = wick_oracle(G, (0, 1, 2), (0, 1, 2), fermi=False)
    assert abs(s.vev() - w) < 1e-12 * scale
    # dense oracle built from elementary matrices agrees
    fo = FockOracle(sp, cutoff=8)
    m = np.eye(fo.dim, dtype=complex)
    for k in (2, 1, 0):
        m = m @ fo.a_mats[k]
    for k in (0, 1, 2):
        m = m @ fo.adag_mats[k]
    assert abs(fo.vacuum_expectation(m) - s.vev()) < 1e-12 * scale


def test_fermi_string_determinant(fermi3):
    sp = fermi3
    G = sp.gram
    # <b_2 b_1 b_0 bdag_0 bdag_1 bdag_2>: rows index annihilators
    # innermost first, columns index creators left to right.
    s = full_string(sp, creats=(0, 1, 2), anns=(0, 1, 2))
    want = determinant([[G[i][j] for j in range(3)] for i in range(3)])
    scale = max(abs(want), 1.0)
    assert abs(s.vev() - want) < 1e-12 * scale
    assert abs(s.vev() - wick_oracle(G, (0, 1, 2), (0, 1, 2), True)) \
        < 1e-12 * scale
    fo = FockOracle(sp)
    m = np.eye(fo.dim, dtype=complex)
    for k in (2, 1, 0):
        m = m @ fo.a_mats[k]
    for k in (0, 1, 2):
        m = m @ fo.adag_mats[k]
    assert abs(fo.vacuum_expectation(m) - s.vev()) < 1e-12 * scale


def test_exact_rational_wick_n5():
    G = exact_gram(5)
    idx = (0, 1, 2, 3, 4)
    for statistics in ("bose", "fermi"):
        sp = ModeSpace(G, statistics)
        fermi = statistics == "fermi"
        s = full_string(sp, creats=idx, anns=idx)
        closed = (determinant if fermi else permanent)(
            [[G[i][j] for j in idx] for i in idx])
        recursive = wick_oracle(G, idx, idx, fermi)
        assert s.vev() == closed == recursive
        assert isinstance(s.vev(), Fraction)


def test_exact_rational_wick_repeated_modes():
    G = exact_gram(3)
    sp = ModeSpace(G, "bose")
    anns = (0, 0, 1, 2)   # innermost first
    creats = (0, 0, 1, 2)
    s = full_string(sp, creats=creats, anns=anns)
    M = [[G[i][j] for j in creats] for i in anns]
    assert s.vev() == permanent(M) == wick_oracle(G, anns, creats, False)


def test_exact_rational_mixed_string():
    G = exact_gram(4)
    for statistics in ("bose", "fermi"):
        sp = ModeSpace(G, statistics)
        fermi = statistics == "fermi"
        anns = (2, 0, 3)
        creats = (1, 3, 0)
        s = full_string(sp, creats=creats, anns=anns)
        assert s.vev() == wick_oracle(G, anns, creats, fermi)
    # odd-length strings have vanishing vacuum value
    sp = ModeSpace(G, "bose")
    assert full_string(sp, creats=(0, 1), anns=(2,)).vev() == 0


# ---------------------------------------------------------------------------
# ring structure

def test_commutator_with_self_vanishes(bose3, fermi3):
    rng = np.random.default_rng(21)
    for sp in (bose3, fermi3):
        x = random_poly(sp, rng)
        assert commutator(x, x) == sp.zero()


def test_adjoint_involution(bose3, fermi3):
    rng = np.random.default_rng(22)
    for sp in (bose3, fermi3):
        x = random_poly(sp, rng)
        assert x.adjoint().adjoint() == x


def test_adjoint_reverses_products(bose3, fermi3):
    rng = np.random.default_rng(23)
    for sp in (bose3, fermi3):
        x = random_poly(sp, rng)
        y = random_poly(sp, rng)
        lhs = (x * y).adjoint()
        rhs = y.adjoint() * x.adjoint()
        diff = lhs - rhs
        scale = max(lhs.coeff_norm(), 1.0)
        assert diff.coeff_norm() < 1e-12 * scale


def test_vev_of_adjoint_is_conjugate(bose3, fermi3):
    rng = np.random.default_rng(24)
    for sp in (bose3, fermi3):
        x = random_poly(sp, rng, max_deg=4)
        y = random_poly(sp, rng, max_deg=4)
        z = x * y
        assert np.isclose(complex(z.adjoint().vev()),
                          complex(z.vev()).conjugate(), rtol=0, atol=1e-13)


def test_vacuum_positivity(bose3, fermi3):
    rng = np.random.default_rng(25)
    for sp in (bose3, fermi3):
        for _ in range(20):
            x = random_poly(sp, rng)
            val = complex((x.adjoint() * x).vev())
            scale = max(abs(val), 1.0)
            assert val.real >= -1e-11 * scale
            assert abs(val.imag) <= 1e-11 * scale


def test_scalar_arithmetic(bose3):
    sp = bose3
    x = sp.creation(0)
    assert 2 * x + x * 3 == 5 * x
    assert (1 + x) - 1 == x
    assert (x + 2).vev() == 2
    assert x ** 0 == sp.one()
    with pytest.raises(ValueError):
        x ** -1


def test_exact_rational_coefficients_survive():
    sp = ModeSpace(exact_gram(3), "bose")
    z = commutator(sp.annihilation(0), sp.creation(1))
    assert z == sp.one(sp.g(0, 1))
    assert isinstance(z.vev(), Fraction)


# ---------------------------------------------------------------------------
# dense oracle agreement

def test_bose_product_morphism_interior(bose3):
    # images multiply like the polynomials on occupation states far enough
    # below the truncation shell that no path leaves the retained basis
    sp = bose3
    rng = np.random.default_rng(31)
    fo = FockOracle(sp, cutoff=8)
    occ = np.array([sum(s) for s in fo.basis])
    inner = occ <= fo.cutoff - 6
    for _ in range(5):
        x = random_poly(sp, rng)
        y = random_poly(sp, rng)
        got = (fo.matrix_image(x) @ fo.matrix_image(y))[:, inner]
        want = fo.matrix_image(x * y)[:, inner]
        scale = max(np.abs(want).max(), 1.0)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12 * scale)


def test_fermi_product_morphism_exact(fermi3):
    sp = fermi3
    rng = np.random.default_rng(32)
    fo = FockOracle(sp)
    for _ in range(5):
        x = random_poly(sp, rng, max_deg=4)
        y = random_poly(sp, rng, max_deg=4)
        got = fo.matrix_image(x) @ fo.matrix_image(y)
        want = fo.matrix_image(x * y)
        scale = max(np.abs(want).max(), 1.0)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12 * scale)


def test_adjoint_matrix_image(bose3, fermi3):
    rng = np.random.default_rng(33)
    for sp, kw in ((bose3, {"cutoff": 8}), (fermi3, {})):
        fo = FockOracle(sp, **kw)
        x = random_poly(sp, rng)
        got = fo.matrix_image(x.adjoint())
        want = fo.matrix_image(x).conj().T
        scale = max(np.abs(want).max(), 1.0)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12 * scale)


def test_identity_image(bose3, fermi3):
    for sp, kw in ((bose3, {"cutoff": 4}), (fermi3, {})):
        fo = FockOracle(sp, **kw)
        np.testing.assert_array_equal(fo.matrix_image(sp.one()),
                                      np.eye(fo.dim))


def test_fermionic_number_image_square(fermi3):
    # x = bdag_0 b_0 squares to g(0,0) x, and so does its matrix image
    sp = fermi3
    x = sp.creation(0) * sp.annihilation(0)
    assert x * x == sp.g(0, 0) * x
    fo = FockOracle(sp)
    m = fo.matrix_image(x)
    scale = max(np.abs(m).max(), 1.0)
    np.testing.assert_allclose(m @ m, sp.g(0, 0) * m,
                               rtol=0, atol=1e-13 * scale)


def test_oracle_equivalence_bose(bose3):
    sp = bose3
    fo = FockOracle(sp, cutoff=10)
    worst = 0.0
    for trial in range(100):
        rng = np.random.default_rng(4000 + trial)
        x = random_poly(sp, rng, max_deg=4)
        y = random_poly(sp, rng, max_deg=4)
        im_x = fo.matrix_image(x)
        im_y = fo.matrix_image(y)
        prod = im_x @ im_y
        scale = max(x.coeff_norm() * y.coeff_norm(), 1.0)
        worst = max(
            worst,
            abs(complex((x * y).vev()) - fo.vacuum_expectation(prod)) / scale,
            abs(complex(commutator(x, y).vev())
                - fo.vacuum_expectation(prod - im_y @ im_x)) / scale,
            np.abs(fo.state_vector(x * y) - im_x @ (im_y @ fo.vacuum)).max()
            / scale,
        )
    assert worst < 1e-11


def test_oracle_equivalence_fermi(fermi3):
    sp = fermi3
    fo = FockOracle(sp)
    worst = 0.0
    for trial in range(100):
        rng = np.random.default_rng(5000 + trial)
        x = random_poly(sp, rng, max_deg=4)
        y = random_poly(sp, rng, max_deg=4)
        im_x = fo.matrix_image(x)
        im_y = fo.matrix_image(y)
        scale = max(x.coeff_norm() * y.coeff_norm(), 1.0)
        worst = max(
            worst,
            np.abs(im_x @ im_y - fo.matrix_image(x * y)).max() / scale,
            np.abs(im_x @ im_y - im_y @ im_x
                   - fo.matrix_image(commutator(x, y))).max() / scale,
            abs(complex((x * y).vev())
                - fo.vacuum_expectation(im_x @ im_y)) / scale,
        )
    assert worst < 1e-12


def test_state_vector_matches_image(bose3):
    sp = bose3
    fo = FockOracle(sp, cutoff=8)
    x = random_poly(sp, np.random.default_rng(34))
    np.testing.assert_allclose(fo.state_vector(x),
                               fo.matrix_image(x) @ fo.vacuum,
                               rtol=0, atol=1e-13)


# ---------------------------------------------------------------------------
# Gaussian/Weyl closed forms

def test_weyl_trivial_cases():
    sp = ModeSpace([[1.0]], "bose")
    assert weyl_vacuum_expectation(sp, [1.0], [1.0], 0.0) == 1.0
    # single mode, unit Gram, lam = 1: exp(-1/2)
    got = weyl_vacuum_expectation(sp, [1.0], [1.0], 1.0)
    np.testing.assert_allclose(got, np.exp(-0.5), rtol=1e-14)


def test_weyl_matches_series_oracle():
    rng = np.random.default_rng(41)
    sp = ModeSpace(random_gram(rng, 2), "bose")
    fo = FockOracle(sp, cutoff=24)
    for _ in range(3):
        v = 0.5 * (rng.normal(size=2) + 1j * rng.normal(size=2))
        w = 0.5 * (rng.normal(size=2) + 1j * rng.normal(size=2))
        lam = 0.3 + 0.2 * rng.random()
        gen = 1j * lam * (sum(v[i] * fo.a_mats[i] for i in range(2))
                          + sum(w[i] * fo.adag_mats[i] for i in range(2)))
        state = series_apply(gen, fo.vacuum)
        got = complex(fo.vacuum.conj() @ state)
        want = weyl_vacuum_expectation(sp, v, w, lam)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)


def test_coherent_overlap_matches_series_oracle():
    rng = np.random.default_rng(42)
    sp = ModeSpace(random_gram(rng, 2), "bose")
    fo = FockOracle(sp, cutoff=24)
    for _ in range(3):
        abar = 0.6 * (rng.normal(size=2) + 1j * rng.normal(size=2))
        b = 0.6 * (rng.normal(size=2) + 1j * rng.normal(size=2))
        right = series_apply(sum(b[j] * fo.adag_mats[j] for j in range(2)),
                             fo.vacuum)
        full = series_apply(sum(abar[i] * fo.a_mats[i] for i in range(2)),
                            right)
        got = complex(fo.vacuum.conj() @ full)
        np.testing.assert_allclose(got, coherent_overlap(sp, abar, b),
                                   rtol=0, atol=1e-10)


def test_gaussian_closed_forms_reject_fermions(fermi3):
    with pytest.raises(StatisticsError):
        weyl_vacuum_expectation(fermi3, [1, 0, 0], [1, 0, 0], 1.0)
    with pytest.raises(StatisticsError):
        coherent_overlap(fermi3, [1, 0, 0], [0, 1, 0])


# ---------------------------------------------------------------------------
# combinatorial closed forms

def test_permanent_against_brute_force():
    rng = np.random.default_rng(51)
    for n in (1, 2, 3, 4, 5):
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rows = [list(r) for r in M]
        np.testing.assert_allclose(permanent(rows), brute_permanent(rows),
                                   rtol=1e-12)
    exact = [[Fraction(i + 2, j + 3) for j in range(4)] for i in range(4)]
    assert permanent(exact) == brute_permanent(exact)
    assert permanent([]) == 1


def test_permanent_size_limit():
    with pytest.raises(ValueError):
        permanent([[1.0] * 13 for _ in range(13)])


def test_determinant_against_brute_force():
    rng = np.random.default_rng(52)
    for n in (1, 2, 3, 4, 5):
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rows = [list(r) for r in M]
        np.testing.assert_allclose(determinant(rows), np.linalg.det(M),
                                   rtol=1e-10)
    exact = [[Fraction((i * 5 + j * j + 1) % 7, 3) for j in range(5)]
             for i in range(5)]
    assert determinant(exact) == brute_determinant(exact)
    # singular exact matrix, needs the pivoting branch
    sing = [[Fraction(0), Fraction(1)], [Fraction(0), Fraction(2)]]
    assert determinant(sing) == 0
    assert determinant([[Fraction(0), Fraction(1)],
                        [Fraction(1), Fraction(0)]]) == -1


# ---------------------------------------------------------------------------
# validation and failure modes

def test_mode_mismatch(bose3):
    other = ModeSpace(random_gram(np.random.default_rng(61), 3), "bose")
    with pytest.raises(ModeMismatch):
        bose3.creation(0) * other.creation(0)
    with pytest.raises(ModeMismatch):
        bose3.creation(0) + other.annihilation(1)
    fo = FockOracle(other, cutoff=4)
    with pytest.raises(ModeMismatch):
        fo.matrix_image(bose3.creation(0))


def test_statistics_and_gram_validation():
    G = random_gram(np.random.default_rng(62), 2)
    with pytest.raises(StatisticsError):
        ModeSpace(G, "anyon")
    bad = G.copy()
    bad[0, 1] += 0.01
    with pytest.raises(ValueError):
        ModeSpace(bad, "bose")
    # frequency-split bookkeeping must recompose to the full Gram
    sp = ModeSpace(G, "bose", gram_plus=0.3 * G, gram_minus=0.7 * G)
    np.testing.assert_array_equal(sp.gram_plus, 0.3 * G)
    with pytest.raises(ValueError):
        ModeSpace(G, "bose", gram_plus=0.3 * G, gram_minus=0.6 * G)


def test_bosonic_oracle_needs_cutoff(bose3):
    with pytest.raises(ValueError):
        FockOracle(bose3)


def test_cutoff_warning(bose3):
    fo = FockOracle(bose3, cutoff=4)
    x = op_string(bose3, [("adag", 0), ("adag", 1), ("adag", 2)])
    with pytest.warns(CutoffWarning):
        fo.matrix_image(x)


def test_normal_poly_drops_zero_terms(bose3):
    x = NormalPoly(bose3, {((0,), ()): 0.0, ((), (1,)): 2.0})
    assert ((0,), ()) not in x.terms
    assert x.degree() == 1
