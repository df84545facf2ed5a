"""Minkowski-space conventions and pointwise tensor/spinor algebra.

Fixed conventions: metric g = diag(+1,-1,-1,-1), orientation eps_{0123} = +1.
Provides the Hodge dual on p-forms (p = 0..4), on-shell wedge/contraction
helpers used by the k-space exterior calculus, Dirac gamma-matrix sets
(standard and chiral representations) with the charge conjugator C, and the
convention self-check suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np

from .exactnum import Csqrt2
from .report import Report


class ConventionError(Exception):
    """A fixed-convention invariant failed its exactness threshold."""


METRIC_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])
METRIC = np.diag(METRIC_SIGNS)


def _build_epsilon():
    eps = np.zeros((4, 4, 4, 4), dtype=np.int64)
    for perm in permutations(range(4)):
        # sign via transposition count
        p = list(perm)
        sign = 1
        for i in range(4):
            while p[i] != i:
                j = p[i]
                p[i], p[j] = p[j], p[i]
                sign = -sign
        eps[perm] = sign
    return eps


EPSILON = _build_epsilon()          # eps_{mu nu al be}, eps_{0123} = +1

# sign tensors for raising 1, 2, 3 indices at once
_S1 = METRIC_SIGNS
_S2 = np.einsum("a,b->ab", _S1, _S1)
_S3 = np.einsum("a,b,c->abc", _S1, _S1, _S1)
_S4 = np.einsum("ab,cd->abcd", _S2, _S2)


@dataclass(frozen=True)
class MetricConvention:
    """Signature diag(+1,-1,-1,-1) with eps_{0123} = +1."""

    signature: tuple = (1, -1, -1, -1)
    orientation: int = 1

    @property
    def g(self):
        return METRIC

    @property
    def eps(self):
        return EPSILON

    def check(self):
        gi = np.diag(1.0 / METRIC_SIGNS)
        return float(np.abs(gi @ METRIC - np.eye(4)).max())


CONVENTION = MetricConvention()


def minkowski_dot(a, b):
    """a.b with signature (+,-,-,-); vectorized over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def raise_index(w):
    """w^mu = g^{mu nu} w_nu (same components as lowering; vectorized)."""
    return np.asarray(w) * METRIC_SIGNS


# ---------------------------------------------------------------------------
# bivectors and the Hodge dual

BIV_PAIRS = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))


class Bivector:
    """Antisymmetric rank-2 tensor stored by its 6 independent components.

    Component order: (01, 02, 03, 23, 31, 12).
    """

    __slots__ = ("six",)

    def __init__(self, six):
        self.six = np.asarray(six, dtype=complex)
        if self.six.shape != (6,):
            raise ValueError("Bivector needs 6 components")

    @classmethod
    def from_matrix(cls, F):
        F = np.asarray(F, dtype=complex)
        if np.abs(F + F.T).max() > 0:
            # permit tiny numerical asymmetry only if explicitly antisymmetrized
            raise ValueError("matrix is not exactly antisymmetric")
        return cls([F[i, j] for i, j in BIV_PAIRS])

    @property
    def matrix(self):
        F = np.zeros((4, 4), dtype=complex)
        for c, (i, j) in zip(self.six, BIV_PAIRS):
            F[i, j] = c
            F[j, i] = -c
        return F

    def __add__(self, other):
        return Bivector(self.six + other.six)

    def __mul__(self, z):
        return Bivector(self.six * z)

    __rmul__ = __mul__

    def __neg__(self):
        return Bivector(-self.six)


def antisymmetrize2(F):
    return 0.5 * (F - np.swapaxes(F, -1, -2))


def hodge_bivector(F):
    """(*F)_{mu nu} = 1/2 eps_{mu nu}^{al be} F_{al be}; works on (...,4,4)."""
    eps_mixed = EPSILON * _S2  # eps_{mu nu}{}^{al be} = eps_{mu nu al be} s_al s_be
    return 0.5 * np.einsum("...ab,mnab->...mn", np.asarray(F), eps_mixed)


def hodge_dual(b: Bivector) -> Bivector:
    """Hodge dual of a bivector; an anti-involution (** = -1)."""
    return Bivector.from_matrix(hodge_bivector(b.matrix))


def hodge_form(omega, p):
    """Hodge dual of a p-form given as a fully antisymmetric array.

    (*w)_{nu...} = (1/p!) w^{mu_1..mu_p} eps_{mu_1..mu_p nu...}.
    Leading batch axes are allowed; the form occupies the trailing p axes.
    """
    w = np.asarray(omega)
    if p == 0:
        return np.multiply.outer(w, EPSILON.astype(np.float64))
    if p == 1:
        return np.einsum("...a,abcd->...bcd", w * _S1, EPSILON)
    if p == 2:
        return 0.5 * np.einsum("...ab,abcd->...cd", w * _S2, EPSILON)
    if p == 3:
        return (1.0 / 6.0) * np.einsum("...abc,abcd->...d", w * _S3, EPSILON)
    if p == 4:
        return (1.0 / 24.0) * np.einsum("...abcd,abcd->...", w * _S4, EPSILON)
    raise ValueError(f"p must be 0..4, got {p}")


def contract_first(k, omega, p):
    """Interior product with the vector k^mu on the first form index.

    k carries an upper index already; batch axes on k broadcast against the
    constant form. Returns a (p-1)-form.
    """
    k = np.asarray(k)
    w = np.asarray(omega)
    if p == 0:
        raise ValueError("cannot contract a scalar")
    subs = {1: "...a,a->...", 2: "...a,ab->...b", 3: "...a,abc->...bc",
            4: "...a,abcd->...bcd"}
    return np.einsum(subs[p], k, w)


def wedge_first(w1, omega, p):
    """(w ^ omega)_{m0..mp} = sum_i (-1)^i w_{m_i} omega_{m0..^m_i..mp}.

    w1 is a covector (lower index), possibly batched on leading axes; omega a
    constant p-form. Returns a (p+1)-form with batch axes leading.
    """
    w1 = np.asarray(w1)
    om = np.asarray(omega)
    t = np.multiply.outer(w1, om)
    # t axes: [batch..., new, form axes]; batch rank:
    nb = w1.ndim - 1
    out = np.zeros(t.shape, dtype=t.dtype)
    for i in range(p + 1):
        out += ((-1) ** i) * np.moveaxis(t, nb, nb + i)
    return out


# ---------------------------------------------------------------------------
# Dirac matrices

_PAULI = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)


def _block(a, b, c, d):
    return np.block([[a, b], [c, d]])


class DiracMatrixSet:
    """One concrete gamma-matrix representation with its charge conjugator."""

    def __init__(self, gamma, C, gamma5, name):
        self.gamma = [np.asarray(g, dtype=complex) for g in gamma]
        self.C = np.asarray(C, dtype=complex)
        self.gamma5 = np.asarray(gamma5, dtype=complex)
        self.name = name

    @classmethod
    def standard(cls):
        """Diagonal-gamma0 representation; C = i gamma^2 gamma^0."""
        g0 = _block(_I2, _Z2, _Z2, -_I2)
        gi = [_block(_Z2, s, -s, _Z2) for s in _PAULI]
        gamma = [g0] + gi
        C = 1j * gamma[2] @ gamma[0]
        g5 = 1j * gamma[0] @ gamma[1] @ gamma[2] @ gamma[3]
        return cls(gamma, C, g5, "standard")

    @classmethod
    def chiral(cls):
        """Off-diagonal-gamma0 (Weyl) representation; C = i gamma^2 gamma^0."""
        g0 = _block(_Z2, _I2, _I2, _Z2)
        gi = [_block(_Z2, s, -s, _Z2) for s in _PAULI]
        gamma = [g0] + gi
        C = 1j * gamma[2] @ gamma[0]
        g5 = 1j * gamma[0] @ gamma[1] @ gamma[2] @ gamma[3]
        return cls(gamma, C, g5, "chiral")

    def exact(self):
        """The same matrices over the exact ring (entries are 0, ±1, ±i)."""
        out = []
        for g in self.gamma + [self.C]:
            m = np.empty((4, 4), dtype=object)
            for i in range(4):
                for j in range(4):
                    z = g[i, j]
                    m[i, j] = Csqrt2(Fraction(z.real), Fraction(z.imag))
            out.append(m)
        return out[:4], out[4]

    def residuals(self):
        """Max-abs residuals of the defining invariants (floats)."""
        res = {}
        r = 0.0
        for mu in range(4):
            for nu in range(4):
                ac = self.gamma[mu] @ self.gamma[nu] + self.gamma[nu] @ self.gamma[mu]
                r = max(r, np.abs(ac - 2 * METRIC[mu, nu] * np.eye(4)).max())
        res["clifford"] = r
        Cinv = np.linalg.inv(self.C)
        res["conjugator"] = max(
            np.abs(self.C @ g @ Cinv + g.T).max() for g in self.gamma)
        res["hermiticity"] = max(
            np.abs(self.gamma[0].conj().T - self.gamma[0]).max(),
            max(np.abs(self.gamma[i].conj().T + self.gamma[i]).max()
                for i in (1, 2, 3)))
        return res


@dataclass
class SpinorAmplitude:
    """A pointwise 4-spinor value; adjoint taken with gamma^0."""

    components: np.ndarray

    def bar(self, gs: DiracMatrixSet):
        return self.components.conj() @ gs.gamma[0]


def spinor_bar(u, gs: DiracMatrixSet):
    """Row vector u-bar = u^dagger gamma^0; u may have leading batch axes."""
    return np.einsum("...a,ab->...b", np.conj(u), gs.gamma[0])


def charge_conjugate(u, gs: DiracMatrixSet):
    """u^c = C (u-bar)^T; vectorized over leading axes of u."""
    M = gs.C @ gs.gamma[0].T
    return np.einsum("ab,...b->...a", M, np.conj(u))


def slash(k, gs: DiracMatrixSet):
    """k.gamma = k^0 g^0 - k^i g^i for k with upper index; batch-friendly."""
    kl = raise_index(np.asarray(k)) * 1.0  # lower the index: k_mu
    # k_mu gamma^mu; note raise_index doubles as lowering (same signs)
    G = np.stack(gs.gamma)
    return np.einsum("...m,mab->...ab", kl, G)


# ---------------------------------------------------------------------------
# convention verification

def _exact_hodge_check():
    """** = -1 on 2-forms over exact rationals; returns True/False."""
    for i, j in BIV_PAIRS:
        F = [[Fraction(0)] * 4 for _ in range(4)]
        F[i][j] = Fraction(1)
        F[j][i] = Fraction(-1)
        s = [Fraction(x) for x in (1, -1, -1, -1)]

        def star(M):
            out = [[Fraction(0)] * 4 for _ in range(4)]
            for m in range(4):
                for n in range(4):
                    acc = Fraction(0)
                    for a in range(4):
                        for b in range(4):
                            e = int(EPSILON[m, n, a, b])
                            if e:
                                acc += Fraction(e) * s[a] * s[b] * M[a][b]
                    out[m][n] = acc / 2
            return out

        FF = star(star(F))
        for m in range(4):
            for n in range(4):
                if FF[m][n] != -F[m][n]:
                    return False
    return True


def random_onshell_k(rng, n=1, mass=0.0, both_signs=True):
    """Random on-shell wave vectors (k0 = ±sqrt(|k|^2 + m^2))."""
    kv = rng.normal(size=(n, 3))
    k0 = np.sqrt(np.sum(kv ** 2, axis=1) + mass ** 2)
    if both_signs:
        k0 = k0 * rng.choice([-1.0, 1.0], size=n)
    return np.column_stack([k0, kv])


def verify_clifford_suite(matrix_sets=None, tol=1e-14, rng=None) -> Report:
    """Assert all fixed-convention invariants; raise ConventionError on failure.

    Checks both gamma representations, the conjugator identity, exact-rational
    Hodge anti-involution, and the pointwise transversal kernel identity at
    random lightlike k.
    """
    if matrix_sets is None:
        matrix_sets = [DiracMatrixSet.standard(), DiracMatrixSet.chiral()]
    if rng is None:
        rng = np.random.default_rng(2026)
    rep = Report(suite="geometry")

    rep.add("metric-inverse", "g g^{-1} = 1 exactly", CONVENTION.check(), tol)

    for gs in matrix_sets:
        res = gs.residuals()
        for key, val in res.items():
            rep.add(f"{gs.name}-{key}",
                    "gamma-matrix defining relations hold exactly", val, tol)
        ge, Ce = gs.exact()
        ok = True
        for mu in range(4):
            for nu in range(4):
                ac = ge[mu] @ ge[nu] + ge[nu] @ ge[mu]
                want = Csqrt2(Fraction(METRIC[mu, nu] * 2))
                for i in range(4):
                    for j in range(4):
                        target = want if i == j else Csqrt2.ZERO
                        if ac[i, j] != target:
                            ok = False
        rep.add_flag(f"{gs.name}-clifford-exact",
                     "Clifford relations hold in exact rational arithmetic", ok)

    # Hodge dual checks
    rng_b = rng.normal(size=(50, 4, 4)) + 1j * rng.normal(size=(50, 4, 4))
    B = antisymmetrize2(rng_b)
    rr = np.abs(hodge_bivector(hodge_bivector(B)) + B).max()
    rep.add("hodge-anti-involution", "** = -1 on 2-forms", rr, 1e-13)
    rep.add_flag("hodge-exact", "** = -1 on 2-forms over exact rationals",
                 _exact_hodge_check())

    # pinned example: *(e0^e1) has only the (2,3) block, with sign -1
    F01 = np.zeros((4, 4))
    F01[0, 1], F01[1, 0] = 1.0, -1.0
    img = hodge_bivector(F01)
    want = np.zeros((4, 4))
    want[2, 3], want[3, 2] = -1.0, 1.0
    rep.add("hodge-basis-image", "*(e0^e1) = -e2^e3 under eps_{0123}=+1",
            np.abs(img - want).max(), tol)

    # pointwise transversal identity at lightlike k:
    # k^a (*f)_{am} g^{mn} k^b g_{bn} = - k^a f_{am} g^{mn} k^b (*g)_{bn}
    k = random_onshell_k(rng, 200)
    kup = k  # components with upper index
    f = antisymmetrize2(rng.normal(size=(200, 4, 4)) + 1j * rng.normal(size=(200, 4, 4)))
    g = antisymmetrize2(rng.normal(size=(200, 4, 4)) + 1j * rng.normal(size=(200, 4, 4)))
    vf = np.einsum("na,nam->nm", kup, f)
    vg = np.einsum("na,nam->nm", kup, g)
    vsf = np.einsum("na,nam->nm", kup, hodge_bivector(f))
    vsg = np.einsum("na,nam->nm", kup, hodge_bivector(g))
    lhs = np.einsum("nm,m,nm->n", vsf, METRIC_SIGNS, vg)
    rhs = -np.einsum("nm,m,nm->n", vf, METRIC_SIGNS, vsg)
    scale = np.abs(lhs).max() + np.abs(rhs).max()
    rep.add("hodge-transversal-adjoint",
            "contracted-dual adjointness at lightlike k (pointwise)",
            np.abs(lhs - rhs).max() / scale, 1e-12)

    if not rep.passed:
        bad = [c.name for c in rep.checks if not c.passed]
        raise ConventionError(f"convention invariants failed: {bad}")
    return rep
