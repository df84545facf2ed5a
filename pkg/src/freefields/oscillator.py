"""Exact normal-ordered operator algebra over a finite mode set.

Modes need not be orthonormal: the (possibly frequency-split) Gram matrix of
their pre-inner products enters every contraction directly, so commutation
relations read [a_i, a_j^dag] = G_ij (bose) and {b_i, b_j^dag} = G_ij
(fermi). Polynomials are kept in a unique canonical normal-ordered form
(creations left, mode indices ascending per block, fermionic signs by counted
transpositions), which makes operator identities exact equality tests; the
coefficient arithmetic is whatever number type the Gram holds, so rational
Grams give exact rational results. A dense truncated-Fock oracle provides the
independent matrix representation used by the verification suites.
"""

from __future__ import annotations

import warnings
from itertools import combinations

import numpy as np


class ModeMismatch(Exception):
    """Operands built over different mode spaces."""


class StatisticsError(Exception):
    """Operation defined only for the other statistics."""


class CutoffWarning(UserWarning):
    """A bosonic matrix image may touch the truncated shell."""


def _conj(c):
    return c.conjugate()


def _sort_signed(seq, fermi):
    """Canonical ascending order of one operator block.

    Returns (tuple, sign); sign is -1/+1 from transposition counting for
    fermi (always +1 for bose), and (None, 0) when a fermionic block repeats
    a mode (nilpotency).
    """
    lst = list(seq)
    sign = 1
    # insertion sort, counting swaps
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
    if fermi:
        for i in range(1, len(lst)):
            if lst[i] == lst[i - 1]:
                return None, 0
        return tuple(lst), sign
    return tuple(lst), 1


class ModeSpace:
    """Finite mode set with statistics and Gram-valued contractions."""

    def __init__(self, gram, statistics, gram_plus=None, gram_minus=None,
                 herm_tol=1e-12, validate=True):
        if statistics not in ("bose", "fermi"):
            raise StatisticsError(f"unknown statistics {statistics!r}")
        self.statistics = statistics
        self.fermi = statistics == "fermi"
        self.gram = gram
        self.n = len(gram)
        self.gram_plus = gram_plus
        self.gram_minus = gram_minus
        self._middle_cache = {}
        if not validate:
            # caller guarantees Hermiticity (e.g. a lazily evaluated Gram
            # whose entries are mirrored on computation)
            return
        num = np.asarray(gram, dtype=object)
        herm = max(abs(complex(num[i, j]) - complex(num[j, i]).conjugate())
                   for i in range(self.n) for j in range(self.n))
        scale = max(max(abs(complex(v)) for v in num.ravel()), 1e-300)
        if herm > herm_tol * scale:
            raise ValueError(f"gram not Hermitian (residual {herm:.3e})")
        if gram_plus is not None and gram_minus is not None:
            for i in range(self.n):
                for j in range(self.n):
                    s = complex(gram_plus[i][j]) + complex(gram_minus[i][j])
                    if abs(s - complex(gram[i][j])) > herm_tol * scale:
                        raise ValueError("gram_plus + gram_minus != gram")

    def g(self, i, j):
        return self.gram[i][j]

    # -- basic polynomials --------------------------------------------------

    def zero(self):
        return NormalPoly(self, {})

    def one(self, c=1):
        return NormalPoly(self, {((), ()): c} if c != 0 else {})

    def creation(self, i):
        return NormalPoly(self, {((i,), ()): 1})

    def annihilation(self, i):
        return NormalPoly(self, {((), (i,)): 1})

    # -- normal-ordering engine ---------------------------------------------

    def _middle(self, beta, alpha):
        """Expansion of a^beta . adag^alpha in written order.

        Returns {(alpha', beta'): coeff} where each key is the surviving
        creation/annihilation string in written (not yet canonical) order.
        """
        key = (beta, alpha)
        hit = self._middle_cache.get(key)
        if hit is not None:
            return hit
        if not beta or not alpha:
            out = {(alpha, beta): 1}
            self._middle_cache[key] = out
            return out
        j = beta[-1]
        rest = beta[:-1]
        sgn = -1 if self.fermi else 1
        out = {}
        for t in range(len(alpha)):
            gval = self.g(j, alpha[t])
            if gval == 0:
                continue
            c = (sgn ** t) * gval
            for (a2, b2), c2 in self._middle(rest, alpha[:t] + alpha[t + 1:]).items():
                k2 = (a2, b2)
                out[k2] = out.get(k2, 0) + c * c2
        c = sgn ** len(alpha)
        for (a2, b2), c2 in self._middle(rest, alpha).items():
            k2 = (a2, b2 + (j,))
            out[k2] = out.get(k2, 0) + c * c2
        self._middle_cache[key] = out
        return out


class NormalPoly:
    """Normal-ordered polynomial: {(creation modes, annihilation modes): c}.

    Both index tuples are ascending; the pair plus coefficient type fully
    determine the operator, so equal operators compare equal.
    """

    __slots__ = ("space", "terms")

    def __init__(self, space, terms):
        self.space = space
        self.terms = {k: c for k, c in terms.items() if c != 0}

    # -- ring structure -----------------------------------------------------

    def _check(self, other):
        if self.space is not other.space:
            raise ModeMismatch("operands from different mode spaces")

    def __add__(self, other):
        if not isinstance(other, NormalPoly):
            return self + self.space.one(other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return NormalPoly(self.space, out)

    __radd__ = __add__

    def __neg__(self):
        return NormalPoly(self.space, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, NormalPoly):
            return self + self.space.one(-other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, NormalPoly):
            return NormalPoly(self.space,
                              {k: c * other for k, c in self.terms.items()})
        self._check(other)
        space = self.space
        fermi = space.fermi
        out = {}
        for (ax, bx), cx in self.terms.items():
            for (ay, by), cy in other.terms.items():
                cxy = cx * cy
                for (am, bm), cm in space._middle(bx, ay).items():
                    alpha, s1 = _sort_signed(ax + am, fermi)
                    if alpha is None:
                        continue
                    beta, s2 = _sort_signed(bm + by, fermi)
                    if beta is None:
                        continue
                    k = (alpha, beta)
                    out[k] = out.get(k, 0) + cxy * cm * (s1 * s2)
        return NormalPoly(space, out)

    def __rmul__(self, other):
        # scalar on the left only (NormalPoly * NormalPoly hits __mul__)
        return NormalPoly(self.space,
                          {k: other * c for k, c in self.terms.items()})

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative operator power")
        out = self.space.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return (isinstance(other, NormalPoly) and self.space is other.space
                and self.terms == other.terms)

    def __hash__(self):
        return hash((id(self.space), frozenset(self.terms.items())))

    # -- structure ----------------------------------------------------------

    def adjoint(self):
        """Hermitian adjoint; an involution that reverses products."""
        fermi = self.space.fermi
        out = {}
        for (a, b), c in self.terms.items():
            alpha, s1 = _sort_signed(tuple(reversed(b)), fermi)
            beta, s2 = _sort_signed(tuple(reversed(a)), fermi)
            k = (alpha, beta)
            out[k] = out.get(k, 0) + _conj(c) * (s1 * s2)
        return NormalPoly(self.space, out)

    def vev(self):
        """Vacuum expectation: the coefficient of the identity term."""
        return self.terms.get(((), ()), 0)

    def degree(self):
        return max((len(a) + len(b) for a, b in self.terms), default=0)

    def coeff_norm(self):
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def __repr__(self):
        bits = []
        for (a, b), c in sorted(self.terms.items()):
            ops = "".join(f"C{i}" for i in a) + "".join(f"A{i}" for i in b)
            bits.append(f"{c!r}*{ops or '1'}")
        return "NormalPoly(" + " + ".join(bits or ["0"]) + ")"


def commutator(x: NormalPoly, y: NormalPoly) -> NormalPoly:
    return x * y - y * x


def anticommutator(x: NormalPoly, y: NormalPoly) -> NormalPoly:
    return x * y + y * x


def op_string(space: ModeSpace, ops) -> NormalPoly:
    """Product of elementary operators: ops = [('adag'|'a', mode), ...]."""
    out = space.one()
    for kind, i in ops:
        out = out * (space.creation(i) if kind == "adag"
                     else space.annihilation(i))
    return out


# ---------------------------------------------------------------------------
# combinatorial closed forms

def permanent(M):
    """Permanent by Ryser's inclusion-exclusion; exact for exact entries.

    Refuses n > 12 (the verification suites never need more).
    """
    n = len(M)
    if n == 0:
        return 1
    if n > 12:
        raise ValueError("permanent limited to n <= 12")
    total = 0
    for r in range(1, n + 1):
        for cols in combinations(range(n), r):
            prod = 1
            for i in range(n):
                s = 0
                for j in cols:
                    s = s + M[i][j]
                prod = prod * s
            total = total + ((-1) ** (n - r)) * prod
    return total


def determinant(M):
    """Determinant by fraction-free (Bareiss) elimination; exact for exact
    entries, stable enough for the float Grams used here."""
    n = len(M)
    if n == 0:
        return 1
    a = [list(row) for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0 * prev
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                if isinstance(num, (int, float, complex)):
                    a[i][j] = num / prev if prev != 1 else num
                else:
                    a[i][j] = num / prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Gaussian/Weyl closed forms (bosonic vacuum)

def weyl_vacuum_expectation(space: ModeSpace, v, w, lam):
    """<exp(i lam (a_v + adag_w))> = exp(-lam^2 (v.G.w)/2).

    v and w are mode-coefficient vectors (a_v = sum_i v_i a_i); the cross
    Gram v.G.w is the only invariant that survives the Gaussian vacuum.
    """
    if space.fermi:
        raise StatisticsError("Weyl closed forms are bosonic")
    G = np.asarray(space.gram, dtype=complex)
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.exp(-0.5 * lam * lam * (v @ G @ w))


def coherent_overlap(space: ModeSpace, abar, b):
    """<0| exp(sum_i abar_i a_i) exp(sum_j b_j adag_j) |0> = exp(abar.G.b)."""
    if space.fermi:
        raise StatisticsError("coherent overlaps are bosonic")
    G = np.asarray(space.gram, dtype=complex)
    abar = np.asarray(abar, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.exp(abar @ G @ b)


# ---------------------------------------------------------------------------
# dense Fock oracle

def _gram_factor(G):
    """L with G = L L^dag; Cholesky when PD, PSD eigen square root otherwise."""
    G = np.asarray(G, dtype=complex)
    G = 0.5 * (G + G.conj().T)
    try:
        return np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        lam, U = np.linalg.eigh(G)
        lam = np.clip(lam, 0.0, None)
        return U * np.sqrt(lam)


class FockOracle:
    """Dense matrix representation on an explicit Fock basis.

    Fermi: exact dimension 2^n via a Jordan-Wigner chain of orthonormal
    modes. Bose: occupation-number basis truncated to total occupation
    <= cutoff, so commutation relations hold exactly on states at least two
    quanta below the cutoff shell. Non-orthonormal physical modes are linear
    combinations a_i = sum_k L_ik c_k with G = L L^dag.
    """

    def __init__(self, space: ModeSpace, cutoff=None):
        self.space = space
        n = space.n
        L = _gram_factor(np.asarray(
            [[complex(space.g(i, j)) for j in range(n)] for i in range(n)]))
        if space.fermi:
            self.cutoff = None
            dim = 2 ** n
            Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
            low = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
            eye = np.eye(2, dtype=complex)
            cs = []
            for k in range(n):
                m = np.eye(1, dtype=complex)
                for l in range(n):
                    m = np.kron(m, Z if l < k else (low if l == k else eye))
                cs.append(m)
        else:
            if cutoff is None:
                raise ValueError("bosonic oracle needs a total-occupation cutoff")
            self.cutoff = int(cutoff)
            basis = []

            def grow(prefix, remaining, modes_left):
                if modes_left == 0:
                    basis.append(tuple(prefix))
                    return
                for occ in range(remaining + 1):
                    grow(prefix + [occ], remaining - occ, modes_left - 1)

            grow([], self.cutoff, n)
            basis.sort()  # all-zero occupation sorts first
            index = {s: i for i, s in enumerate(basis)}
            dim = len(basis)
            cs = []
            for k in range(n):
                m = np.zeros((dim, dim), dtype=complex)
                for s, i in index.items():
                    if s[k] > 0:
                        t = s[:k] + (s[k] - 1,) + s[k + 1:]
                        m[index[t], i] = np.sqrt(s[k])
                cs.append(m)
            self.basis = basis
        self.dim = dim
        self.a_mats = [sum(L[i, k] * cs[k] for k in range(n)) for i in range(n)]
        self.adag_mats = [m.conj().T for m in self.a_mats]
        self.vacuum = np.zeros(dim, dtype=complex)
        if space.fermi:
            self.vacuum[0] = 1.0
        else:
            self.vacuum[self.basis.index((0,) * n)] = 1.0

    def matrix_image(self, x: NormalPoly):
        if x.space is not self.space:
            raise ModeMismatch("polynomial from a different mode space")
        if not self.space.fermi and x.degree() > self.cutoff - 2:
            warnings.warn("operator degree reaches the truncated shell",
                          CutoffWarning, stacklevel=2)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        eye = np.eye(self.dim, dtype=complex)
        for (a, b), c in sorted(x.terms.items()):
            m = eye
            for i in a:
                m = m @ self.adag_mats[i]
            for j in b:
                m = m @ self.a_mats[j]
            out = out + complex(c) * m
        return out

    def vacuum_expectation(self, M):
        """<vac| M |vac> for a dense matrix in this representation."""
        return complex(self.vacuum.conj() @ M @ self.vacuum)

    def state_vector(self, x: NormalPoly):
        """x |vac> as a dense vector."""
        v = np.zeros(self.dim, dtype=complex)
        for (a, b), c in sorted(x.terms.items()):
            w = self.vacuum
            for j in reversed(b):
                w = self.a_mats[j] @ w
            for i in reversed(a):
                w = self.adag_mats[i] @ w
            v = v + complex(c) * w
        return v
