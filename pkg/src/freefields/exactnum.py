"""Exact scalar arithmetic for the normal-ordering engines.

The algebra engine is coefficient-agnostic: any scalar type supporting
+, -, * (and conjugation via `sconj`) can be used. Floats/complex give the
fast numeric path; `Fraction` and `Csqrt2` give tolerance-free checks.

`Csqrt2` is the ring Q(i)[sqrt 2]: numbers (p + q i) + (r + s i)*sqrt(2)
with rational p, q, r, s. It is closed under the canonical-variable
substitutions q = (a + a†)/sqrt(2) etc., which is all the exact lanes need.
"""

from __future__ import annotations

from fractions import Fraction


def _cmul(a, b, c, d):
    # (a + b i)(c + d i)
    return a * c - b * d, a * d + b * c


class Csqrt2:
    """Exact (p + q i) + (r + s i) sqrt(2) with Fraction components."""

    __slots__ = ("p", "q", "r", "s")

    def __init__(self, p=0, q=0, r=0, s=0):
        self.p = Fraction(p)
        self.q = Fraction(q)
        self.r = Fraction(r)
        self.s = Fraction(s)

    @classmethod
    def coerce(cls, x):
        if isinstance(x, Csqrt2):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x)
        if isinstance(x, complex) and x.real == int(x.real) and x.imag == int(x.imag):
            return cls(int(x.real), int(x.imag))
        raise TypeError(f"cannot coerce {x!r} into Csqrt2")

    def __add__(self, other):
        o = Csqrt2.coerce(other)
        return Csqrt2(self.p + o.p, self.q + o.q, self.r + o.r, self.s + o.s)

    __radd__ = __add__

    def __neg__(self):
        return Csqrt2(-self.p, -self.q, -self.r, -self.s)

    def __sub__(self, other):
        return self + (-Csqrt2.coerce(other))

    def __rsub__(self, other):
        return Csqrt2.coerce(other) + (-self)

    def __mul__(self, other):
        o = Csqrt2.coerce(other)
        # rational part: a1*a2 + 2*b1*b2, sqrt2 part: a1*b2 + b1*a2
        ap, aq = _cmul(self.p, self.q, o.p, o.q)
        bp, bq = _cmul(self.r, self.s, o.r, o.s)
        rp, rq = _cmul(self.p, self.q, o.r, o.s)
        sp, sq = _cmul(self.r, self.s, o.p, o.q)
        return Csqrt2(ap + 2 * bp, aq + 2 * bq, rp + sp, rq + sq)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return Csqrt2(self.p / f, self.q / f, self.r / f, self.s / f)
        o = Csqrt2.coerce(other)
        # 1/(A + B sqrt2) = (A - B sqrt2) / (A^2 - 2 B^2), A, B in Q(i)
        a2p, a2q = _cmul(o.p, o.q, o.p, o.q)
        b2p, b2q = _cmul(o.r, o.s, o.r, o.s)
        dp, dq = a2p - 2 * b2p, a2q - 2 * b2q  # complex denominator
        n = dp * dp + dq * dq
        if n == 0:
            raise ZeroDivisionError("division by zero in Csqrt2")
        # multiply (A - B sqrt2) by conj(denominator)/|denominator|^2
        num = self * Csqrt2(o.p, o.q, -o.r, -o.s)
        wp, wq = Fraction(dp, n), Fraction(-dq, n)
        return num * Csqrt2(wp, wq)

    def conjugate(self):
        return Csqrt2(self.p, -self.q, self.r, -self.s)

    def __eq__(self, other):
        try:
            o = Csqrt2.coerce(other)
        except TypeError:
            return NotImplemented
        return (self.p, self.q, self.r, self.s) == (o.p, o.q, o.r, o.s)

    def __hash__(self):
        return hash((self.p, self.q, self.r, self.s))

    def is_zero(self):
        return self.p == 0 and self.q == 0 and self.r == 0 and self.s == 0

    def __complex__(self):
        rt2 = 2 ** 0.5
        return complex(float(self.p) + rt2 * float(self.r),
                       float(self.q) + rt2 * float(self.s))

    def __repr__(self):
        return f"Csqrt2({self.p}, {self.q}, {self.r}, {self.s})"


Csqrt2.ZERO = Csqrt2()
Csqrt2.ONE = Csqrt2(1)
Csqrt2.I = Csqrt2(0, 1)
Csqrt2.SQRT2 = Csqrt2(0, 0, 1)
Csqrt2.INV_SQRT2 = Csqrt2(0, 0, Fraction(1, 2))


def sconj(x):
    """Complex conjugate across all supported scalar types."""
    if isinstance(x, (int, float, Fraction)):
        return x
    return x.conjugate()


def is_zero(x):
    """Exact zero test (floats compare against literal 0.0)."""
    if isinstance(x, Csqrt2):
        return x.is_zero()
    return x == 0


def to_complex(x):
    """Numeric value of any supported scalar."""
    return complex(x)
