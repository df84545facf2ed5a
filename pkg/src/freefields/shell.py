"""Mass-shell pre-inner products (f,g)± for every field species.

The measure is the on-shell reduction 2*pi*delta(k.k - m^2) theta(±k0)
d4k/(2pi)^4 -> d3k / ((2pi)^3 2 omega_k). Massive kernels integrate with 3D
Gauss-Hermite adapted to the packet pair (center and covariance from the
combined Gaussian envelopes, order bumped for center-offset oscillations);
massless kernels use spherical coordinates (radial Gauss-Legendre on an
adaptively truncated interval times an angular product rule), which cancels
the 1/(2|k|) weight against the Jacobian. Every product is computed at two
consecutive orders and accepted only when doubling changes it by less than
the configured tolerance.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import DiracMatrixSet, hodge_form, raise_index
from .packets import (FORM_DEGREE, SPECIES_SHAPES, SpeciesError, TestFunction,
                      conjugate, translate)
from .report import Report


class QuadratureError(Exception):
    """Adaptive order doubling failed to stabilize the result."""


class PSDViolation(Exception):
    """A Gram matrix of a positive species has a significantly negative mode."""


class IdentityFailure(Exception):
    """A pre-inner-product identity exceeded tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


KERNEL_SPECIES = {
    "scalarKG": "scalar",
    "complexKG": "pair",
    "emBivector": "bivector",
    "emOneForm": "one-form",
    "dirac": "spinor",
}
PSD_KERNELS = {"scalarKG", "complexKG", "emBivector", "dirac"}
_G_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])
_TWO_PI3 = (2 * np.pi) ** 3


@dataclass(frozen=True)
class ShellMeasure:
    """Forward/backward mass shell with the 3D reduction weight."""

    mass: float = 0.0
    frequency: str = "+"        # '+', '-', 'both'

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("mass must be >= 0")
        if self.frequency not in ("+", "-", "both"):
            raise ValueError("frequency must be '+', '-', or 'both'")

    def omega(self, k3):
        k3 = np.asarray(k3)
        return np.sqrt(np.sum(k3 * k3, axis=-1) + self.mass ** 2)


@dataclass(frozen=True)
class Kernel:
    """Field-species kernel for the pre-inner products."""

    species: str
    mass: float
    hbar: float = 1.0
    matrices: DiracMatrixSet | None = None

    def __post_init__(self):
        if self.species not in KERNEL_SPECIES:
            raise SpeciesError(f"unknown kernel species {self.species!r}")
        if self.species == "dirac" and self.matrices is None:
            object.__setattr__(self, "matrices", DiracMatrixSet.standard())

    @property
    def packet_species(self):
        return KERNEL_SPECIES[self.species]

    @property
    def psd(self):
        return self.species in PSD_KERNELS


# ---------------------------------------------------------------------------
# quadrature rules

@lru_cache(maxsize=256)
def _hermgauss_log(n):
    """Gauss-Hermite nodes with compensated log-weights log(w) + t^2.

    The compensated weight is 1/(n * psi_{n-1}(t)^2) with psi the orthonormal
    Hermite function, evaluated by the scaled upward recurrence; unlike the
    raw weights this never over/underflows, so high orders stay usable.
    """
    from scipy.special import roots_hermite
    t = roots_hermite(n)[0]
    shift = np.zeros_like(t)
    prev = np.zeros_like(t)
    cur = np.pi ** -0.25 * np.exp(-0.5 * t * t)
    for k in range(1, n):
        prev, cur = cur, t * np.sqrt(2.0 / k) * cur - np.sqrt((k - 1) / k) * prev
        small = (np.abs(cur) < 1e-280) & (np.abs(prev) < 1e-280)
        if np.any(small):
            cur = np.where(small, cur * 1e280, cur)
            prev = np.where(small, prev * 1e280, prev)
            shift += np.where(small, 280 * np.log(10.0), 0.0)
    logw = -np.log(float(n)) - 2.0 * (np.log(np.abs(cur)) - shift)
    return t, logw


@lru_cache(maxsize=256)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def _spatial_quadform(pk):
    """Spatial block of Sigma^{-1}/4 (envelope curvature in k-space)."""
    sinv = np.linalg.inv(pk.sigma)
    return 0.25 * sinv[1:, 1:]


@dataclass(frozen=True)
class QuadratureRule:
    """Node layout for one packet pair on one mass shell."""

    scheme: str                 # 'cartesianGaussHermite' | 'sphericalRadialAngular'
    mass: float
    center: np.ndarray          # stationary point of the combined envelope
    transform: np.ndarray       # M^{-1/2} for the Gauss-Hermite map
    radius: float               # truncation radius (massless)
    orders: tuple               # base orders per axis / (radial, theta, phi)

    @classmethod
    def for_pair(cls, pa, pb, mass, base_order=30):
        Ma = _spatial_quadform(pa)
        Mb = _spatial_quadform(pb)
        M = Ma + Mb
        rhs = -(Ma @ pa.p[1:] + Mb @ pb.p[1:])
        center = np.linalg.solve(M, rhs)
        lam, V = np.linalg.eigh(M)
        A = (V / np.sqrt(lam)) @ V.T          # M^{-1/2}
        dx = pb.x0 - pa.x0
        if mass > 0:
            # oscillation bump per Gauss-Hermite axis
            b = np.abs(A @ dx[1:]) + abs(dx[0]) * np.linalg.norm(A, axis=0)
            orders = tuple(int(np.ceil(base_order + bi * bi / 2 + 2 * bi))
                           for bi in b)
            if max(orders) > 400:
                raise QuadratureError(f"axis order {max(orders)} beyond cap")
            return cls("cartesianGaussHermite", mass, center, A, 0.0, orders)
        lmin = lam.min()
        R = np.linalg.norm(center) + np.sqrt(46.0 / lmin)
        osc = np.linalg.norm(dx[1:]) + abs(dx[0])
        n_r = int(np.ceil(1.75 * base_order + 0.75 * R * osc))
        n_t = int(np.ceil(1.25 * base_order + 0.6 * R * np.linalg.norm(dx[1:])))
        n_p = int(np.ceil(1.25 * base_order + 0.6 * R * np.linalg.norm(dx[1:])))
        if max(n_r, n_t, n_p) > 900:
            raise QuadratureError("angular/radial order beyond cap")
        return cls("sphericalRadialAngular", mass, center, A, R,
                   (n_r, n_t, n_p))

    def node_chunks(self, mult=1, max_chunk=2 ** 21):
        """Yield (k3, logw) blocks covering the full rule at this order.

        The log-weight covers d3k/((2pi)^3 2 omega) plus, for Gauss-Hermite,
        the exp(+t^2) compensation, so the integrand is exp(zeta-sum + logw).
        Blocks split along the first grid axis so memory stays bounded.
        """
        if self.scheme == "cartesianGaussHermite":
            ns = [int(n * mult) for n in self.orders]
            if max(ns) > 640:
                raise QuadratureError(f"axis order {max(ns)} beyond cap")
            if np.prod(ns) > 4.2e7:
                raise QuadratureError("node budget exceeded")
            pts, lws = zip(*(_hermgauss_log(n) for n in ns))
            det = np.linalg.det(self.transform)
            step = max(1, max_chunk // (ns[1] * ns[2]))
            for i0 in range(0, ns[0], step):
                sl = slice(i0, min(i0 + step, ns[0]))
                T = np.stack(np.meshgrid(pts[0][sl], pts[1], pts[2],
                                         indexing="ij"), axis=-1).reshape(-1, 3)
                LW = (lws[0][sl][:, None, None] + lws[1][None, :, None]
                      + lws[2][None, None, :]).reshape(-1)
                k3 = self.center + T @ self.transform.T
                om = np.sqrt(np.sum(k3 * k3, axis=1) + self.mass ** 2)
                yield k3, om, LW + np.log(abs(det)) - np.log(_TWO_PI3 * 2 * om)
            return
        n_r, n_t, n_p = (int(n * mult) for n in self.orders)
        if max(n_r, n_t, n_p) > 2400:
            raise QuadratureError("radial/angular order beyond cap")
        if n_r * n_t * n_p > 4.2e7:
            raise QuadratureError("node budget exceeded")
        xr, wr = _leggauss(n_r)
        r = 0.5 * self.radius * (xr + 1.0)
        wr = 0.5 * self.radius * wr
        xc, wc = _leggauss(n_t)
        phi = 2 * np.pi * np.arange(n_p) / n_p
        wp = 2 * np.pi / n_p
        step = max(1, max_chunk // (n_t * n_p))
        for i0 in range(0, n_r, step):
            sl = slice(i0, min(i0 + step, n_r))
            R_, C_, P_ = np.meshgrid(r[sl], xc, phi, indexing="ij")
            S_ = np.sqrt(1.0 - C_ ** 2)
            k3 = np.stack([R_ * S_ * np.cos(P_), R_ * S_ * np.sin(P_),
                           R_ * C_], axis=-1).reshape(-1, 3)
            om = np.sqrt((R_ ** 2).reshape(-1) + self.mass ** 2)
            # r^2 dr dOmega / ((2pi)^3 2 omega); for m=0 one power of r cancels
            W = (wr[sl][:, None, None] * wc[None, :, None] * wp
                 * R_ ** 2).reshape(-1)
            if np.any(W < 0):
                raise QuadratureError("negative quadrature weight")
            logw = np.log(W) - np.log(_TWO_PI3 * 2 * om)
            yield k3, om, logw

    def nodes(self, mult=1):
        """All nodes at once (testing helper)."""
        ks, oms, ws = zip(*self.node_chunks(mult))
        return np.concatenate(ks), np.concatenate(ws)


# ---------------------------------------------------------------------------
# derived k-space forms (linear combinations of delta/d/star images)

_CONTRACT_SUBS = {1: "na,na->n", 2: "na,nab->nb", 3: "na,nabc->nbc",
                  4: "na,nabcd->nbcd"}


def _apply_ops(vals, deg, ops, k4):
    """Apply an on-shell operator chain to batched payload values."""
    kup = k4
    klow = raise_index(k4)
    for op in ops:
        if op == "delta":
            if deg < 1:
                raise SpeciesError("cannot contract a 0-form")
            vals = 1j * np.einsum(_CONTRACT_SUBS[deg], kup, vals)
            deg -= 1
        elif op == "d":
            if deg >= 4:
                raise SpeciesError("cannot wedge past top degree")
            letters = "abc"[:deg]
            term = np.einsum(f"nm,n{letters}->nm{letters}", klow, vals)
            out = np.zeros_like(term)
            for i in range(deg + 1):
                out += ((-1) ** i) * np.moveaxis(term, 1, 1 + i)
            vals = 1j * out
            deg += 1
        elif op == "star":
            vals = hodge_form(vals, deg)
            deg = 4 - deg
        else:
            raise ValueError(f"unknown operator {op!r}")
    return vals, deg


@dataclass(frozen=True)
class FormExpr:
    """Linear combination of on-shell derivative images of test functions.

    Each term is (coefficient, base TestFunction, operator chain) where the
    chain is a tuple over {'delta','d','star'} applied left-to-right to the
    Fourier transform of the base. All terms must land on the same form
    degree. Used for potential-sector products that leave the packet family.
    """

    terms: tuple

    def __post_init__(self):
        degs = set()
        for coeff, tf, ops in self.terms:
            deg = FORM_DEGREE.get(tf.species)
            if deg is None:
                raise SpeciesError("FormExpr needs p-form test functions")
            for op in ops:
                deg = {"delta": deg - 1, "d": deg + 1, "star": 4 - deg}[op]
            degs.add(deg)
        if len(degs) > 1:
            raise SpeciesError(f"mixed form degrees {degs}")
        object.__setattr__(self, "_degree", degs.pop() if degs else 0)

    @property
    def degree(self):
        return self._degree

    def conj_function(self):
        """The complex-conjugate function: conj commutes with delta/d/star
        under these conventions, so only bases and coefficients conjugate."""
        return FormExpr(tuple((np.conj(c), conjugate(tf), ops)
                              for c, tf, ops in self.terms))

    def value(self, k4):
        """Evaluate the k-space value at k4 of shape (...,4)."""
        k4 = np.asarray(k4, dtype=float)
        single = k4.ndim == 1
        kb = k4[None] if single else k4.reshape(-1, 4)
        out = None
        from .packets import evaluate_fourier
        for coeff, tf, ops in self.terms:
            deg = FORM_DEGREE[tf.species]
            vals = evaluate_fourier(tf, kb)
            vals, till = _apply_ops(vals, deg, ops, kb)
            out = coeff * vals if out is None else out + coeff * vals
        if out is None:
            out = np.zeros(kb.shape[:1] + (4,) * self.degree, dtype=complex)
        if single:
            return out[0]
        return out.reshape(k4.shape[:-1] + (4,) * self.degree)


def form_of(tf: TestFunction, *ops):
    return FormExpr(((1.0 + 0j, tf, tuple(ops)),))


# ---------------------------------------------------------------------------
# kernel contraction factors

def _kernel_factor(kernel: Kernel, k4, pf_conj, pg, sign):
    """Pointwise kernel contraction; pf_conj is already conjugated."""
    sp = kernel.species
    hb = kernel.hbar
    if sp == "scalarKG":
        return hb * pf_conj * pg
    if sp == "complexKG":
        return hb * np.einsum("ni,ni->n", pf_conj, pg)
    if sp == "emOneForm":
        return -hb * np.einsum("nm,m,nm->n", pf_conj, _G_SIGNS, pg)
    if sp == "emBivector":
        va = np.einsum("na,nam->nm", k4, pf_conj)
        vb = np.einsum("na,nam->nm", k4, pg)
        return -hb * np.einsum("nm,m,nm->n", va, _G_SIGNS, vb)
    if sp == "dirac":
        # ubar (k.gamma + m) v as sum_mu k_mu ubar gamma^0 gamma^mu v; the
        # per-mu form avoids (n,4,4) temporaries on large node batches
        gs = kernel.matrices
        klow = raise_index(k4)
        acc = kernel.mass * np.einsum("na,ab,nb->n", pf_conj, gs.gamma[0], pg)
        for mu in range(4):
            g0g = gs.gamma[0] @ gs.gamma[mu]
            acc = acc + klow[:, mu] * np.einsum("na,ab,nb->n", pf_conj, g0g, pg)
        return sign * hb * acc
    raise SpeciesError(sp)


def _kernel_magnitude(kernel: Kernel, k4, pf, pg):
    """Cancellation-free upper bound |K| <= magnitude, used for noise floors.

    Identical contraction pattern to _kernel_factor but over absolute values,
    so identities that vanish by antisymmetry still report the size of the
    terms that cancelled.
    """
    sp = kernel.species
    hb = abs(kernel.hbar)
    af, ag = np.abs(pf), np.abs(pg)
    ak = np.abs(k4)
    if sp == "scalarKG":
        return hb * af * ag
    if sp == "complexKG":
        return hb * np.einsum("ni,ni->n", af, ag)
    if sp == "emOneForm":
        return hb * np.einsum("nm,nm->n", af, ag)
    if sp == "emBivector":
        va = np.einsum("na,nam->nm", ak, af)
        vb = np.einsum("na,nam->nm", ak, ag)
        return hb * np.einsum("nm,nm->n", va, vb)
    if sp == "dirac":
        gs = kernel.matrices
        acc = abs(kernel.mass) * np.einsum(
            "na,ab,nb->n", af, np.abs(gs.gamma[0]), ag)
        for mu in range(4):
            g0g = np.abs(gs.gamma[0] @ gs.gamma[mu])
            acc = acc + ak[:, mu] * np.einsum("na,ab,nb->n", af, g0g, ag)
        return hb * acc
    raise SpeciesError(sp)


def _pair_quadratic(pa, pb):
    """Coefficients of conj(zeta_a(k)) + zeta_b(k) as one quadratic in k.

    Both packet log-Fourier factors are quadratics in k, so the combined
    envelope is exp(-k'Ck/4 + k.u + z0); evaluating it this way costs one
    matmul per node batch instead of two full packet evaluations.
    """
    C = np.zeros((4, 4))
    u = np.zeros(4, dtype=complex)
    z0 = 0.0 + 0.0j
    for pk, conj_side in ((pa, True), (pb, False)):
        sinv = np.linalg.inv(pk.sigma)
        Cp = sinv * np.outer(_G_SIGNS, _G_SIGNS)      # G Sigma^-1 G
        la = cmath.log(pk.c * np.pi ** 2 / np.sqrt(np.linalg.det(pk.sigma)))
        gx0 = _G_SIGNS * pk.x0
        isign = -1.0 if conj_side else 1.0
        C += Cp
        u += -0.5 * (Cp @ pk.p) + isign * 1j * gx0
        z0 += ((np.conj(la) if conj_side else la)
               + isign * 1j * (pk.p @ gx0) - 0.25 * pk.p @ Cp @ pk.p)
    return C, u, z0


def _const_kernel_factor(kernel: Kernel, k4, pfc, pg, sign):
    """_kernel_factor for constant (op-free) payloads; pfc pre-conjugated.

    Returns a scalar for k-independent contractions and an (n,) array for
    the kernels that contract the wave vector into the payload.
    """
    sp = kernel.species
    hb = kernel.hbar
    if sp == "scalarKG":
        return hb * pfc * pg
    if sp == "complexKG":
        return hb * (pfc @ pg)
    if sp == "emOneForm":
        return -hb * (pfc * _G_SIGNS) @ pg
    if sp == "emBivector":
        va = k4 @ pfc
        vb = k4 @ pg
        return -hb * np.einsum("nm,nm->n", va * _G_SIGNS, vb)
    if sp == "dirac":
        gs = kernel.matrices
        svec = np.array([pfc @ (gs.gamma[0] @ g) @ pg for g in gs.gamma])
        s0 = pfc @ gs.gamma[0] @ pg
        klow = k4 * _G_SIGNS
        return sign * hb * (klow @ svec + kernel.mass * s0)
    raise SpeciesError(sp)


def _const_kernel_magnitude(kernel: Kernel, k4, pf, pg):
    """Cancellation-free analogue of _const_kernel_factor."""
    sp = kernel.species
    hb = abs(kernel.hbar)
    af, ag = np.abs(pf), np.abs(pg)
    if sp == "scalarKG":
        return hb * af * ag
    if sp == "complexKG":
        return hb * (af @ ag)
    if sp == "emOneForm":
        return hb * af @ ag
    if sp == "emBivector":
        ak = np.abs(k4)
        return hb * np.einsum("nm,nm->n", ak @ af, ak @ ag)
    if sp == "dirac":
        gs = kernel.matrices
        svec = np.array([af @ np.abs(gs.gamma[0] @ g) @ ag for g in gs.gamma])
        s0 = af @ np.abs(gs.gamma[0]) @ ag
        return hb * (np.abs(k4) @ svec + abs(kernel.mass) * s0)
    raise SpeciesError(sp)


def _side_components(side, kernel: Kernel):
    """Decompose a product argument into (coeff, packet, ops, degree) tuples."""
    need_shape = SPECIES_SHAPES[kernel.packet_species]
    if isinstance(side, TestFunction):
        if side.species != kernel.packet_species:
            raise SpeciesError(
                f"species {side.species!r} does not match kernel {kernel.species!r}")
        return [(1.0 + 0j, pk, (), None) for pk in side.packets]
    if isinstance(side, FormExpr):
        need_deg = FORM_DEGREE.get(kernel.packet_species)
        if need_deg is None or side.degree != need_deg:
            raise SpeciesError(
                f"form degree {side.degree} does not match kernel {kernel.species!r}")
        out = []
        for coeff, tf, ops in side.terms:
            for pk in tf.packets:
                out.append((coeff, pk, tuple(ops), FORM_DEGREE[tf.species]))
        return out
    raise TypeError(f"cannot integrate {type(side).__name__}")


def _chain_peak(pk, deg, ops):
    """Largest per-node component count reached while applying an op chain."""
    peak = max(1, pk.payload.size)
    if ops:
        d = deg
        for op in ops:
            d = d - 1 if op == "delta" else d + 1 if op == "d" else 4 - d
            peak = max(peak, 4 ** d)
    return peak


def _pair_value(kernel, ca, pa, opsa, dega, cb, pb, opsb, degb, sign,
                base_order, mult, want_mag=True):
    if pa.c == 0 or pb.c == 0:
        return 0.0 + 0.0j, 0.0, 0.0, 0
    rule = QuadratureRule.for_pair(pa, pb, kernel.mass, base_order)
    # keep peak chunk memory bounded even when op chains pass through
    # wide intermediate tensors (a degree-3 form carries 64 components)
    peak = _chain_peak(pa, dega, opsa) + _chain_peak(pb, degb, opsb)
    max_chunk = max(2 ** 12, min(2 ** 21, 2 ** 25 // (4 * peak + 16)))
    C, u, z0 = _pair_quadratic(pa, pb)
    with_ops = bool(opsa or opsb)
    pfc = np.conj(pa.payload)
    total = 0.0 + 0.0j
    l1 = 0.0
    mag = 0.0
    count = 0
    for k3, om, logw in rule.node_chunks(mult, max_chunk=max_chunk):
        n = len(k3)
        count += n
        k4 = np.empty((n, 4))
        k4[:, 0] = sign * om
        k4[:, 1:] = k3
        quad = np.einsum("nm,nm->n", k4 @ C, k4)
        env = np.exp(k4 @ u + (logw + z0 - 0.25 * quad))
        if with_ops:
            va = np.broadcast_to(pa.payload, (n,) + pa.payload.shape)
            if opsa:
                va, _ = _apply_ops(va, dega, opsa, k4)
            vb = np.broadcast_to(pb.payload, (n,) + pb.payload.shape)
            if opsb:
                vb, _ = _apply_ops(vb, degb, opsb, k4)
            kf = _kernel_factor(kernel, k4, np.conj(va), vb, sign)
            contrib = env * kf
            if want_mag:
                km = _kernel_magnitude(kernel, k4, va, vb)
                mag += float(np.sum(np.abs(env) * km))
        else:
            kf = _const_kernel_factor(kernel, k4, pfc, pb.payload, sign)
            contrib = env * kf
            if want_mag:
                km = _const_kernel_magnitude(kernel, k4, pa.payload,
                                             pb.payload)
                mag += float(np.sum(np.abs(env) * km))
        total += np.sum(contrib)
        l1 += float(np.sum(np.abs(contrib)))
    coeff = np.conj(ca) * cb
    return coeff * total, abs(coeff) * l1, abs(coeff) * mag, count


def _pre_inner_fixed(kernel, comps_f, comps_g, frequency, base_order, mult,
                     want_mag=True):
    signs = {"+": (1.0,), "-": (-1.0,), "both": (1.0, -1.0)}[frequency]
    total = 0.0 + 0.0j
    l1 = 0.0
    mag = 0.0
    count = 0
    for sign in signs:
        for (ca, pa, opsa, dega) in comps_f:
            for (cb, pb, opsb, degb) in comps_g:
                v, m1, mg, n = _pair_value(kernel, ca, pa, opsa, dega, cb, pb,
                                           opsb, degb, sign, base_order, mult,
                                           want_mag)
                total += v
                l1 += m1
                mag += mg
                count += n
    return total, l1, mag, count


def pre_inner(kernel: Kernel, f, g, frequency="+", rel_tol=1e-9,
              base_order=30, abs_tol=0.0, max_doublings=4):
    """(f,g) on the chosen shell(s); conjugate-linear in f, linear in g.

    f and g are TestFunctions of the kernel's species or FormExprs of the
    kernel's form degree. The value is accepted once doubling every
    quadrature order changes it by at most rel_tol (with a floating-point
    floor proportional to the integrand's L1 mass).
    """
    comps_f = _side_components(f, kernel)
    comps_g = _side_components(g, kernel)
    if not comps_f or not comps_g:
        return 0.0 + 0.0j
    prev, l1, mag, cnt = _pre_inner_fixed(kernel, comps_f, comps_g, frequency,
                                          base_order, 1)
    mult = 2
    for _ in range(max_doublings):
        # the magnitude integral converges fast and feeds only the noise
        # floor, so the coarse-rung value is reused on the refined rungs
        cur, l1, _, cnt = _pre_inner_fixed(kernel, comps_f, comps_g,
                                           frequency, base_order, mult,
                                           want_mag=False)
        # noise floor: summation roundoff scales with the cancellation-free
        # magnitude of the integrand, not with the (possibly zero) value
        noise = 3e-15 * np.sqrt(cnt) * mag
        thresh = max(rel_tol * abs(cur), 5e-15 * l1, noise, abs_tol)
        if abs(cur - prev) <= thresh:
            return cur
        prev = cur
        mult *= 2
    raise QuadratureError(
        f"pre-inner product did not stabilize (last delta "
        f"{abs(cur - prev):.3e}, scale {abs(cur):.3e})")


# ---------------------------------------------------------------------------
# Gram matrices

@dataclass
class GramMatrix:
    entries: np.ndarray
    kernel: Kernel
    frequency: str
    functions: list = field(default_factory=list)

    def validate(self, herm_tol=1e-12, psd_tol=1e-10):
        G = self.entries
        scale = max(np.abs(G).max(), 1e-300)
        herm = np.abs(G - G.conj().T).max() / scale
        if herm > herm_tol:
            raise PSDViolation(f"Gram not Hermitian: residual {herm:.3e}")
        if self.kernel.psd:
            ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
            norm = max(np.abs(ev).max(), 1e-300)
            if ev.min() < -psd_tol * norm:
                raise PSDViolation(
                    f"negative Gram eigenvalue {ev.min():.3e} (norm {norm:.3e})")
        return self

    def to_json(self):
        import json
        return json.dumps({
            "kernel": self.kernel.species,
            "frequency": self.frequency,
            "n": int(self.entries.shape[0]),
            "entries": [[z.real, z.imag] for z in self.entries.ravel()],
        })


def gram(kernel: Kernel, fs, frequency="+", validate=True, **quad):
    """Gram matrix G_ij = (f_i, f_j) on the chosen shell(s)."""
    n = len(fs)
    G = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            v = pre_inner(kernel, fs[i], fs[j], frequency, **quad)
            G[i, j] = v
            if j > i:
                G[j, i] = np.conj(v)
    gm = GramMatrix(G, kernel, frequency, list(fs))
    if validate:
        gm.validate()
    return gm


# ---------------------------------------------------------------------------
# identity suite

def _rel(a, b):
    scale = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / scale


def _identity_trial(args):
    """One random-pair pass of the identity suite; returns name -> residual.

    Every trial runs the frequency-swap / dual / charge-conjugation /
    translation identities; "rich" trials additionally draw multi-packet
    functions and check the Hermiticity, sesquilinearity, frequency-
    additivity, and minus-sign-variant properties, which hold termwise and
    need no per-trial repetition.
    """
    from . import packets as P

    kernel, seed, adversarial, rich, quad = args
    rng = np.random.default_rng(seed)
    out = {}

    def upd(name, r):
        out[name] = max(out.get(name, 0.0), r)

    species = kernel.packet_species
    gs = kernel.matrices
    ps = 0.5 if kernel.mass == 0 else 0.8
    se = (0.5, 1.0) if kernel.mass == 0 else (0.4, 1.1)
    f = P.random_test_function(rng, species, n_packets=(2, 2) if rich else (1, 1),
                               x0_scale=0.35, p_scale=ps, sigma_eigs=se)
    g = P.random_test_function(rng, species, n_packets=(1, 1), x0_scale=0.35,
                               p_scale=ps, sigma_eigs=se)
    pp = pre_inner(kernel, f, g, "+", **quad)
    gf_p = pre_inner(kernel, g, f, "+", **quad)
    gf_m = pre_inner(kernel, g, f, "-", **quad)

    if species != "spinor":
        pm = pre_inner(kernel, f, g, "-", **quad)
        # componentwise conjugation and reversal swap frequencies for the
        # bosonic kernels only; the spinor analogue needs the conjugation
        # matrix and is covered by the charge-conjugation checks below
        fs, gc = P.conjugate(f), P.conjugate(g)
        upd("conjugate-swap",
            _rel(pre_inner(kernel, fs, gc, "+", **quad),
                 gf_p if adversarial else gf_m))
        upd("conjugate-swap-rev",
            _rel(pre_inner(kernel, fs, gc, "-", **quad), gf_p))
        fr, gr = P.reverse(f), P.reverse(g)
        upd("reversal-swap", _rel(pre_inner(kernel, fr, gr, "+", **quad), pm))
        upd("reversal-swap-rev",
            _rel(pre_inner(kernel, fr, gr, "-", **quad), pp))
    else:
        fc = P.charge_conjugate_tf(f, gs)
        gcs = P.charge_conjugate_tf(g, gs)
        cc_p = pre_inner(kernel, fc, gcs, "+", **quad)
        cc_m = pre_inner(kernel, fc, gcs, "-", **quad)
        upd("charge-conj-swap", _rel(cc_p, gf_p if adversarial else gf_m))
        upd("charge-conj-swap-rev", _rel(cc_m, gf_p))
        upd("charge-conj-full", _rel(cc_p + cc_m, gf_p + gf_m))
        upd("charge-conj-antisym",
            _rel(pre_inner(kernel, fc, g, "both", **quad),
                 pre_inner(kernel, gcs, f, "both", **quad)))

    a = rng.normal(scale=0.3, size=4)
    upd("translation",
        _rel(pre_inner(kernel, translate(f, a), translate(g, a), "+", **quad),
             pp))

    if species == "bivector":
        sf, sg = _star_tf(f), _star_tf(g)
        upd("dual-adjoint",
            _rel(pre_inner(kernel, sf, g, "+", **quad),
                 -pre_inner(kernel, f, sg, "+", **quad)))
        pf = P.helicity_project(f, +1)
        pg_ = P.helicity_project(g, +1)
        upd("helicity-adjoint",
            _rel(pre_inner(kernel, pf, g, "+", **quad),
                 pre_inner(kernel, f, pg_, "+", **quad)))
        if rich:
            upd("dual-adjoint",
                _rel(pre_inner(kernel, sf, g, "-", **quad),
                     -pre_inner(kernel, f, sg, "-", **quad)))
            mf = P.helicity_project(f, -1)
            mg = P.helicity_project(g, -1)
            upd("helicity-adjoint",
                _rel(pre_inner(kernel, mf, g, "-", **quad),
                     pre_inner(kernel, f, mg, "-", **quad)))

    if rich:
        upd("hermiticity", _rel(pp, np.conj(gf_p)))
        if species == "spinor":
            pm = pre_inner(kernel, f, g, "-", **quad)
        upd("frequency-additivity",
            _rel(pre_inner(kernel, f, g, "both", **quad), pp + pm))
        al = complex(rng.normal(), rng.normal())
        upd("sesquilinearity",
            _rel(pre_inner(kernel, al * f, g, "+", **quad),
                 np.conj(al) * pp))
    return out


def identity_suite(kernel: Kernel, trials=50, rng=None, rel_tol=1e-10,
                   strict=True, adversarial=False, n_jobs=1, **quad) -> Report:
    """Verify the conjugation/reversal/dual/translation identities.

    For every random pair of the kernel's species the suite checks, each to
    rel_tol relative: conjugate swap (f*,g*)± = (g,f)∓; reversal swap
    (f⁻,g⁻)± = (f,g)∓; frequency additivity; Hermiticity; sesquilinearity;
    translation invariance; dual adjointness and helicity-projector
    adjointness (bivector); charge-conjugation identities (spinor). With
    adversarial=True one identity is deliberately miswired and must fail.
    Results are deterministic in the seed regardless of n_jobs.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    # large-enough first rung that the order doubling certifies it directly;
    # a smaller base accepts one rung later at ~8x the node count
    quad.setdefault("base_order", 13 if kernel.mass == 0 else 24)
    seeds = [int(s) for s in rng.integers(0, 2 ** 63 - 1, size=trials)]
    args = [(kernel, s, adversarial, i < 3, quad)
            for i, s in enumerate(seeds)]
    if n_jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            dicts = list(ex.map(_identity_trial, args, chunksize=1))
    else:
        dicts = [_identity_trial(a) for a in args]
    worst = {}
    for d in dicts:
        for name, r in d.items():
            worst[name] = max(worst.get(name, 0.0), r)
    rep = Report(suite=f"identity-{kernel.species}", trials=trials)
    tight = {"hermiticity", "frequency-additivity", "sesquilinearity"}
    for name, r in sorted(worst.items()):
        rep.add(name, "pre-inner-product identity holds at stated tolerance",
                r, 1e-12 if name in tight else rel_tol)
    if strict and not rep.passed:
        bad = max((c for c in rep.checks if not c.passed),
                  key=lambda c: c.max_residual)
        raise IdentityFailure(
            f"identity {bad.name} failed with residual {bad.max_residual:.3e}",
            report=rep)
    return rep


def _star_tf(f: TestFunction) -> TestFunction:
    from .geometry import hodge_bivector
    pks = tuple(pk.with_(payload=hodge_bivector(pk.payload)) for pk in f.packets)
    return TestFunction(f.species, pks)
