"""Gaussian wave-packet test functions and their closed-form transforms.

Position-space form of each packet:

    f(x) = c * payload * exp(i p.x) * exp(-(x-x0)^T Sigma (x-x0)),

with p.x the Minkowski product and Sigma a Euclidean SPD quadratic form (so
packets are Schwartz-class). Fourier convention f~(k) = int f(x) e^{i k.x} d4x,
which makes reversal act as f~(-k) and gives the closed form

    f~(k) = c * payload * pi^2/sqrt(det Sigma)
            * exp(i (k+p).x0) * exp(-(G(k+p))^T Sigma^{-1} (G(k+p)) / 4),

where G = diag(1,-1,-1,-1) converts the Minkowski phase to the Euclidean
quadratic form. All unary transforms used by the field constructions
(conjugate, reverse, helicity projection, bullet involution, charge
conjugation, on-shell d/delta) stay inside the packet family or return
pointwise payload values.
"""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .geometry import (DiracMatrixSet, hodge_bivector, minkowski_dot,
                       raise_index)


class SpeciesError(Exception):
    """Operation applied to a test function of the wrong payload kind."""


SPECIES_SHAPES = {
    "scalar": (),
    "pair": (2,),
    "bivector": (4, 4),
    "one-form": (4,),
    "three-form": (4, 4, 4),
    "spinor": (4,),
}

FORM_DEGREE = {"one-form": 1, "bivector": 2, "three-form": 3}
_G_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])

I_PAIR = np.array([[0.0, 1.0], [-1.0, 0.0]])  # dual matrix for pair payloads


@dataclass(frozen=True)
class GaussianPacket:
    c: complex
    x0: np.ndarray
    p: np.ndarray
    sigma: np.ndarray
    payload: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "payload", np.asarray(self.payload, dtype=complex))
        if self.sigma.shape != (4, 4):
            raise ValueError("sigma must be 4x4")
        if np.abs(self.sigma - self.sigma.T).max() > 0:
            raise ValueError("sigma must be symmetric")
        if np.linalg.eigvalsh(self.sigma).min() <= 0:
            raise ValueError("sigma must be positive definite")

    def with_(self, **kw):
        d = {"c": self.c, "x0": self.x0, "p": self.p, "sigma": self.sigma,
             "payload": self.payload}
        d.update(kw)
        return GaussianPacket(**d)


@dataclass(frozen=True)
class TestFunction:
    species: str
    packets: tuple = field(default_factory=tuple)

    __test__ = False  # keep pytest from collecting this as a test class

    def __post_init__(self):
        if self.species not in SPECIES_SHAPES:
            raise SpeciesError(f"unknown species {self.species!r}")
        object.__setattr__(self, "packets", tuple(self.packets))
        shape = SPECIES_SHAPES[self.species]
        for pk in self.packets:
            if pk.payload.shape != shape:
                raise SpeciesError(
                    f"payload shape {pk.payload.shape} does not match "
                    f"species {self.species!r}")

    def __add__(self, other):
        if other.species != self.species:
            raise SpeciesError("cannot add different species")
        return TestFunction(self.species, self.packets + other.packets)

    def __mul__(self, z):
        return TestFunction(self.species,
                            tuple(pk.with_(c=pk.c * z) for pk in self.packets))

    __rmul__ = __mul__

    def key(self):
        """Deterministic byte key of the full packet data."""
        parts = [self.species.encode()]
        for pk in self.packets:
            parts.append(np.asarray(pk.c).tobytes())
            parts.append(pk.x0.tobytes())
            parts.append(pk.p.tobytes())
            parts.append(pk.sigma.tobytes())
            parts.append(pk.payload.tobytes())
        return b"|".join(parts)


def zero(species):
    return TestFunction(species, ())


# ---------------------------------------------------------------------------
# Fourier evaluation

def packet_log_fourier(pk: GaussianPacket, k):
    """log of the scalar Fourier factor of one packet at k (batched over k).

    Returns zeta(k) with  c * pi^2/sqrt(det S) * exp(i(k+p).x0 - q.S^{-1}q/4)
    = exp(zeta(k)), q = G(k+p). Payload not included.
    """
    k = np.asarray(k, dtype=float)
    sinv = np.linalg.inv(pk.sigma)
    det = np.linalg.det(pk.sigma)
    amp = pk.c * np.pi ** 2 / np.sqrt(det)
    if amp == 0:
        raise ValueError("zero-amplitude packet has no log form")
    q = (k + pk.p) * _G_SIGNS
    quad = 0.25 * np.einsum("...a,ab,...b->...", q, sinv, q)
    phase = minkowski_dot(k + pk.p, pk.x0)
    return cmath.log(amp) + 1j * phase - quad


def evaluate_fourier(f: TestFunction, k):
    """f~(k) for k of shape (...,4); returns (...,) + payload shape."""
    k = np.asarray(k, dtype=float)
    shape = SPECIES_SHAPES[f.species]
    out = np.zeros(k.shape[:-1] + shape, dtype=complex)
    for pk in f.packets:
        if pk.c == 0:
            continue
        z = np.exp(packet_log_fourier(pk, k))
        out += np.multiply.outer(z, pk.payload) if shape else z * pk.payload
    return out


def evaluate_position(f: TestFunction, x):
    """f(x) for x of shape (...,4); returns (...,) + payload shape.

    Position form: c * payload * exp(i p.x) * exp(-(x-x0)^T Sigma (x-x0)),
    with p.x the Minkowski product and the envelope a Euclidean quadratic.
    """
    x = np.asarray(x, dtype=float)
    shape = SPECIES_SHAPES[f.species]
    out = np.zeros(x.shape[:-1] + shape, dtype=complex)
    for pk in f.packets:
        dx = x - pk.x0
        quad = np.einsum("...a,ab,...b->...", dx, pk.sigma, dx)
        z = pk.c * np.exp(1j * minkowski_dot(pk.p, x) - quad)
        out += np.multiply.outer(z, pk.payload) if shape else z * pk.payload
    return out


# ---------------------------------------------------------------------------
# unary transforms (closed in the packet family)

def conjugate(f: TestFunction) -> TestFunction:
    """Complex conjugate as a function on spacetime: (c,x0,p,S,eps) ->
    (conj c, x0, -p, S, conj eps). Satisfies (f*)~(k) = conj(f~(-k))."""
    pks = tuple(pk.with_(c=np.conj(pk.c), p=-pk.p, payload=np.conj(pk.payload))
                for pk in f.packets)
    return TestFunction(f.species, pks)


def reverse(f: TestFunction) -> TestFunction:
    """f-(x) = f(-x): (c,x0,p,S,eps) -> (c,-x0,-p,S,eps); f-~(k) = f~(-k)."""
    pks = tuple(pk.with_(x0=-pk.x0, p=-pk.p) for pk in f.packets)
    return TestFunction(f.species, pks)


def translate(f: TestFunction, a) -> TestFunction:
    """f(x - a); amplitude picks up exp(-i p.a), center shifts by a."""
    a = np.asarray(a, dtype=float)
    pks = tuple(pk.with_(c=pk.c * np.exp(-1j * minkowski_dot(pk.p, a)),
                         x0=pk.x0 + a)
                for pk in f.packets)
    return TestFunction(f.species, pks)


def _dual_payload(payload, species):
    if species == "bivector":
        return hodge_bivector(payload)
    if species == "pair":
        return I_PAIR @ payload
    raise SpeciesError(f"no dual involution for species {species!r}")


def helicity_project(f: TestFunction, sign: int) -> TestFunction:
    """P± f: payload -> (payload ± i * dual(payload))/2; bivector species."""
    if f.species != "bivector":
        raise SpeciesError("helicity projection needs bivector species")
    if sign not in (+1, -1):
        raise ValueError("sign must be ±1")
    pks = tuple(
        pk.with_(payload=0.5 * (pk.payload + sign * 1j * _dual_payload(pk.payload, f.species)))
        for pk in f.packets)
    return TestFunction(f.species, pks)


def merge_terms(f: TestFunction) -> TestFunction:
    """Merge packets with bit-identical (c,x0,p,Sigma) by payload addition;
    drop exactly-zero payloads."""
    order = []
    acc = {}
    for pk in f.packets:
        key = (np.asarray(pk.c).tobytes(), pk.x0.tobytes(), pk.p.tobytes(),
               pk.sigma.tobytes())
        if key in acc:
            acc[key] = acc[key].with_(payload=acc[key].payload + pk.payload)
        else:
            acc[key] = pk
            order.append(key)
    pks = tuple(acc[k] for k in order if np.any(acc[k].payload != 0))
    return TestFunction(f.species, pks)


def bullet(f: TestFunction, dual: str | None = None) -> TestFunction:
    """The commuting-field involution f• = (1+i D)f/2 + (1-i D)f⁻/2.

    D is the Hodge dual for bivector species or the antisymmetric pair matrix
    for pair species. Applying bullet twice returns f up to term merging.
    """
    expected = {"bivector": "hodge", "pair": "pair"}.get(f.species)
    if expected is None:
        raise SpeciesError(f"bullet undefined for species {f.species!r}")
    if dual is not None and dual != expected:
        raise SpeciesError(f"dual selector {dual!r} does not fit species")
    out = []
    for pk in f.packets:
        d = _dual_payload(pk.payload, f.species)
        out.append(pk.with_(payload=0.5 * (pk.payload + 1j * d)))
        out.append(pk.with_(x0=-pk.x0, p=-pk.p,
                            payload=0.5 * (pk.payload - 1j * d)))
    return merge_terms(TestFunction(f.species, out))


def charge_conjugate_tf(U: TestFunction, gs: DiracMatrixSet | None = None) -> TestFunction:
    """U^c: packet rule (c,x0,p,S,u) -> (conj c, x0, -p, S, C (u-bar)^T)."""
    if U.species != "spinor":
        raise SpeciesError("charge conjugation needs spinor species")
    if gs is None:
        gs = DiracMatrixSet.standard()
    M = gs.C @ gs.gamma[0].T
    pks = tuple(pk.with_(c=np.conj(pk.c), p=-pk.p,
                         payload=M @ np.conj(pk.payload))
                for pk in U.packets)
    return TestFunction("spinor", pks)


# ---------------------------------------------------------------------------
# on-shell exterior calculus (pointwise payload values in k-space)

def codifferential_on_shell(u: TestFunction, k):
    """delta u at k: i * contraction of u~(k) with k^mu on the first index."""
    p = FORM_DEGREE.get(u.species)
    if p is None:
        raise SpeciesError("codifferential needs a p-form species")
    k = np.asarray(k, dtype=float)
    vals = evaluate_fourier(u, k)
    subs = {1: "...a,...a->...", 2: "...a,...ab->...b",
            3: "...a,...abc->...bc"}
    return 1j * np.einsum(subs[p], k, vals)


def exterior_on_shell(u: TestFunction, k):
    """d u at k: i * wedge of k_mu (index lowered) with u~(k)."""
    p = FORM_DEGREE.get(u.species)
    if p is None:
        raise SpeciesError("exterior derivative needs a p-form species")
    k = np.asarray(k, dtype=float)
    single = k.ndim == 1
    kb = k[None] if single else k
    vals = evaluate_fourier(u, kb)
    klow = raise_index(kb)  # same sign pattern lowers an upper index
    letters = "abc"[:p]
    term = np.einsum(f"...m,...{letters}->...m{letters}", klow, vals)
    nb = kb.ndim - 1
    out = np.zeros(kb.shape[:-1] + (4,) * (p + 1), dtype=complex)
    # (w ^ v)_{m0..mp} = sum_i (-1)^i w_{m_i} v_{m0..without m_i..mp}
    for i in range(p + 1):
        out += ((-1) ** i) * np.moveaxis(term, nb, nb + i)
    out = 1j * out
    return out[0] if single else out


# ---------------------------------------------------------------------------
# randomized construction and serialization

def random_spd(rng, eig_range=(0.5, 2.0)):
    A = rng.normal(size=(4, 4))
    Q, _ = np.linalg.qr(A)
    lam = rng.uniform(eig_range[0], eig_range[1], size=4)
    S = (Q * lam) @ Q.T
    return 0.5 * (S + S.T)  # exact bitwise symmetry


def random_payload(rng, species, scale=1.0):
    shape = SPECIES_SHAPES[species]
    raw = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    if species == "bivector":
        raw = geometry.antisymmetrize2(raw)
    elif species == "three-form":
        raw = _antisymmetrize3(raw)
    elif species == "scalar":
        raw = complex(rng.normal() + 1j * rng.normal())
    return np.asarray(raw) * scale


def _antisymmetrize3(T):
    out = np.zeros_like(T)
    for perm, s in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                    ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)):
        out += s * np.transpose(T, perm)
    return out / 6.0


def random_test_function(rng, species, n_packets=(1, 2), x0_scale=1.0,
                         p_scale=1.0, sigma_eigs=(0.5, 2.0), payload_scale=1.0):
    """Deterministic (for a given rng state) random test function."""
    n = int(rng.integers(n_packets[0], n_packets[1] + 1))
    pks = []
    for _ in range(n):
        pks.append(GaussianPacket(
            c=complex(rng.normal() + 1j * rng.normal()),
            x0=rng.normal(scale=x0_scale, size=4),
            p=rng.normal(scale=p_scale, size=4),
            sigma=random_spd(rng, sigma_eigs),
            payload=random_payload(rng, species, payload_scale)))
    return TestFunction(species, tuple(pks))


def to_json(f: TestFunction) -> str:
    doc = {"species": f.species, "packets": []}
    for pk in f.packets:
        pay = np.asarray(pk.payload, dtype=complex).ravel()
        doc["packets"].append({
            "c": [pk.c.real, pk.c.imag],
            "x0": list(pk.x0),
            "p": list(pk.p),
            "sigma": list(pk.sigma.ravel()),
            "payload": [x for z in pay for x in (z.real, z.imag)],
        })
    return json.dumps(doc)


def from_json(s: str) -> TestFunction:
    doc = json.loads(s)
    species = doc["species"]
    shape = SPECIES_SHAPES[species]
    pks = []
    for d in doc["packets"]:
        flat = np.asarray(d["payload"], dtype=float)
        pay = (flat[0::2] + 1j * flat[1::2]).reshape(shape)
        if species == "scalar":
            pay = pay.reshape(())
        pks.append(GaussianPacket(
            c=complex(d["c"][0], d["c"][1]),
            x0=np.asarray(d["x0"]), p=np.asarray(d["p"]),
            sigma=np.asarray(d["sigma"]).reshape(4, 4),
            payload=pay))
    return TestFunction(species, tuple(pks))
