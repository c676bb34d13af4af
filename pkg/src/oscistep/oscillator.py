"""Exact symbolic algebra for a fast periodic factor v(t).

The oscillator is a finite Fourier series

    v(t) = omega^(-nu) * sum_k c_k exp(i k (omega t + phi)),

and every iterated integral of the stepping schemes lives in the closed
class of "basis polynomials": finite sums of terms

    coef * (t - t_ref)^p * exp(i k omega (t - t_ref)) * Z^q * omega^(-(n + m nu))

with Z = exp(i (omega t_ref + phi)).  Powers of tau = t - t_ref, the
oscillatory index k, the phase index q and the omega exponent (split into
the integer part n and the count m of amplitude factors) are all tracked
structurally, so antidifferentiation, products, phase averages and
order-by-order truncation are exact operations on the term list.

Antidifferentiation uses the elementary reductions

    int tau^p dtau                 = tau^(p+1) / (p+1)
    int tau^p e^(i k omega tau) dtau = e^(..) sum_j (-1)^j p!/(p-j)! tau^(p-j) / (i k omega)^(j+1)

cosine/sine monomials are first rewritten in the exponential basis, which
collapses the classical cos/sin reduction formulas into the single
exponential rule.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import DegenerateOscillatorError, RegimeError
from .jets import CoefficientField

__all__ = [
    "OscillatorSpec",
    "BasisPoly",
    "make_oscillator",
    "absorb_mean",
    "v_poly",
    "antiderivative",
    "big_v",
    "v_norm",
    "phase_average",
    "oscillating_monomial",
    "integration_call_count",
]

# incremented on every symbolic antidifferentiation; lets tests verify that
# prebuilt scheme tables are reused without re-integration
_INTEGRATION_CALLS = 0


def integration_call_count() -> int:
    return _INTEGRATION_CALLS


@dataclass(frozen=True)
class OscillatorSpec:
    """Finite-Fourier oscillator with frequency, phase and amplitude exponent.

    `coeffs` maps mode index k to the complex coefficient c_k, stored as a
    sorted tuple so specs are hashable; c_0 is always zero after
    construction.  `removed_mean` records the mean subtracted off by
    :func:`make_oscillator` so it can be absorbed into the slow drift.
    """

    omega: float
    phi: float = 0.0
    nu: float = 0.0
    coeffs: tuple[tuple[int, complex], ...] = ()
    removed_mean: complex = 0.0 + 0.0j

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def coeff_map(self) -> dict[int, complex]:
        return dict(self.coeffs)

    def value(self, t):
        """v(t); accepts scalars or numpy arrays."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for k, c in self.coeffs:
            out += c * np.exp(1j * k * (self.omega * t + self.phi))
        out *= self.omega ** (-self.nu)
        return out if out.shape else complex(out)

    def is_real(self) -> bool:
        cm = self.coeff_map
        return all(abs(cm.get(-k, 0j) - c.conjugate()) < 1e-15 for k, c in self.coeffs)


def make_oscillator(kind: str, omega: float, phi: float = 0.0, nu: float = 0.0,
                    coeffs: Mapping[int, complex] | None = None) -> OscillatorSpec:
    """Build an oscillator of one of the common kinds.

    kind 'exp' is e^(i(omega t + phi)), 'cos' and 'sin' the real pair, and
    'fourier' takes user coefficients; a nonzero mean (the k=0 coefficient)
    is removed and reported on `removed_mean` for absorption into the slow
    part of the field.  The overall amplitude is omega^(-nu).
    """
    if omega <= 0:
        raise RegimeError(f"frequency must be positive, got {omega}")
    if nu <= -1:
        raise RegimeError(f"amplitude exponent must satisfy nu > -1, got {nu}")
    if kind == "exp":
        cm = {1: 1.0 + 0.0j}
    elif kind == "cos":
        cm = {1: 0.5 + 0.0j, -1: 0.5 + 0.0j}
    elif kind == "sin":
        cm = {1: -0.5j, -1: 0.5j}
    elif kind == "fourier":
        if coeffs is None:
            raise ValueError("kind 'fourier' requires coefficients")
        cm = {int(k): complex(c) for k, c in coeffs.items() if complex(c) != 0}
    else:
        raise ValueError(f"unknown oscillator kind {kind!r}")
    mean = cm.pop(0, 0.0 + 0.0j) * omega ** (-nu)
    if not cm:
        raise DegenerateOscillatorError("all oscillating coefficients vanish")
    ordered = tuple(sorted(cm.items()))
    return OscillatorSpec(omega=float(omega), phi=float(phi), nu=float(nu),
                          coeffs=ordered, removed_mean=mean)


def absorb_mean(fld: CoefficientField, meanv: complex) -> CoefficientField:
    """Fold a removed oscillator mean into the drift: a -> a + <v> b."""
    meanv = complex(meanv)
    if meanv == 0:
        return fld
    a_fn, b_fn = fld._a, fld._b

    def a_new(t, u):
        return [ai + meanv * bi for ai, bi in zip(a_fn(t, u), b_fn(t, u))]

    return CoefficientField(fld.m, a_new, b_fn, max_order=fld.max_order,
                            name=fld.name + "+mean")


# -- basis polynomials --------------------------------------------------------

# term key: (p, k, q, n, m)
#   p >= 0 : power of tau = t - t_ref
#   k      : index of exp(i k omega tau)
#   q      : power of Z = exp(i (omega t_ref + phi))
#   n, m   : omega exponent is -(n + m nu); m counts amplitude factors
Key = tuple[int, int, int, int, int]


@dataclass(frozen=True)
class BasisPoly:
    """Canonical term list; immutable, closed under +, *, d/dtau and int dtau."""

    terms: tuple[tuple[Key, complex], ...] = ()
    t_ref: float | None = None

    @staticmethod
    def from_dict(d: Mapping[Key, complex], t_ref: float | None = None) -> "BasisPoly":
        items = tuple(sorted((k, complex(c)) for k, c in d.items() if complex(c) != 0))
        return BasisPoly(items, t_ref)

    @staticmethod
    def zero(t_ref: float | None = None) -> "BasisPoly":
        return BasisPoly((), t_ref)

    @staticmethod
    def one(t_ref: float | None = None) -> "BasisPoly":
        return BasisPoly.from_dict({(0, 0, 0, 0, 0): 1.0 + 0.0j}, t_ref)

    @property
    def term_dict(self) -> dict[Key, complex]:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "BasisPoly") -> "BasisPoly":
        out = self.term_dict
        for key, c in other.terms:
            out[key] = out.get(key, 0j) + c
        return BasisPoly.from_dict(out, self.t_ref)

    def __sub__(self, other: "BasisPoly") -> "BasisPoly":
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, BasisPoly):
            out: dict[Key, complex] = {}
            for (p1, k1, q1, n1, m1), c1 in self.terms:
                for (p2, k2, q2, n2, m2), c2 in other.terms:
                    key = (p1 + p2, k1 + k2, q1 + q2, n1 + n2, m1 + m2)
                    out[key] = out.get(key, 0j) + c1 * c2
            return BasisPoly.from_dict(out, self.t_ref)
        return BasisPoly.from_dict({k: c * other for k, c in self.terms}, self.t_ref)

    __rmul__ = __mul__

    def antiderivative(self) -> "BasisPoly":
        """Termwise antiderivative in tau with integration constant zero."""
        global _INTEGRATION_CALLS
        _INTEGRATION_CALLS += 1
        out: dict[Key, complex] = {}

        def add(key: Key, c: complex):
            out[key] = out.get(key, 0j) + c

        for (p, k, q, n, m), c in self.terms:
            if k == 0:
                add((p + 1, k, q, n, m), c / (p + 1))
            else:
                # int tau^p e^(ik omega tau): repeated integration by parts
                fac = 1.0 + 0.0j
                for j in range(p + 1):
                    fac *= -1j / k          # one factor 1/(ik) per level
                    coef = c * fac * math.perm(p, j) * (-1.0) ** j
                    add((p - j, k, q, n + j + 1, m), coef)
        return BasisPoly.from_dict(out, self.t_ref)

    def derivative(self) -> "BasisPoly":
        out: dict[Key, complex] = {}
        for (p, k, q, n, m), c in self.terms:
            if p > 0:
                key = (p - 1, k, q, n, m)
                out[key] = out.get(key, 0j) + c * p
            if k != 0:
                key = (p, k, q, n - 1, m)
                out[key] = out.get(key, 0j) + c * 1j * k
        return BasisPoly.from_dict(out, self.t_ref)

    def value_at_ref(self) -> "BasisPoly":
        """The tau=0 value, kept symbolic in Z and omega (a tau-constant poly)."""
        out: dict[Key, complex] = {}
        for (p, k, q, n, m), c in self.terms:
            if p == 0:
                key = (0, 0, q, n, m)
                out[key] = out.get(key, 0j) + c
        return BasisPoly.from_dict(out, self.t_ref)

    def definite_from_ref(self) -> "BasisPoly":
        """Antiderivative vanishing at tau = 0."""
        prim = self.antiderivative()
        return prim - prim.value_at_ref()

    def filtered(self, keep: Callable[[Key], bool]) -> "BasisPoly":
        return BasisPoly.from_dict({k: c for k, c in self.terms if keep(k)}, self.t_ref)

    def phase_free(self) -> "BasisPoly":
        return self.filtered(lambda key: key[2] == 0)

    # -- evaluation ----------------------------------------------------------

    def eval_shifted(self, osc: OscillatorSpec, dt: float, t_ref: float) -> complex:
        """Evaluate at t = t_ref + dt with the phase anchored at t_ref."""
        z = cmath.exp(1j * (osc.omega * t_ref + osc.phi))
        out = 0.0 + 0.0j
        for (p, k, q, n, m), c in self.terms:
            val = c
            if p:
                val *= dt ** p
            if k:
                val *= cmath.exp(1j * k * osc.omega * dt)
            if q:
                val *= z ** q
            expo = n + m * osc.nu
            if expo:
                val *= osc.omega ** (-expo)
            out += val
        return out

    def eval(self, osc: OscillatorSpec, t: float) -> complex:
        """Evaluate at absolute time t, using the stored reference time."""
        ref = self.t_ref if self.t_ref is not None else 0.0
        return self.eval_shifted(osc, t - ref, ref)


def v_poly(osc: OscillatorSpec) -> BasisPoly:
    """The oscillator itself as a basis polynomial (one amplitude factor)."""
    return BasisPoly.from_dict({(0, k, k, 0, 1): c for k, c in osc.coeffs})


def antiderivative(f: BasisPoly) -> BasisPoly:
    return f.antiderivative()


def big_v(osc: OscillatorSpec) -> BasisPoly:
    """V(t) with dV = v dt; zero-mean over one period for zero-mean v.

    For a finite Fourier series without constant term the elementary
    antiderivative already has zero mean, so no constant is added.
    """
    if any(k == 0 for k, _ in osc.coeffs):
        raise DegenerateOscillatorError("oscillator must be mean-normalized first")
    return v_poly(osc).antiderivative()


def v_norm(osc: OscillatorSpec) -> float:
    """2 pi times the peak of |v| over one period.

    Found numerically: dense sampling followed by golden-section polish
    around the best local maxima.  Deterministic.
    """
    n = 4096
    ts = np.linspace(0.0, osc.period, n, endpoint=False)
    mags = np.abs(osc.value(ts))

    def mag(t: float) -> float:
        return abs(osc.value(float(t)))

    # candidate local maxima on the circular grid
    prev = np.roll(mags, 1)
    nxt = np.roll(mags, -1)
    cand = np.where((mags >= prev) & (mags >= nxt))[0]
    order = cand[np.argsort(mags[cand])[::-1][:8]]

    best = float(mags.max())
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    dt = osc.period / n
    for idx in order:
        lo, hi = ts[idx] - dt, ts[idx] + dt
        a, b = lo, hi
        c = b - gr * (b - a)
        d = a + gr * (b - a)
        fc, fd = mag(c), mag(d)
        for _ in range(80):
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - gr * (b - a)
                fc = mag(c)
            else:
                a, c, fc = c, d, fd
                d = a + gr * (b - a)
                fd = mag(d)
        best = max(best, fc, fd)
    return 2.0 * math.pi * best


def phase_average(f: BasisPoly) -> BasisPoly:
    """Average over a uniformly distributed phase: keeps phase-index-0 terms.

    Exact: a term carrying Z^q integrates to zero over a full phase circle
    unless q = 0.  Idempotent and linear by construction.
    """
    return f.phase_free()


def _poly_power(base: BasisPoly, m: int) -> BasisPoly:
    out = BasisPoly.one()
    for _ in range(m):
        out = out * base
    return out


def oscillating_monomial(kind: str, p: int, m: int = 0) -> BasisPoly:
    """Classical oscillatory monomial integrands, rewritten exponentially.

    With w1 = e^(i(omega t + phi)), w2 = cos(omega t + phi),
    w3 = sin(omega t + phi) and reference time 0:

        'I': t^p w1^m      'J': t^p      'K': t^p w2^m      'L': t^p w2^m w3

    Negative p or m yields the zero polynomial, matching the convention
    used when the integral reductions step out of range.
    """
    if p < 0 or m < 0:
        return BasisPoly.zero(0.0)
    tp = BasisPoly.from_dict({(p, 0, 0, 0, 0): 1.0}, 0.0)
    cosp = BasisPoly.from_dict({(0, 1, 1, 0, 0): 0.5, (0, -1, -1, 0, 0): 0.5}, 0.0)
    sinp = BasisPoly.from_dict({(0, 1, 1, 0, 0): -0.5j, (0, -1, -1, 0, 0): 0.5j}, 0.0)
    if kind == "I":
        osc_part = BasisPoly.from_dict({(0, m, m, 0, 0): 1.0}, 0.0)
    elif kind == "J":
        osc_part = BasisPoly.one(0.0)
    elif kind == "K":
        osc_part = _poly_power(cosp, m)
    elif kind == "L":
        osc_part = _poly_power(cosp, m) * sinp
    else:
        raise ValueError(f"unknown monomial kind {kind!r}")
    out = tp * osc_part
    return BasisPoly(out.terms, 0.0)
