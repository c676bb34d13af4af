"""Expansion terms: words, truncation policies and iterated integrals.

Each term of the macro-step expansion is encoded by a word over the
letters ``T`` (an integral against dt) and ``V`` (an integral against
dV = v dt), written innermost integral first.  The outermost letter fixes
the target coefficient (``T`` -> a, ``V`` -> b); the remaining letters,
innermost letter leftmost, form the operator word applied to that target.
A word with Q0 letters ``T`` and Q1 letters ``V`` is retained by policy
(kappa0, kappa1) when Q0/kappa0 + Q1/kappa1 <= 1.

Iterated integrals are evaluated exactly by symbolic recursion on basis
polynomials: multiply by v for a ``V`` letter, antidifferentiate, anchor
at the step start, repeat; the result is a closed-form function of the
step size and of the phase at the step start, reusable for every start
time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .oscillator import BasisPoly, OscillatorSpec

__all__ = [
    "Word",
    "TruncationPolicy",
    "IteratedIntegralValue",
    "enumerate_words",
    "term_count",
    "iterated_integral",
    "word_primitive",
    "stochastic_scheme_words",
    "policy_matches_scheme",
    "expected_local_order",
    "RETENTION_TOL",
]

# slack on the retention inequality so float-derived policy bounds keep
# words that sit exactly on the boundary
RETENTION_TOL = 1e-9


@dataclass(frozen=True)
class Word:
    """A nested-integral term, letters ordered innermost to outermost."""

    letters: tuple[str, ...]

    def __post_init__(self):
        if not self.letters:
            raise ValueError("words must be non-empty")
        if any(ch not in ("T", "V") for ch in self.letters):
            raise ValueError(f"letters must be 'T' or 'V', got {self.letters}")

    @staticmethod
    def of(text: str) -> "Word":
        return Word(tuple(text))

    def __str__(self) -> str:
        return "".join(self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def q0(self) -> int:
        return self.letters.count("T")

    @property
    def q1(self) -> int:
        return self.letters.count("V")

    @property
    def target(self) -> str:
        """Coefficient the term multiplies: outermost 'T' -> a, 'V' -> b."""
        return "a" if self.letters[-1] == "T" else "b"

    @property
    def operator_word(self) -> tuple[str, ...]:
        """Operator letters in application order (leftmost applied last)."""
        return tuple("L0" if ch == "T" else "L1" for ch in self.letters[:-1])


@dataclass(frozen=True)
class TruncationPolicy:
    """Retention rule for words: keep when Q0/kappa0 + Q1/kappa1 <= 1."""

    kappa0: float
    kappa1: float

    def __post_init__(self):
        if self.kappa0 <= 0 or self.kappa1 <= 0:
            raise ValueError("retention orders must be positive")

    @staticmethod
    def from_order(kappa: float, rho: float, nu: float = 0.0) -> "TruncationPolicy":
        """Policy for accuracy order kappa in the regime omega^(-1) ~ h^rho
        with oscillator amplitude scaling omega^(-nu)."""
        if kappa <= 0 or rho <= 0:
            raise ValueError("kappa and rho must be positive")
        if nu <= -1:
            raise ValueError("amplitude exponent must satisfy nu > -1")
        return TruncationPolicy(kappa0=float(kappa), kappa1=kappa / (rho * (nu + 1.0)))

    def weight(self, q0: float, q1: float) -> float:
        return q0 / self.kappa0 + q1 / self.kappa1

    def retains(self, word: Word) -> bool:
        return self.weight(word.q0, word.q1) <= 1.0 + RETENTION_TOL

    def monomial_weight(self, p: float, sigma: float, nu: float = 0.0) -> float:
        """Order weight of an evaluated monomial h^p omega^(-sigma).

        sigma counts raw powers of omega^(-1), so the V-direction scale is
        kappa1 * (1 + nu): a whole V integral contributes sigma = 1 + nu.
        """
        return p / self.kappa0 + sigma / (self.kappa1 * (1.0 + nu))


def enumerate_words(policy: TruncationPolicy, max_len: int = 20) -> list[Word]:
    """All retained words, ordered by length then lexicographically (T < V)."""
    longest = math.floor(max(policy.kappa0, policy.kappa1) + RETENTION_TOL)
    if longest > max_len:
        raise ValueError(
            f"policy retains words up to length {longest}; enumeration is "
            f"exponential and capped at {max_len}")
    out: list[Word] = []
    for length in range(1, longest + 1):
        for letters in product("TV", repeat=length):
            w = Word(letters)
            if policy.retains(w):
                out.append(w)
    return out


def term_count(kappa: int, rho: int) -> int:
    """Number of integral terms retained at order kappa in the regime
    omega^(-1) ~ h^rho: distinct words with Q0 + rho*Q1 <= kappa.

    Equals 2 (2^kappa - 1) when rho = 1 and always matches the live
    enumeration under the policy (kappa0, kappa1) = (kappa, kappa/rho).
    """
    if kappa < 1 or rho < 1 or kappa != int(kappa) or rho != int(rho):
        raise ValueError("term_count is defined on the integer grid kappa, rho >= 1")
    total = 0
    for i in range(0, kappa + 1):
        for j in range(0, (kappa - i) // rho + 1):
            total += math.comb(i + j, i)
    return total - 1  # drop the empty word


@dataclass(frozen=True)
class IteratedIntegralValue:
    value: complex
    word: Word
    t_n: float
    h: float


@lru_cache(maxsize=None)
def _primitive_cached(letters: tuple[str, ...],
                      coeffs: tuple[tuple[int, complex], ...]) -> BasisPoly:
    vp = BasisPoly.from_dict({(0, k, k, 0, 1): c for k, c in coeffs})
    poly = BasisPoly.one()
    for letter in letters:
        if letter == "V":
            poly = poly * vp
        poly = poly.definite_from_ref()
    return poly


def word_primitive(word: Word, osc: OscillatorSpec) -> BasisPoly:
    """The word's iterated integral as an exact symbolic function of the
    step size, anchored (and phase-referenced) at the step start.

    Cached per (word, Fourier structure); frequency, phase and amplitude
    exponent only enter at evaluation time, so one primitive serves a whole
    family of oscillators and every start time.
    """
    return _primitive_cached(word.letters, osc.coeffs)


def iterated_integral(word: Word, osc: OscillatorSpec, t_n: float,
                      h: float) -> IteratedIntegralValue:
    """Exact value of the word's nested integral over [t_n, t_n + h]."""
    if h < 0:
        raise ValueError("step size must be non-negative")
    val = word_primitive(word, osc).eval_shifted(osc, h, t_n)
    return IteratedIntegralValue(value=val, word=word, t_n=t_n, h=h)


_SCHEME_WORDS = {
    "euler": (Word.of("T"), Word.of("V")),
    "milstein": (Word.of("T"), Word.of("V"), Word.of("VV")),
}


def stochastic_scheme_words(scheme: str) -> frozenset[Word]:
    """Defining term set of the named classical one-step scheme."""
    try:
        return frozenset(_SCHEME_WORDS[scheme])
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choices: {sorted(_SCHEME_WORDS)}") from None


def policy_matches_scheme(kappa: float, rho_prime: float, scheme: str) -> bool:
    """True when the policy (kappa, kappa/rho') retains exactly the named
    scheme's words.  rho' is the increment exponent: V increments ~ h^rho'.

    Retention is monotone under deleting letters, so it suffices to test
    words up to one letter longer than the scheme's longest word: any
    longer retained word would contain a retained subword of that length.
    """
    if kappa <= 0 or rho_prime <= 0:
        raise ValueError("kappa and rho' must be positive")
    policy = TruncationPolicy(kappa0=kappa, kappa1=kappa / rho_prime)
    target = stochastic_scheme_words(scheme)
    probe_len = max(len(w.letters) for w in target) + 1
    for length in range(1, probe_len + 1):
        for letters in product("TV", repeat=length):
            w = Word(letters)
            if policy.retains(w) != (w in target):
                return False
    return True


def expected_local_order(policy: TruncationPolicy) -> float:
    """Diagnostic: h-order of the smallest excluded term class, i.e. the
    minimum of p0 + (kappa0/kappa1) p1 over excluded (p0, p1).  Not a
    guarantee; the true remainder is o(h^kappa0 + omega^-kappa1)."""
    ratio = policy.kappa0 / policy.kappa1
    limit0 = math.floor(policy.kappa0) + 2
    limit1 = math.floor(policy.kappa1) + 2
    best = math.inf
    for p0 in range(0, limit0 + 1):
        for p1 in range(0, limit1 + 1):
            if p0 == 0 and p1 == 0:
                continue
            if policy.weight(p0, p1) > 1.0 + RETENTION_TOL:
                best = min(best, p0 + ratio * p1)
    return best
