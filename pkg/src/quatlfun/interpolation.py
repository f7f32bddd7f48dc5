"""Euler factors and normalization constants for the balanced interpolation
formula.

Everything here is exact: p-powers (including half-integral and negative
exponents) are carried symbolically as maps exponent -> cyclotomic unit, and
square roots of local zeta values are formal symbols with exact squares.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactfield import CyclotomicNumber, ONE, ZERO, fixed_square_root

HALF = Fraction(1, 2)


def _unit(x) -> CyclotomicNumber:
    if isinstance(x, CyclotomicNumber):
        return x
    return CyclotomicNumber.from_rational(Fraction(x))


class PExpr:
    """A finite sum of terms u * p^e with u cyclotomic and e a (half-)integer
    exponent, supporting exact arithmetic without evaluating powers of p."""

    __slots__ = ("p", "terms")

    def __init__(self, p: int, terms: dict):
        cleaned = {}
        for e, u in terms.items():
            u = _unit(u)
            if not u.is_zero():
                e = Fraction(e)
                if e.denominator not in (1, 2):
                    raise ValueError("only half-integral p-exponents occur")
                cleaned[e] = cleaned[e] + u if e in cleaned else u
        self.p = p
        self.terms = {e: u for e, u in cleaned.items() if not u.is_zero()}

    @staticmethod
    def monomial(p: int, unit, exponent=0) -> "PExpr":
        return PExpr(p, {Fraction(exponent): _unit(unit)})

    @staticmethod
    def scalar(p: int, value) -> "PExpr":
        return PExpr.monomial(p, value, 0)

    def _coerce(self, other) -> "PExpr":
        if isinstance(other, PExpr):
            if other.p != self.p:
                raise ValueError("mixed residue characteristics")
            return other
        return PExpr.scalar(self.p, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, u in other.terms.items():
            terms[e] = terms[e] + u if e in terms else u
        return PExpr(self.p, terms)

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return PExpr(self.p, {e: ZERO - u for e, u in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        terms: dict = {}
        for e1, u1 in self.terms.items():
            for e2, u2 in other.terms.items():
                e = e1 + e2
                u = u1 * u2
                terms[e] = terms[e] + u if e in terms else u
        return PExpr(self.p, terms)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = PExpr.scalar(self.p, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, CyclotomicNumber)):
            other = PExpr.scalar(self.p, other)
        if not isinstance(other, PExpr):
            return NotImplemented
        return self.p == other.p and self.terms == other.terms

    def __hash__(self):
        return hash((self.p, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def monomial_parts(self):
        """(unit, exponent) of a monomial expression."""
        if not self.is_monomial():
            raise ValueError("not a monomial in p")
        ((e, u),) = self.terms.items()
        return u, e

    def inverse(self) -> "PExpr":
        u, e = self.monomial_parts()
        return PExpr(self.p, {-e: u.inverse()})

    def __repr__(self):
        body = " + ".join(f"({u})*{self.p}^{e}" for e, u in sorted(self.terms.items()))
        return f"PExpr({body or '0'})"


@dataclass(frozen=True)
class SatakeData:
    """Satake parameters of a p-stabilized form: alpha * beta = chi(p) p^{k-1}."""

    label: str
    k: int
    p: int
    alpha: PExpr
    beta: PExpr
    chi_p: CyclotomicNumber

    def __post_init__(self):
        expected = PExpr.monomial(self.p, self.chi_p, self.k - 1)
        if self.alpha * self.beta != expected:
            raise ValueError(
                f"{self.label}: alpha*beta != chi(p) p^(k-1)")

    @property
    def ordinary(self) -> bool:
        if not self.alpha.is_monomial():
            return False
        _, e = self.alpha.monomial_parts()
        return e == 0


@dataclass(frozen=True)
class WeightPoint:
    k1: int
    k2: int
    k3: int

    @property
    def balanced(self) -> bool:
        s = self.k1 + self.k2 + self.k3
        return s % 2 == 0 and s > 2 * max(self.k1, self.k2, self.k3)


def balanced_euler_product(f: SatakeData, g: SatakeData, h: SatakeData,
                           c) -> PExpr:
    """The four-factor product (1 - a_f b_g b_h p^{-c}) ... (1 - b_f b_g b_h
    p^{-c}) without any range validation on c."""
    pc = PExpr.monomial(f.p, ONE, -Fraction(c))
    one = PExpr.scalar(f.p, 1)
    out = one
    for trip in ((f.alpha, g.beta, h.beta), (f.beta, g.alpha, h.beta),
                 (f.beta, g.beta, h.alpha), (f.beta, g.beta, h.beta)):
        out = out * (one - trip[0] * trip[1] * trip[2] * pc)
    return out


def euler_balanced(f: SatakeData, g: SatakeData, h: SatakeData,
                   w: WeightPoint) -> PExpr:
    """Modified Euler factor of the balanced interpolation formula at a
    balanced weight point; c = (k1+k2+k3-2)/2."""
    if not (f.p == g.p == h.p):
        raise ValueError("mixed residue characteristics")
    if (f.k, g.k, h.k) != (w.k1, w.k2, w.k3):
        raise ValueError("weight point does not match the Satake data")
    if f.chi_p * g.chi_p * h.chi_p != ONE:
        raise ValueError("central characters do not multiply to 1")
    if not w.balanced:
        raise ValueError(f"weight point {(w.k1, w.k2, w.k3)} is not balanced")
    c = Fraction(w.k1 + w.k2 + w.k3 - 2, 2)
    return balanced_euler_product(f, g, h, c)


def euler_adjoint(F: SatakeData) -> PExpr:
    """(1 - alpha^{-2} chi(p) p^{k-1})(1 - alpha^{-2} chi(p) p^{k-2})."""
    if F.alpha.is_zero():
        raise ValueError("adjoint Euler factor requires alpha != 0")
    inv2 = F.alpha.inverse() ** 2
    one = PExpr.scalar(F.p, 1)
    t1 = inv2 * PExpr.monomial(F.p, F.chi_p, F.k - 1)
    t2 = inv2 * PExpr.monomial(F.p, F.chi_p, F.k - 2)
    return (one - t1) * (one - t2)


# ---------------------------------------------------------------------------
# sign factors and normalization constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaPartition:
    """Bad primes sorted by the local discrete-series pattern: Steinberg-only
    primes, two-supercuspidal primes and three-supercuspidal primes."""

    steinberg: tuple
    two_sc: tuple
    three_sc: tuple

    @staticmethod
    def from_cases(cases: dict) -> "SigmaPartition":
        return SigmaPartition(tuple(cases.get(1, ())), tuple(cases.get(2, ())),
                              tuple(cases.get(3, ())))

    @property
    def all_primes(self) -> tuple:
        return tuple(sorted(self.steinberg + self.two_sc + self.three_sc))

    @property
    def supercuspidal(self) -> tuple:
        return tuple(sorted(self.two_sc + self.three_sc))


def sign_factor(partition: SigmaPartition, eps: dict, omega3: dict):
    """Product of the local sign contributions: (1 + e1 e2 sqrt(w3(l)))/2 at
    two-supercuspidal primes and (1 + e1 e2 e3)/4 at three-supercuspidal
    primes.  ``eps`` maps each supercuspidal prime to its tuple of local
    eigenvalue signs; ``omega3`` gives w3(l) at two-supercuspidal primes."""
    half = _unit(Fraction(1, 2))
    quarter = _unit(Fraction(1, 4))
    total = ONE
    for ell in partition.two_sc:
        e1, e2 = eps[ell][0], eps[ell][1]
        root = fixed_square_root(_unit(omega3[ell]))
        total = total * (ONE + _unit(e1 * e2) * root) * half
    for ell in partition.three_sc:
        e1, e2, e3 = eps[ell]
        total = total * (ONE + _unit(e1 * e2 * e3)) * quarter
    return total


@dataclass(frozen=True)
class SqrtZeta:
    """Formal square root of zeta_ell(2) = ell^2/(ell^2 - 1)."""

    ell: int

    @property
    def square(self) -> Fraction:
        return zeta_factor(self.ell, 2)


def zeta_factor(q: int, s: int) -> Fraction:
    """The local zeta value zeta_q(s) = 1/(1 - q^{-s})."""
    return Fraction(q ** s, q ** s - 1)


class MissingExternalDatum(ValueError):
    """An opaque external input was required but not supplied."""


@dataclass(frozen=True)
class NormalizationReport:
    """The scalar pieces multiplying the theta-quotient in the square-root
    balanced p-adic L-function, reported separately and exactly."""

    two_power_exponent: Fraction
    n_minus: int                      # enters as (N^-)^{-1/2}
    eps_sigma_minus: object           # enters as eps^{Sigma^-}(F)^{-1/2}
    conductor_f_prime: object         # enters as sqrt(f_{F'})^{-1}
    ell_pieces: dict                  # ell -> (exponent of ell, SqrtZeta(ell))
    sigma_exc_factor: Fraction        # prod over exceptional primes (1-q^{-1})^2
    two_variable_constant: Fraction   # 2^{-#(three-supercuspidal primes)}


def normalization_constant(partition: SigmaPartition, w: WeightPoint,
                           n_minus: int, eps_sigma_minus=None,
                           conductor_f_prime=None,
                           sigma_exc=()) -> NormalizationReport:
    """Assemble the normalization scalar of the square-root balanced p-adic
    L-function.  The away-from-ramification root number part and the
    congruence-conductor input cannot be derived here and must be supplied."""
    if eps_sigma_minus is None:
        raise MissingExternalDatum(
            "requires-external-datum: the away-from-ramification part of the "
            "root number must be supplied")
    if conductor_f_prime is None:
        raise MissingExternalDatum(
            "requires-external-datum: the congruence-module conductor must be "
            "supplied")
    ksum = w.k1 + w.k2 + w.k3
    two_exp = -Fraction(len(partition.all_primes) + 1 - ksum, 2)
    pieces = {ell: (Fraction(ksum) - Fraction(13, 2), SqrtZeta(ell))
              for ell in partition.supercuspidal}
    exc = Fraction(1)
    for q in sigma_exc:
        exc *= (1 - Fraction(1, q)) ** 2
    return NormalizationReport(
        two_power_exponent=two_exp,
        n_minus=n_minus,
        eps_sigma_minus=eps_sigma_minus,
        conductor_f_prime=conductor_f_prime,
        ell_pieces=pieces,
        sigma_exc_factor=exc,
        two_variable_constant=Fraction(1, 2 ** len(partition.three_sc)),
    )


def steinberg_b_constant(q: int) -> Fraction:
    """B-constant of a triple of unramified Steinberg twists at q || N^-:
    -zeta_q(2)^3 / zeta_q(1)^3."""
    return -zeta_factor(q, 2) ** 3 / zeta_factor(q, 1) ** 3


def local_zeta_constant(q: int, case: str, eps=None, omega3=None,
                        weights: WeightPoint | None = None,
                        exceptional: bool = False):
    """Normalized local zeta constant at a bad prime.

    ``case`` is one of "split-level", "two-supercuspidal",
    "three-supercuspidal".  At supercuspidal primes the value is the local
    sign piece times ell * |ell|^{2(k1+k2+k3-6)} / zeta_ell(2), with an extra
    -1 in the two-supercuspidal case coming from the B-constant of the
    Steinberg component."""
    if case == "split-level":
        return _unit((1 + Fraction(1, q)) ** 2 if exceptional else Fraction(1))
    if weights is None:
        raise ValueError("supercuspidal cases need the weight point")
    ksum = weights.k1 + weights.k2 + weights.k3
    power = _unit(Fraction(q) ** (13 - 2 * ksum) / zeta_factor(q, 2))
    if case == "two-supercuspidal":
        e1, e2 = eps[0], eps[1]
        root = fixed_square_root(_unit(omega3))
        sign = (ONE + _unit(e1 * e2) * root) * _unit(Fraction(1, 2))
        return ZERO - sign * power
    if case == "three-supercuspidal":
        e1, e2, e3 = eps
        sign = (ONE + _unit(e1 * e2 * e3)) * _unit(Fraction(1, 4))
        return sign * power
    raise ValueError(f"unknown case {case!r}")
