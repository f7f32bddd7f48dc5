"""Local representation data at primes of residually-inert type.

At a prime ell dividing the discriminant we track two kinds of irreducible
admissible representations of GL_2(Q_ell) that transfer to the local division
algebra:

* conductor-1: an unramified twist of Steinberg, recorded by the twist value
  at a uniformizer;
* conductor-2: the supercuspidal attached to a regular character of the
  unramified quadratic extension, recorded by the exponent of that character
  against a fixed generator of F_{l^2}^* together with the central character
  value at the uniformizer.

Characters take values in exact cyclotomic numbers throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactfield import CyclotomicNumber, _coerce, fixed_square_root


def local_zeta(q: int, s: int) -> Fraction:
    """zeta_q(s) = 1/(1 - q^{-s}) at an integer s != 0."""
    if s == 0:
        raise ZeroDivisionError("local zeta factor has a pole at s = 0")
    return 1 / (1 - Fraction(q) ** (-s))


def _unit_char_value(ell: int, e: int) -> CyclotomicNumber:
    """Value of the exponent-e character of F_{l^2}^* on a generator of F_l^*.

    F_l^* sits inside F_{l^2}^* as the (l+1)-st powers, so the restriction of
    g -> zeta^{e} is g0 -> zeta_{l-1}^{e}.
    """
    return CyclotomicNumber.zeta(ell - 1, e % (ell - 1))


@dataclass(frozen=True)
class ConductorOneRep:
    """Unramified twist of Steinberg: St x eta, with c = eta(uniformizer).

    c must be a root of unity (int +-1 accepted).  Central character sends
    the uniformizer to c^2 and is trivial on units.
    """

    ell: int
    c: CyclotomicNumber

    def __init__(self, ell: int, c):
        c = _coerce(c)
        if c.as_root_of_unity() is None:
            raise ValueError("twist value at the uniformizer must be a root of unity")
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "c", c)

    @property
    def conductor_exponent(self) -> int:
        return 1

    def central_at_uniformizer(self) -> CyclotomicNumber:
        return self.c * self.c

    def central_unit_value(self) -> CyclotomicNumber:
        return _coerce(1)

    def adjoint_l_factor(self, s: int) -> Fraction:
        return local_zeta(self.ell, s + 1)


@dataclass(frozen=True)
class ConductorTwoRep:
    """Supercuspidal from a regular character of the quadratic unramified field.

    The character on units is g -> zeta_{l^2-1}^e against the fixed generator
    of F_{l^2}^*; omega_pi is the central character value at the uniformizer
    (any root of unity).  Regularity means the character differs from its
    Frobenius twist, i.e. (l-1)e != 0 mod l^2-1.
    """

    ell: int
    e: int
    omega_pi: CyclotomicNumber

    def __init__(self, ell: int, e: int, omega_pi=1):
        q = ell * ell - 1
        e %= q
        if (ell - 1) * e % q == 0:
            raise ValueError(f"exponent {e} is not regular for ell={ell}")
        omega_pi = _coerce(omega_pi)
        if omega_pi.as_root_of_unity() is None:
            raise ValueError("central value at the uniformizer must be a root of unity")
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "omega_pi", omega_pi)

    @property
    def conductor_exponent(self) -> int:
        return 2

    def central_at_uniformizer(self) -> CyclotomicNumber:
        return self.omega_pi

    def central_unit_value(self) -> CyclotomicNumber:
        return _unit_char_value(self.ell, self.e)

    def frobenius_eigenvalue_sqrt(self) -> CyclotomicNumber:
        """The fixed square root of the central value at the uniformizer."""
        return fixed_square_root(self.omega_pi)

    def adjoint_l_factor(self, s: int) -> Fraction:
        return local_zeta(self.ell, 2 * s) / local_zeta(self.ell, s)


LocalRep = ConductorOneRep | ConductorTwoRep


def _check_triple(reps) -> int:
    reps = list(reps)
    if len(reps) != 3:
        raise ValueError("expected a triple of local representations")
    ells = {r.ell for r in reps}
    if len(ells) != 1:
        raise ValueError("representations live at different primes")
    return ells.pop()


def central_product_trivial(reps) -> bool:
    """Whether the product of the three central characters is trivial."""
    ell = _check_triple(reps)
    unit = _coerce(1)
    unif = _coerce(1)
    for r in reps:
        unit = unit * r.central_unit_value()
        unif = unif * r.central_at_uniformizer()
    return unit == 1 and unif == 1


def triple_case(reps) -> int:
    """Which of the three discrete-series patterns a triple falls in.

    1: three conductor-1 components; 2: one conductor-1 and two conductor-2;
    3: three conductor-2.  A triple with exactly two conductor-1 components
    has no case number here (its sign is always +1) and yields 0.
    """
    _check_triple(reps)
    n2 = sum(1 for r in reps if r.conductor_exponent == 2)
    return {0: 1, 2: 2, 3: 3}.get(n2, 0)


def epsilon_sign_triple(rep1, rep2, rep3) -> int:
    """The sign deciding which side of the quaternion dichotomy carries the
    invariant trilinear form: -1 when the division algebra does.

    Requires the product of central characters to be trivial.
    """
    reps = [rep1, rep2, rep3]
    ell = _check_triple(reps)
    if not central_product_trivial(reps):
        raise ValueError("product of central characters is not trivial")
    case = triple_case(reps)
    q = ell * ell - 1
    if case == 1:
        prod = _coerce(1)
        for r in reps:
            prod = prod * r.c
        return -1 if prod == 1 else 1
    if case == 2:
        e1, e2 = [r.e for r in reps if r.conductor_exponent == 2]
        hit = (e1 + e2) % q == 0 or (e1 + ell * e2) % q == 0
        return -1 if hit else 1
    if case == 3:
        e1, e2, e3 = [r.e for r in reps if r.conductor_exponent == 2]
        for d2 in (1, ell):
            for d3 in (1, ell):
                if (e1 + d2 * e2 + d3 * e3) % q == 0:
                    return -1
        return 1
    return 1


def triple_L_factor(reps, s: int) -> Fraction:
    """Local factor of the triple-product L-function for a discrete triple."""
    ell = _check_triple(reps)
    case = triple_case(reps)
    if case == 1:
        return local_zeta(ell, s + 3) * local_zeta(ell, s + 2) ** 2
    if case == 2:
        return local_zeta(ell, 2 * s + 2)
    if case == 3:
        return local_zeta(ell, 2 * s)
    raise ValueError("triple is not of discrete type at this prime")


def adjoint_L_factor(rep, s: int) -> Fraction:
    """Local adjoint L-factor of a single component."""
    return rep.adjoint_l_factor(s)


def partition_sigma(local_triples: dict) -> dict:
    """Partition the bad primes by discrete-series pattern.

    ``local_triples`` maps each prime to the triple of local components
    there; the result maps case numbers 1, 2, 3 to sorted prime lists.
    """
    out: dict[int, list[int]] = {1: [], 2: [], 3: []}
    for ell, reps in local_triples.items():
        case = triple_case(reps)
        if case == 0:
            raise ValueError(f"triple at {ell} is not of discrete type")
        out[case].append(ell)
    for v in out.values():
        v.sort()
    return out
