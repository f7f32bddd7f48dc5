"""Imaginary quadratic machinery for the CM specializations: ring class
groups (as binary quadratic form classes), algebraic Hecke characters, theta
series, hypothesis predicates with numeric root-number fits, the Katz/BDP
interpolation factors, the local-index brute force, and Gross vectors on
quaternionic class sets.

Ideals are manipulated through reduced binary quadratic forms throughout:
complex conjugation acts by class inversion, so no idele machinery is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from sympy import isprime, primerange
from sympy.ntheory.residue_ntheory import sqrt_mod

from .exactfield import ONE, ZERO, CyclotomicNumber, factorize
from .interpolation import PExpr, SatakeData

HALF = Fraction(1, 2)


def kronecker(a: int, n: int) -> int:
    """The Kronecker symbol (a|n)."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    sign = 1
    if n < 0:
        n = -n
        if a < 0:
            sign = -1
    # factor out twos of n
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            sign = -sign
    a %= n
    # Jacobi symbol by quadratic reciprocity
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a %= n
    return sign if n == 1 else 0


def _squarefree(n: int) -> bool:
    n = abs(n)
    return all(e == 1 for _, e in factorize(n)) if n > 1 else n == 1


@dataclass(frozen=True)
class ImQuadField:
    """An imaginary quadratic field of discriminant -d (d > 0)."""

    d: int

    def __post_init__(self):
        D = -self.d
        ok = (D % 4 == 1 and _squarefree(self.d)) or (
            D % 4 == 0 and (D // 4) % 4 in (2, 3) and _squarefree(D // 4)
        )
        if not ok:
            raise ValueError(f"-{self.d} is not a fundamental discriminant")

    @property
    def discriminant(self) -> int:
        return -self.d

    @property
    def w(self) -> int:
        """Number of roots of unity."""
        if self.d == 3:
            return 6
        if self.d == 4:
            return 4
        return 2

    def chi(self, p: int) -> int:
        """The quadratic character attached to the field."""
        return kronecker(-self.d, p)

    def splitting(self, p: int) -> str:
        s = self.chi(p)
        if s == 1:
            return "split"
        if s == -1:
            return "inert"
        return "ramified"


# ---------------------------------------------------------------------------
# binary quadratic forms and ring class groups
# ---------------------------------------------------------------------------


def reduce_form(a: int, b: int, c: int):
    """The reduced representative of a positive definite form."""
    while True:
        if c < a or (c == a and b < 0):
            a, b, c = c, -b, a
            continue
        if -a < b <= a:
            return (a, b, c)
        # normalize b into (-a, a]
        r = b % (2 * a)
        if r > a:
            r -= 2 * a
        c = c + (r * r - b * b) // (4 * a)
        b = r


def reduced_forms(D: int) -> list:
    """All primitive reduced positive definite forms of discriminant D < 0."""
    out = []
    bound = math.isqrt(-D // 3)
    for a in range(1, bound + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a:
                continue
            if c == a and b < 0:
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            out.append((a, b, c))
    return out


def _xgcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def compose_forms(f1, f2, D):
    """Gauss composition of primitive forms of the same discriminant."""
    a1, b1, _ = f1
    a2, b2, c2 = f2
    s = (b1 + b2) // 2
    e, u, v = _xgcd(a1, a2)
    d, w, z = _xgcd(e, s)
    x1, x2, x3 = w * u, w * v, z
    A = (a1 // d) * (a2 // d)
    B = (x1 * a1 * b2 + x2 * a2 * b1 + x3 * (b1 * b2 + D) // 2) // d
    B %= 2 * A
    C = (B * B - D) // (4 * A)
    return reduce_form(A, B, C)


class RingClassGroup:
    """The class group of the order of conductor c in an imaginary quadratic
    field, realized on reduced primitive binary quadratic forms."""

    def __init__(self, K: ImQuadField, c: int = 1):
        if c < 1:
            raise ValueError("conductor must be positive")
        self.K = K
        self.c = c
        self.D = -K.d * c * c
        self.forms = reduced_forms(self.D)
        self.index = {f: i for i, f in enumerate(self.forms)}
        self.identity = reduce_form(1, self.D % 2, ((self.D % 2) - self.D) // 4)
        self._basis = None
        self._decomp = None

    def __len__(self):
        return len(self.forms)

    @property
    def order(self) -> int:
        return len(self.forms)

    def compose(self, f, g):
        return compose_forms(f, g, self.D)

    def inverse(self, f):
        a, b, c = f
        return reduce_form(a, -b, c)

    conjugate = inverse  # complex conjugation acts by inversion

    def power(self, f, e: int):
        if e < 0:
            return self.power(self.inverse(f), -e)
        out = self.identity
        while e:
            if e & 1:
                out = self.compose(out, f)
            f = self.compose(f, f)
            e >>= 1
        return out

    def element_order(self, f) -> int:
        e, g = 1, f
        while g != self.identity:
            g = self.compose(g, f)
            e += 1
        return e

    def prime_form(self, q: int):
        """The class of a prime ideal of norm q above a split or ramified
        prime q not dividing the conductor."""
        if self.c % q == 0:
            raise ValueError(f"{q} divides the conductor")
        if kronecker(self.D, q) == -1:
            raise ValueError(f"{q} is inert")
        if q == 2:
            b = self.D % 2
            for cand in (b, b + 2):
                if (cand * cand - self.D) % 8 == 0:
                    b = cand
                    break
        else:
            r = sqrt_mod(self.D % q, q)
            if r is None:
                r = 0
            b = int(r)
            if (b - self.D) % 2:
                b = b + q if b + q <= 2 * q else b - q
        b %= 2 * q
        if (b * b - self.D) % (4 * q):
            b = 2 * q - b
        assert (b * b - self.D) % (4 * q) == 0
        return reduce_form(q, b, (b * b - self.D) // (4 * q))

    # -- abelian structure -------------------------------------------------

    def basis(self):
        """Generators realizing the group as a direct sum of cyclic groups;
        returns a list of (form, order) pairs."""
        if self._basis is not None:
            return self._basis
        basis = []
        sub = {self.identity}
        while len(sub) < self.order:
            # element of maximal order in the quotient by <basis>
            best, best_m = None, 0
            for f in self.forms:
                if f in sub:
                    continue
                m, g = 1, f
                while g not in sub:
                    g = self.compose(g, f)
                    m += 1
                if m > best_m:
                    best, best_m = f, m
            # adjust by an element of sub so the global order matches
            lift = None
            for h in sub:
                cand = self.compose(best, h)
                if self.element_order(cand) == best_m:
                    lift = cand
                    break
            assert lift is not None
            basis.append((lift, best_m))
            new = set()
            for s in sub:
                g = s
                for _ in range(best_m):
                    new.add(g)
                    g = self.compose(g, lift)
            sub = new
        self._basis = basis
        return basis

    def decompose(self, f):
        """Exponents of a class with respect to basis()."""
        if self._decomp is None:
            basis = self.basis()
            table = {}
            def rec(i, acc, exps):
                if i == len(basis):
                    table[acc] = tuple(exps)
                    return
                g, n = basis[i]
                cur = acc
                for e in range(n):
                    rec(i + 1, cur, exps + [e])
                    cur = self.compose(cur, g)
            rec(0, self.identity, [])
            self._decomp = table
        return self._decomp[f]

    def characters(self):
        """All characters of the group."""
        basis = self.basis()
        orders = [n for _, n in basis]
        chars = []
        def rec(i, exps):
            if i == len(orders):
                chars.append(AlgHeckeChar(self, tuple(exps)))
                return
            for e in range(orders[i]):
                rec(i + 1, exps + [e])
        rec(0, [])
        return chars

    def class_number(self) -> int:
        return self.order


def ring_class_group(K: ImQuadField, c: int = 1) -> RingClassGroup:
    return RingClassGroup(K, c)


# ---------------------------------------------------------------------------
# algebraic Hecke characters
# ---------------------------------------------------------------------------


class AlgHeckeChar:
    """A finite-order character of a ring class group, specified by exponents
    against the cyclic basis.  Conjugation acts by class inversion, so the
    conjugate character is the inverse; every such character is
    anticyclotomic."""

    def __init__(self, group: RingClassGroup, exps, infinity_type=(0, 0)):
        self.group = group
        orders = [n for _, n in group.basis()]
        self.exps = tuple(e % n for e, n in zip(exps, orders))
        self.infinity_type = infinity_type
        self._table = None

    @property
    def finite_order(self) -> bool:
        return self.infinity_type == (0, 0)

    def _values(self):
        if self._table is None:
            orders = [n for _, n in self.group.basis()]
            table = {}
            for f in self.group.forms:
                dec = self.group.decompose(f)
                val = ONE
                for e, d, n in zip(self.exps, dec, orders):
                    if (e * d) % n:
                        val = val * CyclotomicNumber.zeta(n, (e * d) % n)
                table[f] = val
            self._table = table
        return self._table

    def __call__(self, f) -> CyclotomicNumber:
        return self._values()[f]

    def value_at_prime(self, q: int) -> CyclotomicNumber:
        """Value on a prime ideal of residue degree one above q (a fixed
        choice; the conjugate prime is its class inverse)."""
        return self(self.group.prime_form(q))

    def at_p(self, p: int):
        """(psi(p-ideal), psi(conjugate)) for a split prime p."""
        if self.group.K.splitting(p) != "split":
            raise ValueError(f"{p} is not split")
        f = self.group.prime_form(p)
        return self(f), self(self.group.inverse(f))

    def __mul__(self, other: "AlgHeckeChar") -> "AlgHeckeChar":
        if other.group is not self.group:
            raise ValueError("characters live on different groups")
        k1 = (self.infinity_type[0] + other.infinity_type[0],
              self.infinity_type[1] + other.infinity_type[1])
        return AlgHeckeChar(self.group,
                            [a + b for a, b in zip(self.exps, other.exps)],
                            k1)

    def inverse(self) -> "AlgHeckeChar":
        return AlgHeckeChar(self.group, [-e for e in self.exps],
                            (-self.infinity_type[0], -self.infinity_type[1]))

    def conjugate(self) -> "AlgHeckeChar":
        """The character composed with complex conjugation on ideals."""
        return self.inverse()

    def is_trivial(self) -> bool:
        return all(e == 0 for e in self.exps) and self.finite_order

    def order(self) -> int:
        orders = [n for _, n in self.group.basis()]
        out = 1
        for e, n in zip(self.exps, orders):
            out = out * (n // math.gcd(e, n)) // math.gcd(out, n // math.gcd(e, n))
        return out

    def is_anticyclotomic(self) -> bool:
        # sigma inverts classes, so this always holds on a ring class group
        return True

    def __eq__(self, other):
        return (isinstance(other, AlgHeckeChar)
                and self.group is other.group and self.exps == other.exps
                and self.infinity_type == other.infinity_type)

    def __hash__(self):
        return hash((id(self.group), self.exps, self.infinity_type))

    def conductor(self) -> int:
        """Smallest conductor dividing c through which the character
        factors."""
        c = self.group.c
        best = c
        for cp in sorted(_divisors(c)):
            if cp == c:
                continue
            proj = _pushforward(self.group, cp)
            # trivial on the kernel of the projection?
            if all(self(f).is_rational() and self(f).rational_value() == 1
                   for f in self.group.forms if proj[f] == RingClassGroup(self.group.K, cp).identity):
                best = cp
                break
        return best


def _divisors(n: int):
    out = [1]
    for p, e in factorize(n):
        out = [d * p ** k for d in out for k in range(e + 1)]
    return sorted(out)


@lru_cache(maxsize=None)
def _small_group(d: int, c: int) -> RingClassGroup:
    return RingClassGroup(ImQuadField(d), c)


def _pushforward(G: RingClassGroup, cp: int) -> dict:
    """The projection RingClassGroup(K, c) -> RingClassGroup(K, c') on class
    representatives, computed through prime ideals of residue degree one."""
    if G.c % cp:
        raise ValueError("target conductor must divide the source conductor")
    H = _small_group(G.K.d, cp)
    out = {}
    missing = set(G.forms)
    for q in primerange(2, 50000):
        if not missing:
            break
        if (G.K.d * G.c) % q == 0:
            continue
        if kronecker(G.D, q) != 1:
            continue
        f = G.prime_form(q)
        if f in missing:
            out[f] = H.prime_form(q)
            missing.discard(f)
    if missing:
        raise RuntimeError("prime search bound exhausted")
    return out


def lift_to_conductor(psi: AlgHeckeChar, c: int) -> AlgHeckeChar:
    """Pull a character back through RingClassGroup(K, c) -> its group."""
    if c % psi.group.c:
        raise ValueError("can only lift to a multiple of the conductor")
    if c == psi.group.c:
        return psi
    G = _small_group(psi.group.K.d, c)
    proj = _pushforward(G, psi.group.c)
    # solve for exponents on the basis of G
    basis = G.basis()
    exps = []
    for g, n in basis:
        val = psi(proj[g])
        exps.append(_root_of_unity_exponent(val, n))
    lifted = AlgHeckeChar(G, exps, psi.infinity_type)
    # consistency across all classes, not just the basis
    for f in G.forms:
        assert lifted(f) == psi(proj[f])
    return lifted


def _root_of_unity_exponent(val: CyclotomicNumber, n: int) -> int:
    zn = CyclotomicNumber.zeta(n)
    acc = ONE
    for k in range(n):
        if acc == val:
            return k
        acc = acc * zn
    raise ValueError("value is not an n-th root of unity")


# ---------------------------------------------------------------------------
# theta series
# ---------------------------------------------------------------------------


class EisensteinTheta(ValueError):
    """Raised when the character is conjugation-invariant, so the theta
    series is Eisenstein rather than cuspidal."""


def theta_series(psi: AlgHeckeChar, B: int, cusp: bool = True) -> list:
    """Coefficients a_1..a_B of the weight-one theta series attached to a
    finite-order character: a_n sums psi over ideals of norm n prime to the
    conductor.  Returned as cyclotomic numbers."""
    G = psi.group
    if cusp and psi.order() <= 2:
        raise EisensteinTheta(
            "character equals its conjugate; theta series is Eisenstein")
    D_K, c = G.K.d, G.c

    def local(q: int, emax: int) -> list:
        """[a_{q^0}, ..., a_{q^emax}]"""
        if c % q == 0:
            return [ONE] + [ZERO] * emax
        s = G.K.splitting(q)
        if s == "inert":
            return [ONE if e % 2 == 0 else ZERO for e in range(emax + 1)]
        if s == "ramified":
            v = psi(G.prime_form(q))
            out, acc = [ONE], ONE
            for _ in range(emax):
                acc = acc * v
                out.append(acc)
            return out
        f = G.prime_form(q)
        v, w = psi(f), psi(G.inverse(f))
        out = []
        for e in range(emax + 1):
            tot = ZERO
            for i in range(e + 1):
                tot = tot + v ** i * w ** (e - i)
            out.append(tot)
        return out

    coeffs = [None, ONE] + [None] * (B - 1)
    for q in primerange(2, B + 1):
        emax = 0
        qe = 1
        while qe * q <= B:
            qe *= q
            emax += 1
        loc = local(q, emax)
        for n in range(1, B // q + 1):
            if n % q == 0 or coeffs[n] is None:
                continue
            qe, e = q, 1
            while n * qe <= B:
                coeffs[n * qe] = coeffs[n] * loc[e]
                qe *= q
                e += 1
    # fill pure prime powers (n=1 case is handled by the loop above)
    out = coeffs[1:]
    assert all(v is not None for v in out)
    return out


def theta_level(psi: AlgHeckeChar) -> int:
    G = psi.group
    return G.K.d * G.c * G.c


# ---------------------------------------------------------------------------
# psi_1 / psi_2 decomposition
# ---------------------------------------------------------------------------


def psi_split(psi_g: AlgHeckeChar, psi_h: AlgHeckeChar):
    """(psi_1, psi_2) = (psi_g * conj(psi_h), psi_g * psi_h), lifted to the
    least common conductor."""
    if psi_g.group.K != psi_h.group.K:
        raise ValueError("characters must be over the same field")
    c = _lcm(psi_g.group.c, psi_h.group.c)
    g = lift_to_conductor(psi_g, c)
    h = lift_to_conductor(psi_h, c)
    return g * h.conjugate(), g * h


def _lcm(a, b):
    return a * b // math.gcd(a, b)


# ---------------------------------------------------------------------------
# elliptic curve records and L-series coefficients
# ---------------------------------------------------------------------------


class IncompleteRecord(ValueError):
    """Raised when a record lacks the coefficient data needed for a check."""


@dataclass
class EllipticCurveRecord:
    """An elliptic curve over Q given by a global minimal-at-bad-primes
    Weierstrass model, with Fourier coefficients computed on demand."""

    label: str
    conductor: int
    ainvs: tuple | None = None
    ap_table: dict = field(default_factory=dict)
    cm_disc: int | None = None

    def __post_init__(self):
        if self.ainvs is not None:
            a1, a2, a3, a4, a6 = self.ainvs
            b2 = a1 * a1 + 4 * a2
            b4 = 2 * a4 + a1 * a3
            b6 = a3 * a3 + 4 * a6
            b8 = (a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4
                  + a2 * a3 * a3 - a4 * a4)
            self._b = (b2, b4, b6, b8)
            self._disc = (-b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6
                          + 9 * b2 * b4 * b6)

    def ap(self, p: int) -> int:
        if p in self.ap_table:
            return self.ap_table[p]
        if self.ainvs is None:
            raise IncompleteRecord(
                f"record {self.label} has no model and no a_{p}")
        self.ap_table[p] = _ap_point_count(self, p)
        return self.ap_table[p]

    def ap_vector(self, B: int):
        """numpy array a[n] for prime n <= B (0 elsewhere)."""
        import numpy

        out = numpy.zeros(B + 1)
        for p in primerange(2, B + 1):
            out[p] = self.ap(p)
        return out


def _ap_point_count(E: EllipticCurveRecord, p: int) -> int:
    import numpy

    a1, a2, a3, a4, a6 = E.ainvs
    if p == 2:
        naff = sum(1 for x in range(2) for y in range(2)
                   if (y * y + a1 * x * y + a3 * y
                       - x ** 3 - a2 * x * x - a4 * x - a6) % 2 == 0)
        good = E._disc % 2 != 0
        if good:
            return 2 - naff
        # count smooth affine points directly
        nsm = 0
        for x in range(2):
            for y in range(2):
                if (y * y + a1 * x * y + a3 * y
                        - x ** 3 - a2 * x * x - a4 * x - a6) % 2:
                    continue
                dx = (a1 * y - 3 * x * x - 2 * a2 * x - a4) % 2
                dy = (2 * y + a1 * x + a3) % 2
                if dx or dy:
                    nsm += 1
        return 2 - 1 - nsm
    b2, b4, b6, _ = E._b
    x = numpy.arange(p, dtype=numpy.int64)
    # (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    rhs = (4 * x % p * x % p * x + b2 * x % p * x + 2 * b4 * x + b6) % p
    res = numpy.full(p, -1, dtype=numpy.int64)
    res[(x * x) % p] = 1
    res[0] = 0
    chi = res[rhs]
    if E._disc % p != 0:
        return int(-chi.sum())
    # multiplicative or additive: remove the singular point, then count
    naff = int(p + chi.sum())
    nsm = naff - 1
    return p - 1 - nsm


# curve models recovered by exhaustive small-coefficient search: each is
# semistable (p | disc, p coprime to c4) with bad primes exactly the
# conductor support, except the CM curve of conductor 49 which is additive
CURVES = {
    "14.a": EllipticCurveRecord("14.a", 14, (1, 0, 1, -11, 12)),
    "17.a": EllipticCurveRecord("17.a", 17, (1, -1, 1, -6, -4)),
    "34.a": EllipticCurveRecord("34.a", 34, (1, 0, 0, -3, 1)),
    "39.a": EllipticCurveRecord("39.a", 39, (1, 1, 0, -19, 22)),
    "49.a": EllipticCurveRecord("49.a", 49, (1, -1, 0, -2, -1), cm_disc=-7),
    "51.a": EllipticCurveRecord("51.a", 51, (0, 1, 1, 1, -1)),
}


def curve_record(label: str) -> EllipticCurveRecord:
    key = label
    if key not in CURVES and "." in label:
        head, cls = label.split(".", 1)
        key = head + "." + cls.rstrip("0123456789")
    if key not in CURVES:
        raise IncompleteRecord(f"no stored model for {label}")
    return CURVES[key]


# ---------------------------------------------------------------------------
# root number fits
# ---------------------------------------------------------------------------


class IndeterminateSign(ValueError):
    """Raised when neither (or both) functional-equation signs fit."""


TWO_PI = 2 * math.pi


def _fit_sign(coeffs, conductor: int, kernel: str, tol: float = 1e-6):
    """Fit the sign in Phi(1/t) = sign * t^2 * Phi(t) for the smoothed sum
    Phi(t) = sum_n a_n k(n t / sqrt(q)); kernel 'exp' is exp(-2 pi x) (one
    Gamma factor), kernel 'bessel' is 2 K_0(4 pi sqrt(x)) (two)."""
    import numpy

    n = numpy.arange(1, len(coeffs))
    a = numpy.asarray(coeffs[1:], dtype=float)
    sq = math.sqrt(conductor)

    def phi(t):
        x = n * (t / sq)
        if kernel == "exp":
            k = numpy.exp(-TWO_PI * x)
        elif kernel == "bessel":
            from scipy.special import k0

            k = 2 * k0(2 * TWO_PI * numpy.sqrt(x))
        else:
            raise ValueError(f"unknown kernel {kernel!r}")
        return float(a @ k)

    residuals = {}
    for sign in (1, -1):
        worst = 0.0
        for t in (1.25, 1.4):
            lhs, rhs = phi(1 / t), sign * t * t * phi(t)
            scale = abs(lhs) + abs(rhs)
            worst = max(worst, abs(lhs - rhs) / scale if scale > 0 else 0.0)
        residuals[sign] = worst
    good = [s for s in (1, -1) if residuals[s] < tol]
    if len(good) != 1 or min(residuals[-s] for s in good) < 1e-3:
        raise IndeterminateSign(
            f"functional equation residuals {residuals} do not single out "
            f"a sign at tolerance {tol}")
    return good[0], residuals[good[0]]


def _truncation(conductor: int) -> int:
    return math.ceil(10 * math.sqrt(conductor))


def curve_sign(E: EllipticCurveRecord, twist: int = 1, tol: float = 1e-6):
    """Sign of the functional equation of L(E, s), optionally twisted by the
    quadratic character of fundamental discriminant `twist` (which must be
    coprime to the conductor)."""
    N = E.conductor * twist * twist
    if twist != 1 and math.gcd(E.conductor, twist) != 1:
        raise ValueError("twist discriminant must be coprime to the level")
    B = _truncation(N)
    coeffs = _multiplicative_extension(E, B, twist)
    sign, res = _fit_sign(coeffs, N, "exp", tol)
    return sign, res


def _multiplicative_extension(E: EllipticCurveRecord, B: int, twist: int = 1):
    """a_n for n <= B from the a_p, including the quadratic twist."""
    import numpy

    a = numpy.zeros(B + 1)
    a[1] = 1.0
    for p in primerange(2, B + 1):
        ap = E.ap(p) * (kronecker(twist, p) if twist != 1 else 1)
        chi = 1 if E.conductor % p else 0
        if twist != 1 and twist % p == 0:
            chi = 0
        # local coefficients a_{p^e} by the Hecke recursion
        loc = [1.0, float(ap)]
        while p ** len(loc) <= B:
            loc.append(loc[-1] * ap - chi * p * loc[-2])
        pe = p
        e = 1
        while pe <= B:
            for m in range(1, B // pe + 1):
                if m % p:
                    a[m * pe] = a[m] * loc[e]
            pe *= p
            e += 1
    return a


class ConductorUndetermined(ValueError):
    """Raised when the conductor of the twisted base-change L-series falls
    outside the clean local cases."""


def rankin_conductor(E: EllipticCurveRecord, psi: AlgHeckeChar) -> int:
    """Conductor of the degree-four L-series of E over the imaginary
    quadratic field twisted by a ring class character, in the tame cases
    where the local exponents are forced."""
    base, unknown = _conductor_parts(E, psi)
    if unknown:
        q, why = unknown[0]
        raise ConductorUndetermined(why)
    return base


def _conductor_parts(E: EllipticCurveRecord, psi: AlgHeckeChar):
    """Known part of the conductor together with the primes where the local
    exponent is not forced by the tame rules."""
    K = psi.group.K
    cchar = psi.conductor()
    norm_cond = 1
    unknown = []
    bad = {q for q, _ in factorize(E.conductor)}
    bad |= {q for q, _ in factorize(cchar)} if cchar > 1 else set()
    for q in sorted(bad):
        vN = 0
        n = E.conductor
        while n % q == 0:
            vN += 1
            n //= q
        vpsi = 0
        n = cchar
        while n and n % q == 0:
            vpsi += 1
            n //= q
        s = K.splitting(q)
        if s == "split":
            if vpsi == 0:
                exp_total = 2 * vN  # both places, norm q each
            elif vN == 0:
                exp_total = 4 * vpsi
            elif vN == 1:
                exp_total = 2 * (2 * vpsi)
            else:
                unknown.append(
                    (q, f"additive reduction meets a ramified character at {q}"))
                continue
            norm_cond *= q ** exp_total
        elif s == "inert":
            if vpsi == 0:
                if vN > 1:
                    unknown.append(
                        (q, f"additive reduction at the inert prime {q}"))
                    continue
                exp = vN
            elif vN == 0:
                exp = 2 * vpsi
            elif vN == 1:
                exp = 2 * vpsi  # Steinberg twisted by a ramified character
            else:
                unknown.append(
                    (q, f"additive reduction meets a ramified character at {q}"))
                continue
            norm_cond *= q ** (2 * exp)  # the prime has norm q^2
        else:  # ramified
            if vpsi == 0 and vN == 0:
                pass
            elif vpsi == 0 and vN >= 1:
                unknown.append(
                    (q, f"bad reduction at the ramified prime {q}"))
            else:
                unknown.append(
                    (q, f"ramified character at the ramified prime {q}"))
    return K.d * K.d * norm_cond, unknown


def rankin_coefficients(E: EllipticCurveRecord, psi: AlgHeckeChar, B: int):
    """Dirichlet coefficients (real floats) of L(E/K, psi, s) up to B."""
    import numpy

    K = psi.group.K
    cchar = psi.conductor()
    a = numpy.zeros(B + 1, dtype=complex)
    a[1] = 1.0
    for q in primerange(2, B + 1):
        s = K.splitting(q)
        ram_char = cchar % q == 0
        vN = 0
        n = E.conductor
        while n % q == 0:
            vN += 1
            n //= q
        # local Euler factor as polynomial coefficients in q^{-s}
        if s == "split":
            fq = psi.group.prime_form(q)
            u, ubar = ((0, 0) if ram_char
                       else (psi(fq).to_complex(),
                             psi(psi.group.inverse(fq)).to_complex()))
            ap = E.ap(q)
            chi = 1 if vN == 0 else 0
            def quad(val):
                return [1.0, -val * ap, (val * val * q) * chi] if val else [1.0]
            loc_poly = _poly_mul_c(quad(u), quad(ubar))
        elif s == "inert":
            if ram_char:
                loc_poly = [1.0]
            else:
                v = 1.0  # psi on the principal ideal (q)
                ap = E.ap(q)
                if vN == 0:
                    apk = ap * ap - 2 * q  # Frobenius squared
                    loc_poly = [1.0, 0.0, -v * apk, 0.0, v * v * q * q]
                elif vN == 1:
                    loc_poly = [1.0, 0.0, -v * ap * ap]
                else:
                    loc_poly = [1.0]
        else:  # ramified
            if ram_char:
                loc_poly = [1.0]
            else:
                v = psi(psi.group.prime_form(q)).to_complex()
                ap = E.ap(q)
                chi = 1 if vN == 0 else 0
                loc_poly = [1.0, -v * ap, v * v * q * chi]
        # expand 1/loc_poly up to q^e <= B
        emax = 0
        qe = 1
        while qe * q <= B:
            qe *= q
            emax += 1
        loc = [1.0 + 0j]
        for e in range(1, emax + 1):
            val = 0j
            for i in range(1, min(e, len(loc_poly) - 1) + 1):
                val -= loc_poly[i] * loc[e - i]
            loc.append(val)
        qe, e = q, 1
        while qe <= B:
            for m in range(1, B // qe + 1):
                if m % q:
                    a[m * qe] = a[m] * loc[e]
            qe *= q
            e += 1
    imag_max = float(numpy.abs(a.imag).max())
    if imag_max > 1e-9:
        raise IndeterminateSign(
            f"coefficients are not real (max imaginary part {imag_max:.2e}); "
            "the series is not self-dual")
    return a.real


def _poly_mul_c(p, q):
    out = [0j] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        for j, y in enumerate(q):
            out[i + j] += x * y
    return [complex(v) for v in out]


def root_number_fit(E: EllipticCurveRecord, psi: AlgHeckeChar,
                    tol: float = 1e-6, conductor: int | None = None):
    """Sign of the functional equation of the self-dual degree-four series
    L(E/K, psi, s).  A conjugation-invariant character degenerates to a
    product of two degree-two fits.  Returns (sign, residual)."""
    if psi.order() <= 2 and psi.is_trivial():
        s1, r1 = curve_sign(E, tol=tol)
        s2, r2 = curve_sign(E, twist=-psi.group.K.d, tol=tol)
        return s1 * s2, max(r1, r2)
    if psi.order() <= 2:
        raise IndeterminateSign(
            "quadratic ring class characters need a genus factorization "
            "that is not implemented")
    if conductor is None:
        base, unknown = _conductor_parts(E, psi)
        if not unknown:
            conductor = base
        elif (len(unknown) == 1
              and psi.group.K.splitting(unknown[0][0]) == "inert"):
            return _resolve_local(E, psi, base, unknown[0][0], tol)
        else:
            raise ConductorUndetermined(unknown[0][1])
    B = _truncation(conductor)
    coeffs = rankin_coefficients(E, psi, B)
    return _fit_sign(coeffs, conductor, "bessel", tol)


def _resolve_local(E: EllipticCurveRecord, psi: AlgHeckeChar, base: int,
                   q: int, tol: float):
    """Determine the undecided local factor at a single inert prime by trying
    the possible shapes against the functional equation.

    The twisted base change at q is either irreducible (trivial Euler factor)
    with conductor exponent 1, 2 or 3 at the prime, or it has an unramified
    constituent with Frobenius eigenvalue +-q alongside a ramified one of
    exponent 1 or 2.  Exactly one combination may satisfy a functional
    equation; anything else is reported as undetermined."""
    candidates = [(None, a) for a in (1, 2, 3)]
    candidates += [(x, a) for x in (q, -q) for a in (1, 2)]
    Bmax = _truncation(base * q ** (2 * 3))
    coeffs = rankin_coefficients(E, psi, Bmax)
    hits = []
    results = []
    for x, a in candidates:
        cond = base * q ** (2 * a)
        B = _truncation(cond)
        co = coeffs[: B + 1]
        if x is not None:
            co = co.copy()
            qe, e = q * q, 1
            while qe <= B:
                for m in range(1, B // qe + 1):
                    if m % q:
                        co[m * qe] = coeffs[m] * x ** e
                qe *= q * q
                e += 1
        try:
            s, r = _fit_sign(co, cond, "bessel", tol)
            hits.append((s, r, cond, x))
        except IndeterminateSign as exc:
            results.append(str(exc))
    if len(hits) != 1:
        raise ConductorUndetermined(
            f"local factor at {q} not determined by the functional equation "
            f"({len(hits)} candidate shapes fit)")
    s, r, cond, x = hits[0]
    return s, r


# ---------------------------------------------------------------------------
# dihedral orbits and hypothesis predicates
# ---------------------------------------------------------------------------


@dataclass
class DihedralOrbit:
    """A Galois orbit of cuspidal theta series of ring class characters of
    full conductor: dimension phi(order)/2, with the integral trace vector
    used for ordering."""

    group: RingClassGroup
    rep: AlgHeckeChar
    order: int
    dimension: int
    traces: tuple

    @property
    def level(self) -> int:
        return theta_level(self.rep)


def dihedral_orbits(K: ImQuadField, c: int, trace_bound: int = 30) -> list:
    """All cuspidal ring-class theta orbits of conductor exactly c, sorted by
    (dimension, trace vector) the way newform orbits are usually listed."""
    G = ring_class_group(K, c)
    seen = set()
    orbits = []
    for psi in G.characters():
        n = psi.order()
        if n <= 2 or psi.conductor() != c:
            continue
        key = frozenset(
            tuple((k * e) % o for e, (_, o) in zip(psi.exps, G.basis()))
            for k in range(1, n) if math.gcd(k, n) == 1
        )
        if key in seen:
            continue
        seen.add(key)
        # conjugate characters in the orbit, up to inversion
        members = []
        used = set()
        for k in range(1, n):
            if math.gcd(k, n) != 1:
                continue
            exps = tuple((k * e) % o for e, (_, o) in zip(psi.exps, G.basis()))
            inv = tuple((-e) % o for e, (_, o) in zip(exps, G.basis()))
            if exps in used or inv in used:
                continue
            used.add(exps)
            members.append(AlgHeckeChar(G, exps))
        traces = []
        thetas = [theta_series(m, trace_bound) for m in members]
        for i in range(trace_bound):
            tot = sum(th[i].to_complex() for th in thetas)
            assert abs(tot.imag) < 1e-9
            traces.append(round(tot.real))
        orbits.append(DihedralOrbit(G, members[0], n, len(members),
                                     tuple(traces)))
    orbits.sort(key=lambda o: (o.dimension, o.traces))
    return orbits


@dataclass
class CMDataset:
    """One digest row: an elliptic curve paired with a conjugate pair of CM
    weight-one theta series over K (the h = g* case uses psi_h = psi_g)."""

    curve: EllipticCurveRecord
    psi_g: AlgHeckeChar
    psi_h: AlgHeckeChar
    p: int
    deg4_conductor: int | None = None  # override where the rule has no case

    def __post_init__(self):
        self.K = self.psi_g.group.K
        self.psi_1, self.psi_2 = psi_split(self.psi_g, self.psi_h)


def _valuation(n: int, q: int) -> int:
    v = 0
    while n % q == 0:
        v += 1
        n //= q
    return v


def supercuspidal_primes(psi: AlgHeckeChar) -> list:
    """Primes where the theta series is supercuspidal: inert primes dividing
    the (ring class) conductor."""
    return [q for q, _ in factorize(psi.group.c)
            if psi.group.K.splitting(q) == "inert"] if psi.group.c > 1 else []


def _real_self_twist(psi: AlgHeckeChar):
    """The positive fundamental discriminant of a real quadratic self-twist
    field of the theta series, or None.  A self-twist by a quadratic
    character eta means psi/psi^sigma = psi^2 factors through the norm, which
    forces psi^4 = 1; eta is then pinned down on split primes."""
    n = psi.order()
    if n not in (4,):  # psi^2 must be quadratic and nontrivial
        return None
    G = psi.group
    level = theta_level(psi)
    sq = psi * psi
    # candidate fundamental discriminants dividing the level
    cands = []
    for d in range(5, level + 1):
        if d % 4 in (0, 1) and _is_fundamental_disc(d) and level % _radical(d) == 0:
            cands.append(d)
    for q in primerange(2, 8 * level):
        if level % q == 0:
            continue
        if kronecker(G.D, q) != 1:
            continue
        v = sq(G.prime_form(q)).to_complex()
        want = round(v.real)
        assert abs(v.imag) < 1e-9 and want in (1, -1)
        cands = [d for d in cands if kronecker(d, q) == want]
        if not cands:
            return None
        if len(cands) == 1 and q > 4 * level:
            break
    return cands[0] if len(cands) == 1 else None


def _is_fundamental_disc(d: int) -> bool:
    if d % 4 == 1:
        return _squarefree(d)
    return d % 16 in (8, 12) and _squarefree(d // 4)


def _radical(n: int) -> int:
    out = 1
    for q, _ in factorize(abs(n)):
        out *= q
    return out


def hypothesis_report(ds: CMDataset) -> dict:
    """Structured verdicts for the sign, ordinarity/regularity, and local
    ramification hypotheses of the rank-one CM setting."""
    E, K, p = ds.curve, ds.K, ds.p
    report = {}

    # --- sign hypothesis: product of root numbers over psi_1, psi_2 is -1
    signs = {}
    for name, psi in (("psi_1", ds.psi_1), ("psi_2", ds.psi_2)):
        entry = {}
        try:
            cond = ds.deg4_conductor if not psi.is_trivial() else None
            s, r = root_number_fit(E, psi, conductor=cond)
            entry.update(status="confirmed", sign=s, residual=r)
        except (IndeterminateSign, ConductorUndetermined) as exc:
            entry.update(status="skipped", reason=str(exc))
        signs[name] = entry
    confirmed = [v["sign"] for v in signs.values() if v["status"] == "confirmed"]
    product = math.prod(confirmed) if len(confirmed) == 2 else None
    report["A_prime"] = {
        "signs": signs,
        "product": product,
        "holds": product == -1 if product is not None else None,
        "status": "confirmed" if product is not None else "partial",
    }

    # --- ordinarity and regularity of the theta series at p
    bullets = {}
    for name, psi in (("psi_g", ds.psi_g), ("psi_h", ds.psi_h)):
        split = K.splitting(p) == "split"
        ordinary = split  # theta series are ordinary exactly at split primes
        d_rm = _real_self_twist(psi)
        rm_ok = d_rm is None or kronecker(d_rm, p) != 1
        if split:
            vp, vpbar = psi.at_p(p)
            regular = vp != vpbar
        else:
            regular = True  # distinct square roots of psi(Frob_p)
        bullets[name] = {
            "ordinary": ordinary,
            "real_self_twist": d_rm,
            "self_twist_ok": rm_ok,
            "regular": regular,
            "holds": ordinary and rm_ok and regular,
        }
    report["B_prime"] = {
        "bullets": bullets,
        "holds": all(b["holds"] for b in bullets.values()),
    }

    # --- local ramification pattern
    sc = sorted(set(supercuspidal_primes(ds.psi_g))
                | set(supercuspidal_primes(ds.psi_h)))
    failures = []
    for q in sc:
        if _valuation(E.conductor, q) != 1:
            failures.append((q, f"v_{q}(N_f) = {_valuation(E.conductor, q)}"))
        for name, psi in (("g", ds.psi_g), ("h", ds.psi_h)):
            v = 2 * _valuation(psi.group.c, q)
            if v != 2:
                failures.append((q, f"conductor norm valuation {v} for {name}"))
    for q, _ in factorize(E.conductor):
        if q in sc:
            continue
        if K.splitting(q) != "split":
            failures.append(
                (q, f"{q} divides N_f but is {K.splitting(q)} in K"))
    report["C_prime"] = {
        "supercuspidal": sc,
        "failures": failures,
        "holds": not failures,
    }

    # --- valuation bound: every level has q-valuation at most 2
    levels = {"f": E.conductor, "g": theta_level(ds.psi_g),
              "h": theta_level(ds.psi_h)}
    viol = [(lab, q, e) for lab, n in levels.items()
            for q, e in factorize(n) if e > 2]
    report["C"] = {"levels": levels, "violations": viol, "holds": not viol}

    # --- the unprimed sign hypothesis for the triple product
    report["A"] = {
        "holds": report["A_prime"]["holds"],
        "status": report["A_prime"]["status"],
    }
    # --- classicality at p: ordinary plus regular (the p-distinguished part)
    report["B"] = {
        "holds": all(b["ordinary"] and b["regular"] for b in bullets.values()),
    }
    return report


# ---------------------------------------------------------------------------
# interpolation constants for the two auxiliary p-adic L-functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolicScalar:
    """An exact scalar of the shape  rational * pi^a * sqrt(D_K)^b  times a
    product of opaque named symbols.  Enough structure to state period
    constants without evaluating transcendental quantities."""

    rational: Fraction
    pi_exp: int = 0
    sqrt_disc_exp: int = 0
    opaque: tuple = ()

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return SymbolicScalar(self.rational * other, self.pi_exp,
                                  self.sqrt_disc_exp, self.opaque)
        sym: dict = {}
        for name, e in self.opaque + other.opaque:
            sym[name] = sym.get(name, 0) + e
        return SymbolicScalar(
            self.rational * other.rational,
            self.pi_exp + other.pi_exp,
            self.sqrt_disc_exp + other.sqrt_disc_exp,
            tuple(sorted((n, e) for n, e in sym.items() if e)))

    __rmul__ = __mul__


class CMFamilyMember:
    """Weight-ell member of the ordinary CM family through a weight-one theta
    series: the finite order character times the ell-1 power of a fixed
    unit projection of a type (0,1) character of conductor pbar.

    The projected character value at the prime above p is an abstract unit
    whose square accounts for one factor of p; it is modelled as
    unit * p^(1/2), which retains exactly the relations used downstream."""

    def __init__(self, psi: AlgHeckeChar, p: int, ell: int, lam_unit=ONE):
        if psi.group.K.splitting(p) != "split":
            raise ValueError(f"{p} does not split in the CM field")
        if psi.group.c % p == 0:
            raise ValueError("p divides the ring class conductor")
        self.psi, self.p, self.ell = psi, p, ell
        vp, vpbar = psi.at_p(p)
        self.vp, self.vpbar = vp, vpbar
        self.chi_p = vp * vpbar  # nebentypus value at p
        self.lam = PExpr.monomial(p, lam_unit, Fraction(1, 2))

    def satake(self) -> SatakeData:
        alpha = PExpr.monomial(self.p, self.vp) * self.lam ** (self.ell - 1)
        beta = (PExpr.monomial(self.p, self.vpbar, self.ell - 1)
                * self.lam.inverse() ** (self.ell - 1))
        return SatakeData(label=f"theta[{self.ell}]", k=self.ell, p=self.p,
                          alpha=alpha, beta=beta, chi_p=self.chi_p)

    def adjoint_character_values(self):
        """Values (at p, pbar) of the character  psi_{ell-1}^{-2} chi N^ell
        whose Katz interpolation factor matches the adjoint Euler factor."""
        p, ell = self.p, self.ell
        at_p = (PExpr.monomial(p, self.vp.inverse() ** 2 * self.chi_p, ell)
                * self.lam.inverse() ** (2 * ell - 2))
        at_pbar = (PExpr.monomial(p, self.vp ** 2 * self.chi_p.inverse(),
                                  2 - ell)
                   * self.lam ** (2 * ell - 2))
        return at_p, at_pbar

    def adjoint_infinity_type(self):
        return (self.ell, 2 - self.ell)


def katz_epsilon(value_at_p: PExpr, value_at_pbar: PExpr) -> PExpr:
    """(1 - psi(p) p^{-1})(1 - psi^{-1}(pbar)) for a character given by its
    values at the two primes above a split p."""
    p = value_at_p.p
    one = PExpr.scalar(p, 1)
    pinv = PExpr.monomial(p, ONE, -1)
    return (one - value_at_p * pinv) * (one - value_at_pbar.inverse())


@dataclass(frozen=True)
class KatzFactors:
    gamma: SymbolicScalar     # (kappa_1 - 1) pi^{-kappa_2}
    euler: PExpr              # (1 - psi(p)/p)(1 - psi^{-1}(pbar))
    period: SymbolicScalar    # D_K^{kappa_2/2} 2^{-kappa_2}


def katz_factors(member: CMFamilyMember) -> KatzFactors:
    """Interpolation constants of the two-variable anticyclotomic measure at
    the adjoint-type specialization attached to a CM family member."""
    k1, k2 = member.adjoint_infinity_type()
    if not (k1 >= 1 and k2 <= 0):
        raise ValueError(
            f"infinity type {(k1, k2)} is outside the interpolation range")
    at_p, at_pbar = member.adjoint_character_values()
    gamma = SymbolicScalar(Fraction(k1 - 1), pi_exp=-k2)
    period = SymbolicScalar(Fraction(2 ** (-k2)), sqrt_disc_exp=k2)
    return KatzFactors(gamma, katz_epsilon(at_p, at_pbar), period)


def kronecker_limit_constant(psi: AlgHeckeChar, p: int):
    """(constant, euler) with value = constant * euler * log of the elliptic
    unit, for a finite order character outside the interpolation range."""
    K = psi.group.K
    norm_cond = psi.conductor() ** 2  # rational conductor: norm of (c)
    if K.splitting(p) != "split":
        raise ValueError(f"{p} does not split in the CM field")
    vp, vpbar = psi.at_p(p)
    one = PExpr.scalar(p, 1)
    pinv = PExpr.monomial(p, ONE, -1)
    euler = (one - PExpr.monomial(p, vp) * pinv) \
        * (one - PExpr.monomial(p, vpbar.inverse()))
    return Fraction(-1, 24 * norm_cond), euler


# ---------------------------------------------------------------------------
# square-root Rankin interpolation constants
# ---------------------------------------------------------------------------


def split_level(E: EllipticCurveRecord, K: ImQuadField):
    """N = N+ * N- with N- the (squarefree) product of primes inert in K.
    Raises when a prime with v_q(N) > 1 fails to split."""
    n_plus, n_minus = 1, 1
    for q, e in factorize(E.conductor):
        s = K.splitting(q)
        if s == "split":
            n_plus *= q ** e
        elif e > 1:
            raise ValueError(
                f"{q}^{e} divides the level but {q} does not split in K")
        elif s == "inert":
            n_minus *= q
        else:
            raise ValueError(
                f"level prime {q} ramifies in K")
    return n_plus, n_minus


@dataclass(frozen=True)
class BDPFactors:
    gamma: SymbolicScalar     # kappa! (kappa+1)! pi^{2 kappa + 1}
    euler: PExpr              # 1 - a_p psi^{-1}(pbar) + psi^{-2}(pbar) p
    period: SymbolicScalar    # (2 / c sqrt(D_K))^{2kappa+1} * local products


def bdp_factors(E: EllipticCurveRecord, value_at_pbar: PExpr, kappa: int,
                c: int, K: ImQuadField) -> BDPFactors:
    """Interpolation constants of the square-root Rankin measure at a
    character of infinity type (kappa+2, -kappa) given by its value at the
    prime pbar above the split prime p."""
    p = value_at_pbar.p
    n_plus, n_minus = split_level(E, K)
    if c % n_minus:
        raise ValueError(f"the ring class conductor must be divisible by the "
                         f"inert part {n_minus} of the level")
    if math.gcd(c, p * n_plus) != 1:
        raise ValueError("the ring class conductor must be coprime to p and "
                         "to the split part of the level")
    inv = value_at_pbar.inverse()
    one = PExpr.scalar(p, 1)
    euler = (one - E.ap(p) * inv
             + inv ** 2 * PExpr.monomial(p, ONE, 1))
    gamma = SymbolicScalar(
        Fraction(math.factorial(kappa) * math.factorial(kappa + 1)),
        pi_exp=2 * kappa + 1)
    rat = Fraction(2, c) ** (2 * kappa + 1)
    for q, _ in factorize(c // n_minus):
        rat *= Fraction(q - K.chi(q), q - 1)
    for q, _ in factorize(n_minus):
        rat *= Fraction(q * q, 1 - q * q)
    period = SymbolicScalar(rat, sqrt_disc_exp=-(2 * kappa + 1),
                            opaque=(("omega(f,psi)", -1),))
    return BDPFactors(gamma, euler, period)


def bdp_euler_factored(E: EllipticCurveRecord, value_at_pbar: PExpr,
                       alpha_unit=ONE) -> PExpr:
    """The same Euler factor written as (1 - alpha_f x)(1 - beta_f x) for a
    fixed splitting a_p = alpha + beta, alpha beta = p of the Hecke
    polynomial; alpha is modelled as unit * p^(1/2) when no exact ordinary
    root is supplied."""
    p = value_at_pbar.p
    alpha = PExpr.monomial(p, alpha_unit, Fraction(1, 2))
    ap = E.ap(p)
    if alpha * alpha - ap * alpha + PExpr.monomial(p, ONE, 1) != 0:
        raise ValueError("alpha is not a root of the Hecke polynomial")
    beta = PExpr.monomial(p, ONE, 1) * alpha.inverse()
    inv = value_at_pbar.inverse()
    one = PExpr.scalar(p, 1)
    return (one - alpha * inv) * (one - beta * inv)


def gross_zagier_factor(psi: AlgHeckeChar, E: EllipticCurveRecord,
                        p: int) -> PExpr:
    """Square of  1 - a_p/(psi(pbar) p) + 1/(psi(pbar)^2 p)  entering the
    outside-the-range Heegner point formula."""
    _, vpbar = psi.at_p(p)
    x = PExpr.monomial(p, vpbar.inverse(), -1)
    one = PExpr.scalar(p, 1)
    val = one - E.ap(p) * x + x * x * PExpr.monomial(p, ONE, 1)
    return val * val


def waldspurger_constant(k: int, j: int, c: int, E: EllipticCurveRecord,
                         K: ImQuadField) -> SymbolicScalar:
    """The explicit constant relating the central Rankin value to the square
    of a twisted sum of derivatives over the class group of a suborder."""
    if c % 2 == 0 or K.discriminant % 2 == 0:
        raise ValueError("the torus volume computation needs c and D_K odd")
    n_plus, n_minus = split_level(E, K)
    if c % n_minus:
        raise ValueError(f"the ring class conductor must be divisible by the "
                         f"inert part {n_minus} of the level")
    s_f = len(factorize(n_minus))
    rat = Fraction(1, 4) * math.factorial(j) * math.factorial(k + j - 1)
    rat *= K.w * c * 2 ** s_f
    for q, _ in factorize(c // n_minus):
        rat *= Fraction(q - K.chi(q), q - 1)
    for q, _ in factorize(n_minus):
        rat *= Fraction(q * q - 1, q * q)
    return SymbolicScalar(rat, pi_exp=k + 2 * j - 1, sqrt_disc_exp=1,
                          opaque=(("vol(O_c)", -1),))


# ---------------------------------------------------------------------------
# the local toric integral at a supercuspidal prime
# ---------------------------------------------------------------------------


def local_index(q: int, r: int) -> int:
    """[Z_{q^2}^x : Z_q^x (1 + q^r O)] = (q^2-1)/(q-1) * q^{r-1}."""
    return (q * q - 1) // (q - 1) * q ** (r - 1)


def local_index_bruteforce(q: int, r: int) -> int:
    """The same index by enumerating units of (Z/q^r)[x]/(x^2 - u) for a
    non-residue u and counting the subgroup with trivial x-part."""
    if not isprime(q) or q == 2:
        raise ValueError("odd prime residue characteristic required")
    u = next(n for n in range(2, q) if sqrt_mod(n, q) is None)
    m = q ** r
    total = sub = 0
    for a in range(m):
        for b in range(m):
            if (a * a - u * b * b) % q:
                total += 1
                if b == 0:
                    sub += 1
    assert total % sub == 0
    return total // sub


def local_integral_report(q: int, r: int) -> dict:
    """Closed form of the toric zeta integral against the Steinberg newvector
    at an inert prime dividing the character conductor, together with the
    constants entering its normalization."""
    index = local_index(q, r)
    J = Fraction(q - 1, q ** (r - 1) * (q * q - 1))
    l_pair = Fraction(q * q, q * q - 1)      # L(1/2, pi x pi_psi)
    l_eps = Fraction(q, q + 1)               # L_q(1, eps_K)
    normalized = J * l_eps / l_pair
    assert J == Fraction(1, index)
    assert normalized == Fraction(q - 1, q ** r * (q + 1))
    return {"q": q, "r": r, "index": index, "J": J,
            "pair_L_value": l_pair, "eps_L_value": l_eps,
            "normalized": normalized}


def triple_euler_factorization(mg: CMFamilyMember, mh: CMFamilyMember,
                               f_unit=ONE):
    """Both sides of the Euler-factor identity behind the factorization of
    the balanced square into the product of a Rankin factor and a pair of
    anticyclotomic adjoint factors.

    Returns (four_factor, split_product) which must agree exactly: the left
    side is the balanced interpolation factor of (f, theta_g, theta_h) at the
    weight-(2, ell, ell) point, the right side is
    (1 - b_f psi_1(p)/p)(1 - b_f psi_1(pbar)/p) * (1 - a_f X)(1 - b_f X)
    with X the inverse value at pbar of the product character of the two
    family members."""
    if mg.p != mh.p or mg.ell != mh.ell or mg.lam != mh.lam:
        raise ValueError("family members must share p, weight and the fixed "
                         "projection character")
    p, ell = mg.p, mg.ell
    half = Fraction(1, 2)
    alpha_f = PExpr.monomial(p, f_unit, half)
    beta_f = PExpr.monomial(p, _unit_inverse(f_unit), half)
    f = SatakeData(label="f", k=2, p=p, alpha=alpha_f, beta=beta_f,
                   chi_p=ONE)
    from .interpolation import balanced_euler_product
    lhs = balanced_euler_product(f, mg.satake(), mh.satake(), ell)

    one = PExpr.scalar(p, 1)
    pinv = PExpr.monomial(p, ONE, -1)
    psi1_p = mg.vp * mh.vpbar
    psi1_pbar = mg.vpbar * mh.vp
    script_e = ((one - beta_f * psi1_p * pinv)
                * (one - beta_f * psi1_pbar * pinv))
    lam_bar = PExpr.monomial(p, ONE, 1) * mg.lam.inverse()
    x = (PExpr.monomial(p, mg.vpbar * mh.vpbar)
         * lam_bar ** (2 * ell - 2) * PExpr.monomial(p, ONE, -ell))
    rankin_e = (one - alpha_f * x) * (one - beta_f * x)
    return lhs, script_e * rankin_e


def _unit_inverse(u):
    if isinstance(u, CyclotomicNumber):
        return u.inverse()
    return Fraction(1, 1) / Fraction(u)


# ---------------------------------------------------------------------------
# Gross vectors on quaternionic class sets
# ---------------------------------------------------------------------------


class EmbeddingNotFound(ValueError):
    """No left order of the class set optimally embeds the quadratic
    order; reports the norm bound that was searched exhaustively."""


def _shrinks_at(y, q: int, O) -> bool:
    """Whether (y - a)/q lies in O for some integer a, so the quadratic
    order generated by y is not optimally embedded at q."""
    one = O.alg.one()
    return any(O.contains((y - one * a) * Fraction(1, q))
               for a in range(q))


def _optimal_embedding(O, D: int, c: int):
    """An element y of the order O with trace t and norm (t^2 - D)/4, so
    Z[y] is a copy of the quadratic order of discriminant D, optimally
    embedded at the primes dividing its conductor c.  None if there is no
    such element; the search is exhaustive since the norm is fixed."""
    from .quatalg import elements_of_norm
    t = (-D) & 1
    n = Fraction(t - D, 4)
    qs = [q for q, _ in factorize(c)] if c > 1 else []
    for x in elements_of_norm(O, n):
        for y in (x, -x):
            if y.trd() != t:
                continue
            if all(not _shrinks_at(y, q, O) for q in qs):
                return y
    return None


def _form_rep_coprime(G: RingClassGroup, f, m: int, skip: int = 0):
    """Coefficients (A, B) of a form (A, B, *) equivalent to f with A
    coprime to m; the quadratic ideal Z A + Z (-B + sqrt(D))/2 of norm A
    then lies in the ideal class of f.  skip discards that many hits, to
    sample further representatives of the same class."""
    a, b, c = f
    for bound in range(1, 40):
        for u in range(-bound, bound + 1):
            for v in range(-bound, bound + 1):
                if max(abs(u), abs(v)) != bound:
                    continue
                if math.gcd(u, v) != 1:
                    continue
                A = a * u * u + b * u * v + c * v * v
                if math.gcd(A, m) != 1:
                    continue
                # complete (u, v) to a determinant-one change of variable
                g, s, mr = _xgcd(u, v)
                if g < 0:
                    g, s, mr = -g, -s, -mr
                r = -mr
                assert u * s - v * r == g == 1
                B = 2 * (a * u * r + c * v * s) + b * (u * s + v * r)
                assert (B * B - G.D) % (4 * A) == 0
                assert reduce_form(A, B, (B * B - G.D) // (4 * A)) == f
                if skip:
                    skip -= 1
                    continue
                return A, B
    raise RuntimeError(f"no representative of {f} coprime to {m} below the "
                       "search bound")


def _class_index(cs, lattice, norm: Fraction) -> int:
    """Index of the right ideal class of the given ideal in the class set."""
    from .quatalg import elements_of_norm
    for j in range(len(cs)):
        L = lattice.multiply(cs.ideals[j].conjugate())
        if elements_of_norm(L, norm * cs.norms[j]):
            return j
    raise RuntimeError("ideal matches no class representative")


def _hermitian_pairing(cs, u, v):
    """<u, v> = sum over classes of conj(u_x) v_x / w_x."""
    from .brandt import petersson_pairing
    uc = [_cyclo(x).conjugate() for x in u]
    return petersson_pairing(cs, uc, v)


def _cyclo(x) -> CyclotomicNumber:
    if isinstance(x, CyclotomicNumber):
        return x
    return CyclotomicNumber.from_rational(Fraction(x))


def _solve_full_rank(rows, rhs):
    """Solve a small square full-rank cyclotomic linear system."""
    n = len(rows)
    a = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next(i for i in range(col, n) if not a[i][col].is_zero())
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inverse()
        a[col] = [x * inv for x in a[col]]
        for i in range(n):
            if i != col and not a[i][col].is_zero():
                fac = a[i][col]
                a[i] = [x - fac * y for x, y in zip(a[i], a[col])]
    return [a[i][n] for i in range(n)]


def _gross_orbit(G: RingClassGroup, cs, skip: int = 0) -> dict:
    """The class-set orbit of a special point: for each form class of G,
    the index of the right ideal class reached by the translation ideal of
    that class from the base point.  skip is passed through to the
    representative search; the map must not depend on it."""
    D, c = G.D, G.c
    t = (-D) & 1
    for i in range(len(cs)):
        y = _optimal_embedding(cs.left_orders[i], D, c)
        if y is not None:
            break
    else:
        raise EmbeddingNotFound(
            f"no optimal embedding of the order of discriminant {D} into "
            f"any left order; searched all elements of reduced norm "
            f"{Fraction(t - D, 4)}")
    O, I, nI = cs.left_orders[i], cs.ideals[i], cs.norms[i]
    one = O.alg.one()
    m = 2 * cs.po.level * c * (-D)
    jmap = {}
    for f in G.forms:
        A, B = _form_rep_coprime(G, f, m, skip)
        z = y - one * ((B + t) // 2)
        L = O.scale(A) + O.right_mul(z)
        M = L.conjugate().multiply(I)
        jmap[f] = _class_index(cs, M, Fraction(A) * nI)
    return jmap


def gross_vector(hecke_evs: dict, psi: AlgHeckeChar, cs, base=None):
    """The f-isotypic projection of the weighted orbit of a special point
    of the ring class order on the ideal class set, and its height.

    A special point is an optimal embedding y of the order of conductor c
    in the field of psi into a left order O_i of the class set.  The class
    group acts through translation ideals: the class of the form (A, B, *)
    with A coprime to the level moves the base class [I_i] to the class of
    conj(O_i A + O_i (y - (B+t)/2)) I_i.  The orbit is summed against
    psi^{-1}, projected onto the simultaneous eigenspace of the Brandt
    matrices for the table {q: a_q}, and paired with itself (conjugate
    linearly in the first argument) to give the height.

    An optional base class translates the whole orbit, which scales the
    vector by psi(base).  Raises EmbeddingNotFound when no left order
    admits an optimal embedding.
    """
    from .brandt import f_eigenspace
    G = psi.group
    jmap = _gross_orbit(G, cs)
    raw = [ZERO] * len(cs)
    for f in G.forms:
        g = f if base is None else G.compose(f, base)
        raw[jmap[g]] = raw[jmap[g]] + psi(G.inverse(f))
    basis = f_eigenspace(cs, hecke_evs)
    if not basis:
        return raw, ZERO
    gram = [[_hermitian_pairing(cs, vk, vl) for vl in basis] for vk in basis]
    rhs = [_hermitian_pairing(cs, vk, raw) for vk in basis]
    coeffs = _solve_full_rank(gram, rhs)
    proj = [ZERO] * len(cs)
    for ck, vk in zip(coeffs, basis):
        for x in range(len(cs)):
            proj[x] = proj[x] + ck * _cyclo(vk[x])
    return proj, _hermitian_pairing(cs, proj, proj)
