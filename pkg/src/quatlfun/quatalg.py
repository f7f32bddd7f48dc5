"""Definite rational quaternion algebras, lattices and orders.

An algebra is (a, b | Q): i^2 = a, j^2 = b, k = ij = -ji, with a, b < 0.
Lattices are full-rank Z-modules in the algebra, stored as a Hermite normal
form basis matrix over a common denominator; all arithmetic is exact.

The orders produced here are: maximal orders (found by discriminant
saturation), Eichler orders of squarefree level (intersections O cap uOu^-1
with nrd(u) = q), and orders that are residually inert at primes dividing the
discriminant, obtained globally as (Z + P) cap E for P the two-sided ideal of
reduced norm ell of a maximal order O containing the Eichler order E.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt, lcm, prod

from .exactfield import factorize


# ---------------------------------------------------------------------------
# Hilbert symbols and ramification
# ---------------------------------------------------------------------------


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    r = pow(a, (p - 1) // 2, p)
    return -1 if r == p - 1 else 1


def hilbert_symbol(a: int, b: int, p) -> int:
    """(a, b)_p for p an odd prime, 2, or the symbol 'inf'."""
    if a == 0 or b == 0:
        raise ValueError("arguments must be nonzero")
    if p == "inf":
        return -1 if a < 0 and b < 0 else 1
    if p == 2:
        # Serre, A Course in Arithmetic, Ch. III
        def v2(n):
            e = 0
            while n % 2 == 0:
                n //= 2
                e += 1
            return e, n

        alpha, u = v2(a)
        beta, w = v2(b)
        eps = lambda n: ((n - 1) // 2) % 2
        omega = lambda n: ((n * n - 1) // 8) % 2
        exp = eps(u) * eps(w) + alpha * omega(w) + beta * omega(u)
        return -1 if exp % 2 else 1
    # odd p
    e = 0
    va, vb = 0, 0
    aa, bb = a, b
    while aa % p == 0:
        aa //= p
        va += 1
    while bb % p == 0:
        bb //= p
        vb += 1
    # (a,b)_p = (-1)^{va vb eps(p)} (aa|p)^vb (bb|p)^va
    sign = 1
    if va % 2 and vb % 2 and (p - 1) // 2 % 2:
        sign = -sign
    if vb % 2 and _legendre(aa, p) == -1:
        sign = -sign
    if va % 2 and _legendre(bb, p) == -1:
        sign = -sign
    return sign


# ---------------------------------------------------------------------------
# the algebra and its elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuaternionAlgebra:
    a: int
    b: int

    def __post_init__(self):
        if self.a >= 0 or self.b >= 0:
            raise ValueError("only definite algebras (a, b < 0) are supported")

    def element(self, x0, x1=0, x2=0, x3=0) -> "QuatElement":
        return QuatElement(self, (Fraction(x0), Fraction(x1),
                                  Fraction(x2), Fraction(x3)))

    def one(self):
        return self.element(1)

    def gens(self):
        return (self.element(0, 1), self.element(0, 0, 1), self.element(0, 0, 0, 1))

    def ramified_primes(self) -> tuple[int, ...]:
        """Finite ramified primes (the algebra is also ramified at infinity)."""
        cands = {2}
        for n in (self.a, self.b):
            for q, _ in factorize(abs(n)):
                cands.add(q)
        return tuple(sorted(q for q in cands
                            if hilbert_symbol(self.a, self.b, q) == -1))

    def discriminant(self) -> int:
        return prod(self.ramified_primes())


class QuatElement:
    __slots__ = ("alg", "co")

    def __init__(self, alg: QuaternionAlgebra, co):
        self.alg = alg
        self.co = tuple(Fraction(c) for c in co)

    def __add__(self, other):
        return QuatElement(self.alg, [x + y for x, y in zip(self.co, other.co)])

    def __sub__(self, other):
        return QuatElement(self.alg, [x - y for x, y in zip(self.co, other.co)])

    def __neg__(self):
        return QuatElement(self.alg, [-x for x in self.co])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return QuatElement(self.alg, [x * other for x in self.co])
        a, b = self.alg.a, self.alg.b
        x0, x1, x2, x3 = self.co
        y0, y1, y2, y3 = other.co
        return QuatElement(self.alg, (
            x0 * y0 + a * x1 * y1 + b * x2 * y2 - a * b * x3 * y3,
            x0 * y1 + x1 * y0 - b * x2 * y3 + b * x3 * y2,
            x0 * y2 + x2 * y0 + a * x1 * y3 - a * x3 * y1,
            x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
        ))

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def conj(self) -> "QuatElement":
        x0, x1, x2, x3 = self.co
        return QuatElement(self.alg, (x0, -x1, -x2, -x3))

    def trd(self) -> Fraction:
        return 2 * self.co[0]

    def nrd(self) -> Fraction:
        a, b = self.alg.a, self.alg.b
        x0, x1, x2, x3 = self.co
        return x0 * x0 - a * x1 * x1 - b * x2 * x2 + a * b * x3 * x3

    def inverse(self) -> "QuatElement":
        n = self.nrd()
        if n == 0:
            raise ZeroDivisionError("zero quaternion")
        return self.conj() * Fraction(1, 1) * Fraction(n.denominator, n.numerator)

    def is_zero(self) -> bool:
        return not any(self.co)

    def __eq__(self, other):
        return isinstance(other, QuatElement) and self.co == other.co and \
            self.alg == other.alg

    def __hash__(self):
        return hash((self.alg, self.co))

    def __repr__(self):
        return f"Quat{self.co}"


# ---------------------------------------------------------------------------
# integer linear algebra
# ---------------------------------------------------------------------------


def hnf_rows(rows):
    """Row Hermite normal form of an integer matrix with 4 columns.

    Returns the unique full-rank upper-triangular basis with positive pivots
    and entries above each pivot reduced into [0, pivot).
    """
    mat = [list(r) for r in rows if any(r)]
    res = []
    col = 0
    while col < 4 and mat:
        # gcd elimination in this column
        while True:
            nz = [r for r in mat if r[col]]
            if not nz:
                break
            piv = min(nz, key=lambda r: abs(r[col]))
            mat.remove(piv)
            if piv[col] < 0:
                piv = [-x for x in piv]
            rest = []
            done = True
            for r in mat:
                if r[col]:
                    q = r[col] // piv[col]
                    r = [x - q * y for x, y in zip(r, piv)]
                    if r[col]:
                        done = False
                rest.append(r)
            mat = rest
            if done:
                res.append(piv)
                break
            mat.append(piv)
        col += 1
    res.sort(key=lambda r: next(i for i, x in enumerate(r) if x))
    # reduce above pivots, in increasing pivot order so that entries touched
    # in later columns get reduced by the subsequent passes
    for i in range(len(res)):
        pc = next(c for c, x in enumerate(res[i]) if x)
        for j in range(i):
            q = res[j][pc] // res[i][pc]
            if q:
                res[j] = [x - q * y for x, y in zip(res[j], res[i])]
    return [tuple(r) for r in res]


def _det4(m):
    """Determinant of a 4x4 matrix of Fractions/ints (cofactor expansion)."""

    def det3(a):
        return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))

    total = 0
    for c in range(4):
        minor = [[m[r][cc] for cc in range(4) if cc != c] for r in range(1, 4)]
        term = m[0][c] * det3(minor)
        total += term if c % 2 == 0 else -term
    return total


def _inv4(m):
    """Inverse of a 4x4 Fraction matrix by Gauss-Jordan."""
    a = [[Fraction(x) for x in row] + [Fraction(1 if i == j else 0) for j in range(4)]
         for i, row in enumerate(m)]
    for c in range(4):
        piv = next(r for r in range(c, 4) if a[r][c] != 0)
        a[c], a[piv] = a[piv], a[c]
        inv = 1 / a[c][c]
        a[c] = [x * inv for x in a[c]]
        for r in range(4):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [row[4:] for row in a]


def _fsqrt_floor(x: Fraction) -> int:
    """floor(sqrt(x)) for a nonnegative rational."""
    if x < 0:
        return -1
    return isqrt(x.numerator * x.denominator) // x.denominator


# ---------------------------------------------------------------------------
# lattices
# ---------------------------------------------------------------------------


class Lattice:
    """A full-rank lattice in a quaternion algebra (canonical HNF basis)."""

    __slots__ = ("alg", "den", "mat")

    def __init__(self, alg: QuaternionAlgebra, den: int, mat):
        g = gcd(den, *(x for row in mat for x in row))
        if g > 1:
            den //= g
            mat = [[x // g for x in row] for row in mat]
        self.alg = alg
        self.den = den
        self.mat = tuple(tuple(r) for r in mat)
        assert len(self.mat) == 4, "lattice is not full rank"

    @staticmethod
    def from_rows(alg, rows):
        """Build from an iterable of QuatElements or coefficient 4-tuples."""
        vecs = []
        for r in rows:
            if isinstance(r, QuatElement):
                vecs.append(r.co)
            else:
                vecs.append(tuple(Fraction(x) for x in r))
        den = lcm(*(c.denominator for v in vecs for c in v))
        ints = [[int(c * den) for c in v] for v in vecs]
        return Lattice(alg, den, hnf_rows(ints))

    def basis(self):
        return [QuatElement(self.alg, [Fraction(x, self.den) for x in row])
                for row in self.mat]

    def det(self) -> Fraction:
        return Fraction(abs(_det4(self.mat)), self.den ** 4)

    def scale(self, c) -> "Lattice":
        c = Fraction(c)
        return Lattice.from_rows(
            self.alg, [[x * c for x in b.co] for b in self.basis()])

    def contains(self, x: QuatElement) -> bool:
        return all(v.denominator == 1 for v in self.coordinates(x))

    def coordinates(self, x: QuatElement):
        """c with x = sum c_m b_m over the basis rows b_m."""
        inv = self._inv()
        return [sum(inv[c][r] * x.co[r] for r in range(4)) for c in range(4)]

    def _inv(self):
        rows = [[Fraction(v, self.den) for v in row] for row in self.mat]
        return _inv4([list(col) for col in zip(*rows)])

    def __add__(self, other) -> "Lattice":
        return Lattice.from_rows(self.alg, self.basis() + other.basis())

    def multiply(self, other) -> "Lattice":
        """Lattice generated by all products of basis elements."""
        rows = [x * y for x in self.basis() for y in other.basis()]
        return Lattice.from_rows(self.alg, rows)

    def left_mul(self, x: QuatElement) -> "Lattice":
        return Lattice.from_rows(self.alg, [x * b for b in self.basis()])

    def right_mul(self, x: QuatElement) -> "Lattice":
        return Lattice.from_rows(self.alg, [b * x for b in self.basis()])

    def conjugate(self) -> "Lattice":
        return Lattice.from_rows(self.alg, [b.conj() for b in self.basis()])

    def intersect(self, other) -> "Lattice":
        """Via duality: (L cap M)* = L* + M* for the standard pairing."""
        d1 = self._dual_rows()
        d2 = other._dual_rows()
        s = Lattice.from_rows(self.alg, d1 + d2)
        return Lattice.from_rows(self.alg, s._dual_rows())

    def _dual_rows(self):
        rows = [[Fraction(v, self.den) for v in row] for row in self.mat]
        inv = _inv4(rows)
        return [tuple(inv[r][c] for r in range(4)) for c in range(4)]

    def index_in(self, other) -> Fraction:
        """[other : self] as a positive rational."""
        return self.det() / other.det()

    def gram(self):
        """Gram matrix of the reduced norm form on this basis."""
        bs = self.basis()
        return [[Fraction((x * y.conj()).trd(), 2) for y in bs] for x in bs]

    def __eq__(self, other):
        return (isinstance(other, Lattice) and self.alg == other.alg
                and self.den == other.den and self.mat == other.mat)

    def __hash__(self):
        return hash((self.alg, self.den, self.mat))

    def __repr__(self):
        return f"Lattice(1/{self.den} * {self.mat})"


def _lll_transform(G):
    """Integer row transform T such that T acts LLL-reducing on the basis
    whose Gram matrix (of the norm form) is G.  Exact, delta = 3/4."""
    n = len(G)
    B = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def ip(u, v):
        return sum(u[i] * G[i][j] * v[j] for i in range(n) for j in range(n))

    def gs():
        mu = [[Fraction(0)] * n for _ in range(n)]
        star = [Fraction(0)] * n
        vecs = [[Fraction(x) for x in row] for row in B]
        orth = []
        for i in range(n):
            w = list(vecs[i])
            for j in range(i):
                mu[i][j] = ip(vecs[i], orth[j]) / star[j]
                w = [a - mu[i][j] * b for a, b in zip(w, orth[j])]
            orth.append(w)
            star[i] = ip(w, w)
        return mu, star

    k = 1
    while k < n:
        mu, star = gs()
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                B[k] = [a - q * b for a, b in zip(B[k], B[j])]
                mu, star = gs()
        if star[k] >= (Fraction(3, 4) - mu[k][k - 1] ** 2) * star[k - 1]:
            k += 1
        else:
            B[k], B[k - 1] = B[k - 1], B[k]
            k = max(k - 1, 1)
    return B


def short_vectors(lat: Lattice, bound: Fraction):
    """All nonzero x in lat with nrd(x) <= bound, up to sign (x, not -x).

    Exact Fincke-Pohst enumeration on the rational Cholesky decomposition of
    the (positive definite) norm form, after LLL-reducing the basis.
    """
    T = _lll_transform(lat.gram())
    lat_basis = lat.basis()
    red_basis = []
    for row in T:
        x = lat_basis[0] * row[0]
        for m in range(1, 4):
            if row[m]:
                x = x + lat_basis[m] * row[m]
        red_basis.append(x)
    G = [[Fraction((x * y.conj()).trd(), 2) for y in red_basis]
         for x in red_basis]
    # LDL^T decomposition
    n = 4
    L = [[Fraction(0)] * n for _ in range(n)]
    Dd = [Fraction(0)] * n
    for i in range(n):
        L[i][i] = Fraction(1)
        for j in range(i):
            s = G[i][j] - sum(L[i][k] * L[j][k] * Dd[k] for k in range(j))
            L[i][j] = s / Dd[j]
        Dd[i] = G[i][i] - sum(L[i][k] ** 2 * Dd[k] for k in range(i))
        assert Dd[i] > 0, "norm form is not positive definite"
    bound = Fraction(bound)
    out = []
    coords = [0] * n

    def rec(i, rem, center_adjust):
        # enumerate coords[i] with D_i (c_i + mu_i)^2 <= rem
        mu = center_adjust
        r = _fsqrt_floor(rem / Dd[i]) + 1
        center = -int(mu)
        for c in range(center - r - 1, center + r + 2):
            t = Dd[i] * (c + mu) ** 2
            if t > rem:
                continue
            coords[i] = c
            if i == 0:
                if any(coords):
                    out.append(tuple(coords))
            else:
                adj = sum(L[k][i - 1] * coords[k] for k in range(i, n))
                rec(i - 1, rem - t, adj)

    rec(n - 1, bound, Fraction(0))
    # de-duplicate sign pairs: keep the lexicographically positive one
    seen = set()
    result = []
    bs = red_basis
    for c in out:
        if tuple(-x for x in c) in seen:
            continue
        seen.add(c)
        x = bs[0] * c[0]
        for m in range(1, 4):
            if c[m]:
                x = x + bs[m] * c[m]
        result.append(x)
    return result


def elements_of_norm(lat: Lattice, n) -> list[QuatElement]:
    """All x in lat with nrd(x) = n, up to sign."""
    return [x for x in short_vectors(lat, Fraction(n)) if x.nrd() == n]


def count_norm(lat: Lattice, n) -> int:
    """Number of x in lat with nrd(x) = n, counting both signs."""
    return 2 * len(elements_of_norm(lat, n))


# ---------------------------------------------------------------------------
# orders
# ---------------------------------------------------------------------------


def discrd(lat: Lattice) -> int:
    """Reduced discriminant of an order (sqrt of the trace-form determinant)."""
    bs = lat.basis()
    m = [[(x * y.conj()).trd() for y in bs] for x in bs]
    d = _det4(m)
    assert d > 0 and d.denominator == 1
    r = isqrt(int(d))
    assert r * r == d, "trace form determinant is not a perfect square"
    return r


def is_order(lat: Lattice) -> bool:
    if not lat.contains(lat.alg.one()):
        return False
    prod_lat = lat.multiply(lat)
    return all(lat.contains(b) for b in prod_lat.basis())


def _closure(lat: Lattice) -> Lattice:
    """Close a unital lattice under multiplication."""
    cur = lat
    for _ in range(12):
        nxt = cur + cur.multiply(cur)
        if nxt == cur:
            return cur
        cur = nxt
    raise RuntimeError("multiplicative closure did not stabilize")


def maximal_order(alg: QuaternionAlgebra) -> Lattice:
    """A maximal order, by discriminant saturation from Z<1, i, j, k>."""
    one = alg.one()
    i, j, k = alg.gens()
    O = Lattice.from_rows(alg, [one, i, j, k])
    target = alg.discriminant()
    d = discrd(O)
    while d != target:
        improved = False
        for p, _ in factorize(d // target):
            if improved:
                break
            bs = O.basis()
            for c0 in range(p):
                if improved:
                    break
                for c1 in range(p):
                    if improved:
                        break
                    for c2 in range(p):
                        if improved:
                            break
                        for c3 in range(p):
                            if not (c0 or c1 or c2 or c3):
                                continue
                            x = (bs[0] * c0 + bs[1] * c1 + bs[2] * c2
                                 + bs[3] * c3) * Fraction(1, p)
                            if x.trd().denominator != 1 or x.nrd().denominator != 1:
                                continue
                            cand = _closure(Lattice.from_rows(alg, bs + [x]))
                            if not is_order(cand):
                                continue
                            dc = discrd(cand)
                            if dc < d and dc % target == 0:
                                O = cand
                                d = dc
                                improved = True
                                break
        if not improved:
            raise RuntimeError(f"saturation stuck at discriminant {d}")
    return O


def construct_algebra(disc_primes) -> QuaternionAlgebra:
    """A definite algebra ramified exactly at the given odd primes
    (odd cardinality) and infinity, found by a small coefficient search."""
    want = tuple(sorted(disc_primes))
    if not want or len(want) % 2 == 0 or any(p % 2 == 0 for p in want):
        raise ValueError("need a nonempty set of odd primes of odd cardinality")
    for bound in range(1, 60):
        for a in range(-1, -bound - 1, -1):
            for b in range(-1, -bound - 1, -1):
                if max(-a, -b) != bound - 1 and bound > 1:
                    continue
                alg = QuaternionAlgebra(a, b)
                if alg.ramified_primes() == want:
                    return alg
    raise RuntimeError(f"no algebra with ramification {want} within search bound 60")


def two_sided_radical(O: Lattice, ell: int) -> Lattice:
    """The two-sided ideal P of O with P^2 = ell*O, at a ramified prime ell.

    Constructed as ell*O + w*O for a trace-zero element w of reduced norm ell.
    """
    ws = [w for w in elements_of_norm(O, ell) if w.trd() == 0]
    if not ws:
        raise RuntimeError(f"no trace-zero element of norm {ell}")
    w = ws[0]
    P = O.scale(ell) + O.left_mul(w)
    assert P.multiply(P) == O.scale(ell)
    assert O.multiply(P) == P and P.multiply(O) == P
    return P


def eichler_order(O: Lattice, n_plus: int) -> Lattice:
    """An Eichler order of squarefree level n_plus inside the maximal O."""
    E = O
    lvl = discrd(O)
    for q, e in factorize(n_plus):
        if e > 1:
            raise ValueError("only squarefree Eichler levels are supported")
        us = elements_of_norm(E, q)
        found = None
        for u in us:
            cand = E.intersect(E.left_mul(u).right_mul(u.inverse()))
            if is_order(cand) and discrd(cand) == lvl * q:
                found = cand
                break
        if found is None:
            raise RuntimeError(f"no Eichler intersection of level {q}")
        E = found
        lvl *= q
    return E


@dataclass
class PizerOrder:
    """A level N+ * prod(q | N-sp) * prod(ell^2, ell | N-sc) order, residually
    inert at the supercuspidal primes."""

    alg: QuaternionAlgebra
    order: Lattice
    maximal: Lattice
    eichler: Lattice
    n_plus: int
    n_minus_sp: int
    n_minus_sc: tuple[int, ...]
    radicals: dict  # ell -> two-sided ideal P of the maximal order

    @property
    def level(self) -> int:
        return self.n_plus * self.n_minus_sp * prod(q * q for q in self.n_minus_sc)


def pizer_order(alg: QuaternionAlgebra, n_plus: int = 1,
                n_minus_sc: tuple[int, ...] = ()) -> PizerOrder:
    """Construct the order of level n_plus * N-sp * prod ell^2.

    The ramified primes of the algebra not listed in n_minus_sc make up
    N-sp (the order stays maximal there, matching Steinberg components);
    at each ell in n_minus_sc the order becomes residually inert.
    """
    ram = alg.ramified_primes()
    n_minus_sc = tuple(sorted(n_minus_sc))
    for ell in n_minus_sc:
        if ell not in ram:
            raise ValueError(f"{ell} is not ramified in the algebra")
    if gcd(n_plus, prod(ram)) != 1:
        raise ValueError("n_plus must be prime to the discriminant")
    n_minus_sp = prod(q for q in ram if q not in n_minus_sc)
    O = maximal_order(alg)
    E = eichler_order(O, n_plus)
    R = E
    radicals = {}
    for ell in n_minus_sc:
        P = two_sided_radical(O, ell)
        radicals[ell] = P
        ZP = _z_plus(P)
        R = R.intersect(ZP)
    po = PizerOrder(alg, R, O, E, n_plus, n_minus_sp, n_minus_sc, radicals)
    assert is_order(R)
    assert discrd(R) == po.level, (discrd(R), po.level)
    return po


def _z_plus(P: Lattice) -> Lattice:
    """The lattice Z*1 + P."""
    alg = P.alg
    rows = [alg.one()] + P.basis()
    return Lattice.from_rows(alg, rows)


def left_order(I: Lattice) -> Lattice:
    """{x : x I <= I}."""
    bs = I.basis()
    cur = None
    for b in bs:
        cand = I.right_mul(b.inverse())
        cur = cand if cur is None else cur.intersect(cand)
    return cur


def ideal_norm(I: Lattice, O: Lattice) -> Fraction:
    """Reduced norm of a lattice relative to the order O: sqrt(det ratio)."""
    r = I.det() / O.det()
    num, den = r.numerator, r.denominator
    sn, sd = isqrt(num), isqrt(den)
    assert sn * sn == num and sd * sd == den, "index is not a square"
    return Fraction(sn, sd)


def unit_count(O: Lattice) -> int:
    """Number of units of reduced norm 1 in an order (both signs)."""
    return count_norm(O, 1)
