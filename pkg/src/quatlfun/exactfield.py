"""Exact arithmetic substrate: cyclotomic fields, finite fields, dense matrices.

Cyclotomic numbers are stored on the power basis of a primitive n-th root of
unity, with coefficients reduced modulo the n-th cyclotomic polynomial.  Orders
are normalized to never be congruent to 2 mod 4 (Q(zeta_{2m}) = Q(zeta_m) for
odd m), which makes the lcm of two stored orders a valid stored order.

All values are immutable; operations are pure functions.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm


@lru_cache(maxsize=None)
def euler_phi(n: int) -> int:
    result, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


@lru_cache(maxsize=None)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of n >= 1 as ((p, e), ...)."""
    out = []
    m, p = n, 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += 1
    if m > 1:
        out.append((m, 1))
    return tuple(out)


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _poly_divexact(a, b):
    """Exact division of integer polynomials (ascending coefficients)."""
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] // b[-1]
        q[i] = c
        if c:
            for j, y in enumerate(b):
                a[i + j] -= c * y
    assert not any(a), "division was not exact"
    return q


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Coefficients of the n-th cyclotomic polynomial, ascending, monic."""
    if n == 1:
        return (-1, 1)
    poly = [-1] + [0] * (n - 1) + [1]          # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            poly = _poly_divexact(poly, cyclotomic_poly(d))
    return tuple(poly)


def _normalize_order(n: int) -> int:
    return n // 2 if n % 4 == 2 else n


class CyclotomicNumber:
    """An exact element of Q(zeta_n), n never congruent to 2 mod 4."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs):
        assert order >= 1 and order % 4 != 2
        phi = euler_phi(order)
        cs = [Fraction(c) for c in coeffs]
        assert len(cs) <= phi
        cs += [Fraction(0)] * (phi - len(cs))
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, *a):
        raise AttributeError("CyclotomicNumber is immutable")

    # -- construction -------------------------------------------------

    @staticmethod
    def from_rational(q) -> "CyclotomicNumber":
        return CyclotomicNumber(1, [Fraction(q)])

    @staticmethod
    def zeta(n: int, k: int = 1) -> "CyclotomicNumber":
        """zeta_n^k as an exact cyclotomic number (order normalized)."""
        if n <= 0:
            raise ValueError("order must be positive")
        return _zeta_cached(n, k % n)

    @staticmethod
    def _reduce_poly(n: int, poly: dict) -> "CyclotomicNumber":
        """Reduce a sparse polynomial in zeta_n (exponents mod n) mod Phi_n."""
        dense = [Fraction(0)] * n
        for e, c in poly.items():
            dense[e % n] += c
        phi_n = cyclotomic_poly(n)
        d = len(phi_n) - 1
        for i in range(n - 1, d - 1, -1):
            c = dense[i]
            if c:
                dense[i] = Fraction(0)
                for j in range(d):
                    dense[i - d + j] -= c * phi_n[j]
        return CyclotomicNumber(n, dense[:d])

    # -- basic predicates ---------------------------------------------

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coeffs[0]

    # -- order embedding ----------------------------------------------

    def promote(self, m: int) -> "CyclotomicNumber":
        """Embed into Q(zeta_m) for a multiple m of the current order."""
        n = self.order
        if m == n:
            return self
        assert m % n == 0 and m % 4 != 2
        step = m // n
        poly = {i * step: c for i, c in enumerate(self.coeffs) if c}
        return CyclotomicNumber._reduce_poly(m, poly)

    @staticmethod
    def _common(a: "CyclotomicNumber", b: "CyclotomicNumber"):
        m = lcm(a.order, b.order)
        return a.promote(m), b.promote(m)

    def demote(self) -> "CyclotomicNumber":
        """Canonical form: descend to the smallest cyclotomic subfield Q(zeta_d)."""
        x = self
        changed = True
        while changed:
            changed = False
            n = x.order
            for p, _ in factorize(n):
                d = n // p
                d = _normalize_order(d)
                if d == n or (n % 4 == 0 and d % 2 == 1 and n // d == 2 and p != 2):
                    pass
                if d >= 1 and d != n:
                    y = x._try_descend(d)
                    if y is not None:
                        x = y
                        changed = True
                        break
        return x

    def _try_descend(self, d: int):
        """Return self as an element of Q(zeta_d) (d | order) or None."""
        n = self.order
        if n % d:
            return None
        # candidate: solve for coefficients by comparing with the embedding
        # of the generic element of Q(zeta_d); equivalently check Galois
        # invariance under the kernel of (Z/n)* -> (Z/d)*.
        for j in range(2, n + 1):
            if gcd(j, n) == 1 and j % d == 1 % d:
                if self._galois(j) != self:
                    return None
        # invariance holds: express in Q(zeta_d) by linear algebra on the
        # power basis images of zeta_d^i
        rows = []
        for i in range(euler_phi(d)):
            rows.append(CyclotomicNumber.zeta(d, i).promote(n).coeffs)
        # solve sum x_i rows[i] = self.coeffs
        sol = _solve_linear(rows, self.coeffs)
        if sol is None:
            return None
        return CyclotomicNumber(d, sol)

    def _galois(self, j: int) -> "CyclotomicNumber":
        """Apply the Galois automorphism zeta_n -> zeta_n^j (gcd(j, n) = 1)."""
        n = self.order
        poly = {(i * j) % n: c for i, c in enumerate(self.coeffs) if c}
        return CyclotomicNumber._reduce_poly(n, poly) if poly else CyclotomicNumber(n, [])

    def conjugate(self) -> "CyclotomicNumber":
        """Complex conjugation zeta -> zeta^{-1}."""
        if self.order == 1:
            return self
        return self._galois(self.order - 1)

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        a, b = CyclotomicNumber._common(self, other)
        return CyclotomicNumber(a.order, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicNumber(self.order, [-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        a, b = CyclotomicNumber._common(self, other)
        n = a.order
        poly: dict[int, Fraction] = {}
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        k = (i + j) % n
                        poly[k] = poly.get(k, Fraction(0)) + x * y
        if not poly:
            return CyclotomicNumber(n, [])
        return CyclotomicNumber._reduce_poly(n, poly)

    __rmul__ = __mul__

    def inverse(self) -> "CyclotomicNumber":
        if self.is_zero():
            raise ZeroDivisionError("inversion of zero cyclotomic number")
        if self.is_rational():
            return CyclotomicNumber.from_rational(1 / self.coeffs[0])
        n = self.order
        # extended Euclid in Q[x] against Phi_n
        phi = [Fraction(c) for c in cyclotomic_poly(n)]
        a = list(self.coeffs)
        r0, r1 = phi, _trim(a)
        s0, s1 = [Fraction(0)], [Fraction(1)]
        while len(r1) > 1 or r1[0] != 0:
            q, r = _poly_divmod(r0, r1)
            r0, r1 = r1, _trim(r)
            s0, s1 = s1, _trim(_poly_sub(s0, _poly_mul_frac(q, s1)))
            if len(r0) == 1 and r0[0] != 0:
                break
        # r0 is a nonzero constant gcd; s0 * self = r0 mod Phi_n
        c = r0[0]
        inv_poly = {i: v / c for i, v in enumerate(s0) if v}
        return CyclotomicNumber._reduce_poly(n, inv_poly)

    def __truediv__(self, other):
        return self * _coerce(other).inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = CyclotomicNumber.from_rational(1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CyclotomicNumber.from_rational(other)
        if not isinstance(other, CyclotomicNumber):
            return NotImplemented
        a, b = CyclotomicNumber._common(self, other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        c = self.demote()
        return hash((c.order, c.coeffs))

    def __repr__(self):
        if self.is_rational():
            return f"Cyclo({self.coeffs[0]})"
        terms = [f"{c}*z{self.order}^{i}" for i, c in enumerate(self.coeffs) if c]
        return "Cyclo(" + " + ".join(terms) + ")"

    # -- roots of unity --------------------------------------------------

    def as_root_of_unity(self):
        """Return (k, m) with self = zeta_m^k, gcd(k, m) = 1, or None."""
        if self.is_zero():
            return None
        n = self.order
        m = n if n % 2 == 0 else 2 * n
        for k in range(m):
            if gcd(k, m) == 1 or k == 0:
                if self == CyclotomicNumber.zeta(m, k):
                    g = gcd(k, m) if k else m
                    return (k // g if k else 0, m // g if k else 1)
        # non-primitive powers
        for k in range(m):
            if self == CyclotomicNumber.zeta(m, k):
                g = gcd(k, m) if k else m
                return (k // g, m // g) if k else (0, 1)
        return None

    def to_complex(self) -> complex:
        import cmath
        z = cmath.exp(2j * cmath.pi / self.order)
        return sum(complex(c) * z ** i for i, c in enumerate(self.coeffs))


@lru_cache(maxsize=None)
def _zeta_cached(n: int, k: int) -> CyclotomicNumber:
    g = gcd(n, k) if k else n
    n, k = n // g, k // g
    if n == 1:
        return CyclotomicNumber.from_rational(1)
    if n == 2:
        return CyclotomicNumber.from_rational(-1)
    if n % 4 == 2:
        # zeta_{2m} = -zeta_m^{(m+1)//2} for odd m
        m = n // 2
        return -CyclotomicNumber.zeta(m, (k * ((m + 1) // 2)) % m)
    return CyclotomicNumber._reduce_poly(n, {k: Fraction(1)})


def _coerce(x) -> CyclotomicNumber:
    if isinstance(x, CyclotomicNumber):
        return x
    if isinstance(x, (int, Fraction)):
        return CyclotomicNumber.from_rational(x)
    raise TypeError(f"cannot coerce {x!r} to CyclotomicNumber")


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _poly_divmod(a, b):
    a = list(a)
    db, lb = len(b) - 1, b[-1]
    if len(a) < len(b):
        return [Fraction(0)], a
    q = [Fraction(0)] * (len(a) - db)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + db] / lb
        q[i] = c
        if c:
            for j in range(len(b)):
                a[i + j] -= c * b[j]
    return q, a[:db] if db else [Fraction(0)]


def _poly_sub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    for i, y in enumerate(b):
        a[i] -= y
    return a


def _poly_mul_frac(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _solve_linear(rows, target):
    """Solve x·rows = target over Q; rows are sequences of equal length."""
    import copy
    m = [list(r) + [Fraction(0)] * 0 for r in rows]
    ncols = len(target)
    aug = [[Fraction(m[i][j]) for i in range(len(rows))] for j in range(ncols)]
    rhs = [Fraction(t) for t in target]
    # Gaussian elimination on the ncols x len(rows) system
    nvars = len(rows)
    piv = []
    r = 0
    for c in range(nvars):
        sel = next((i for i in range(r, ncols) if aug[i][c] != 0), None)
        if sel is None:
            continue
        aug[r], aug[sel] = aug[sel], aug[r]
        rhs[r], rhs[sel] = rhs[sel], rhs[r]
        inv = 1 / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        rhs[r] *= inv
        for i in range(ncols):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [v - f * w for v, w in zip(aug[i], aug[r])]
                rhs[i] -= f * rhs[r]
        piv.append(c)
        r += 1
    sol = [Fraction(0)] * nvars
    for i, c in enumerate(piv):
        sol[c] = rhs[i]
    # consistency check
    for j in range(ncols):
        if sum(sol[i] * rows[i][j] for i in range(nvars)) != target[j]:
            return None
    return sol


ONE = CyclotomicNumber.from_rational(1)
ZERO = CyclotomicNumber.from_rational(0)
MINUS_ONE = CyclotomicNumber.from_rational(-1)


def fixed_square_root(u: CyclotomicNumber) -> CyclotomicNumber:
    """The canonical square root of a root of unity.

    For u = zeta_m^k with 0 <= k < m, gcd(k, m) = 1, returns zeta_{2m}^k —
    the candidate square root with the least nonnegative exponent.  Raises
    ValueError on inputs that are not roots of unity.
    """
    u = _coerce(u)
    ru = u.as_root_of_unity()
    if ru is None:
        raise ValueError("fixed_square_root requires a root of unity")
    k, m = ru
    return CyclotomicNumber.zeta(2 * m, k)


@lru_cache(maxsize=None)
def _sqrt_prime(p: int) -> CyclotomicNumber:
    """Square root of an odd prime p via the quadratic Gauss sum."""
    g = ZERO
    for t in range(1, p):
        g = g + CyclotomicNumber.zeta(p, t) * _legendre(t, p)
    # g^2 = (-1)^{(p-1)/2} p
    if p % 4 == 3:
        g = g * CyclotomicNumber.zeta(4).inverse()
    return g


def _legendre(a: int, p: int) -> int:
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def sqrt_int(d: int) -> CyclotomicNumber:
    """An exact cyclotomic square root of the integer d (any sign)."""
    if d == 0:
        return ZERO
    result = ONE
    if d < 0:
        result = CyclotomicNumber.zeta(4)
        d = -d
    square_part = 1
    for p, e in factorize(d):
        square_part *= p ** (e // 2)
        if e % 2:
            if p == 2:
                z8 = CyclotomicNumber.zeta(8)
                result = result * (z8 + z8 ** 7)
            else:
                result = result * _sqrt_prime(p)
    return result * square_part


# ---------------------------------------------------------------------------
# Finite fields F_l and F_{l^2}
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def least_nonresidue(ell: int) -> int:
    for r in range(2, ell):
        if _legendre(r, ell) == -1:
            return r
    raise ValueError(f"{ell} has no quadratic nonresidue (not an odd prime?)")


class FqElement:
    """Element a + b*delta of F_{l^2}, delta^2 = least nonresidue mod l."""

    __slots__ = ("ell", "a", "b")

    def __init__(self, ell: int, a: int, b: int = 0):
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "a", a % ell)
        object.__setattr__(self, "b", b % ell)

    def __setattr__(self, *args):
        raise AttributeError("FqElement is immutable")

    @property
    def degree(self) -> int:
        return 1 if self.b == 0 else 2

    def __add__(self, other):
        other = self._coerce(other)
        return FqElement(self.ell, self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return FqElement(self.ell, -self.a, -self.b)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        other = self._coerce(other)
        ell, r = self.ell, least_nonresidue(self.ell)
        return FqElement(
            ell,
            self.a * other.a + r * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    __rmul__ = __mul__

    def _coerce(self, other):
        if isinstance(other, FqElement):
            assert other.ell == self.ell
            return other
        return FqElement(self.ell, other)

    def inverse(self):
        ell, r = self.ell, least_nonresidue(self.ell)
        nrm = (self.a * self.a - r * self.b * self.b) % ell
        if nrm == 0:
            raise ZeroDivisionError("inversion of zero in F_{l^2}")
        ninv = pow(nrm, ell - 2, ell)
        return FqElement(ell, self.a * ninv, -self.b * ninv)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = FqElement(self.ell, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def frobenius(self):
        """x -> x^l, i.e. a + b*delta -> a - b*delta."""
        return FqElement(self.ell, self.a, -self.b)

    def norm(self) -> int:
        r = least_nonresidue(self.ell)
        return (self.a * self.a - r * self.b * self.b) % self.ell

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __eq__(self, other):
        if not isinstance(other, FqElement):
            return NotImplemented
        return (self.ell, self.a, self.b) == (other.ell, other.a, other.b)

    def __hash__(self):
        return hash((self.ell, self.a, self.b))

    def __repr__(self):
        return f"Fq({self.ell}; {self.a}+{self.b}d)"


@lru_cache(maxsize=None)
def fq2_generator(ell: int) -> FqElement:
    """A fixed generator of F_{l^2}^* (deterministic: first in lex order)."""
    q = ell * ell - 1
    fac = [p for p, _ in factorize(q)]
    for a in range(ell):
        for b in range(ell):
            x = FqElement(ell, a, b)
            if x.is_zero():
                continue
            if all((x ** (q // p)) != FqElement(ell, 1) for p in fac):
                return x
    raise RuntimeError("no generator found")


@lru_cache(maxsize=None)
def _dlog_table(ell: int) -> dict:
    g = fq2_generator(ell)
    table = {}
    x = FqElement(ell, 1)
    for k in range(ell * ell - 1):
        table[(x.a, x.b)] = k
        x = x * g
    return table


def fq2_dlog(x: FqElement) -> int:
    """Discrete log of x with respect to fq2_generator(x.ell)."""
    if x.is_zero():
        raise ValueError("dlog of zero")
    return _dlog_table(x.ell)[(x.a, x.b)]


def fq2_elements(ell: int):
    """All nonzero elements of F_{l^2}, generator-power order."""
    g = fq2_generator(ell)
    x = FqElement(ell, 1)
    for _ in range(ell * ell - 1):
        yield x
        x = x * g


# ---------------------------------------------------------------------------
# Dense matrices over the cyclotomics
# ---------------------------------------------------------------------------

class DenseMatrix:
    """A rectangular matrix of CyclotomicNumber entries."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries):
        entries = tuple(tuple(_coerce(x) for x in row) for row in entries)
        assert entries and all(len(r) == len(entries[0]) for r in entries)
        object.__setattr__(self, "rows", len(entries))
        object.__setattr__(self, "cols", len(entries[0]))
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, *a):
        raise AttributeError("DenseMatrix is immutable")

    @staticmethod
    def identity(n: int) -> "DenseMatrix":
        return DenseMatrix([[ONE if i == j else ZERO for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __add__(self, other):
        assert (self.rows, self.cols) == (other.rows, other.cols)
        return DenseMatrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __sub__(self, other):
        assert (self.rows, self.cols) == (other.rows, other.cols)
        return DenseMatrix(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __mul__(self, other):
        if isinstance(other, DenseMatrix):
            assert self.cols == other.rows, "dimension mismatch"
            ot = list(zip(*other.entries))
            return DenseMatrix(
                [[_dot(row, col) for col in ot] for row in self.entries]
            )
        other = _coerce(other)
        return DenseMatrix([[x * other for x in row] for row in self.entries])

    def __rmul__(self, other):
        return self * _coerce(other)

    def __eq__(self, other):
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def transpose(self) -> "DenseMatrix":
        return DenseMatrix(list(zip(*self.entries)))

    def apply(self, vec):
        """Matrix times column vector (list of cyclotomics)."""
        assert len(vec) == self.cols
        vec = [_coerce(v) for v in vec]
        return [_dot(row, vec) for row in self.entries]

    def kernel(self) -> list[list[CyclotomicNumber]]:
        """Basis of the right kernel {v : M v = 0}."""
        m = [list(row) for row in self.entries]
        nrows, ncols = self.rows, self.cols
        pivots = []
        r = 0
        for c in range(ncols):
            sel = next((i for i in range(r, nrows) if not m[i][c].is_zero()), None)
            if sel is None:
                continue
            m[r], m[sel] = m[sel], m[r]
            inv = m[r][c].inverse()
            m[r] = [x * inv for x in m[r]]
            for i in range(nrows):
                if i != r and not m[i][c].is_zero():
                    f = m[i][c]
                    m[i] = [x - f * y for x, y in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
        free = [c for c in range(ncols) if c not in pivots]
        basis = []
        for fc in free:
            v = [ZERO] * ncols
            v[fc] = ONE
            for i, pc in enumerate(pivots):
                v[pc] = -m[i][fc]
            basis.append(v)
        return basis

    def __repr__(self):
        return f"DenseMatrix({self.rows}x{self.cols})"


def _dot(row, col):
    acc = ZERO
    for a, b in zip(row, col):
        if not a.is_zero() and not _coerce(b).is_zero():
            acc = acc + a * b
    return acc


def eigenspace(M: DenseMatrix, lam) -> list[list[CyclotomicNumber]]:
    """Basis of ker(M - lam*Id); lam must be supplied by the caller."""
    assert M.rows == M.cols, "eigenspace requires a square matrix"
    lam = _coerce(lam)
    return (M - DenseMatrix.identity(M.rows) * lam).kernel()


def cyclotomic_arith(a, b, op: str) -> CyclotomicNumber:
    """Dispatch helper for basic cyclotomic arithmetic (add/mul/inv)."""
    a = _coerce(a)
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inverse()
    raise ValueError(f"unknown op {op!r}")
