"""Right ideal classes and Brandt matrices for the orders of quatalg.

Classes are enumerated by a p-neighbour walk certified against the exact
mass, so the result is provably complete.  Hecke operators, the extra
involution coming from the two-sided ideal of reduced norm ell at a
residually inert prime, and Atkin-Lehner operators are all computed with
exact cyclotomic entries, for even weights and even characters of squarefree
conductor dividing the split part of the level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, gcd, prod

from .exactfield import CyclotomicNumber, DenseMatrix, ONE, ZERO, sqrt_int
from .quatalg import (Lattice, PizerOrder, QuatElement, discrd, elements_of_norm,
                      ideal_norm, left_order, short_vectors, unit_count)


def eichler_mass(po: PizerOrder) -> Fraction:
    """Sum of 1/#(unit group) over the right ideal classes of the order.

    This is 2/vol for the adelic unit volume
    vol = (48/N) * prod_{q || N-} z_q(1) * prod_{q^2 || N-} z_q(2)
        * prod_{q | N+} z_q(2)/z_q(1),
    with z_q the local zeta factor.
    """
    mass = Fraction(2 * po.level, 48)
    for q, _ in _factor(po.n_minus_sp):
        mass *= Fraction(q - 1, q)
    for q in po.n_minus_sc:
        mass *= Fraction(q * q - 1, q * q)
    for q, _ in _factor(po.n_plus):
        mass *= Fraction(q + 1, q)
    return mass


def _factor(n):
    from .exactfield import factorize
    return factorize(n) if n > 1 else []


# ---------------------------------------------------------------------------
# ideal classes
# ---------------------------------------------------------------------------


def reduce_ideal(I: Lattice, norm: Fraction, avoid: int = 1):
    """A small-norm ideal in the same right class: x^{-1} I for x in I of
    minimal reduced norm, with nrd(x)/nrd(I) kept coprime to `avoid` so the
    local components at primes dividing `avoid` are untouched."""
    bound = norm
    while True:
        good = []
        for x in short_vectors(I, bound):
            m = x.nrd() / norm
            if gcd(m.numerator * m.denominator, avoid) == 1:
                good.append(x)
        if good:
            break
        bound *= 2
    x = min(good, key=lambda v: v.nrd())
    J = I.left_mul(x.inverse())
    nJ = norm / x.nrd()
    # clear denominators to keep an integral primitive representative
    c = J.den
    return J.scale(c), nJ * c * c


@dataclass
class IdealClasses:
    """A complete set of right ideal class representatives."""

    po: PizerOrder
    ideals: list
    norms: list
    weights: list
    left_orders: list
    mass: Fraction

    def __len__(self):
        return len(self.ideals)


def _theta_fingerprint(I: Lattice, norm: Fraction, terms: int = 8):
    counts = [0] * (terms + 1)
    for x in short_vectors(I, norm * terms):
        m = x.nrd() / norm
        if m.denominator == 1 and m <= terms:
            counts[int(m)] += 2
    return tuple(counts)


def _is_isomorphic(I, nI, J, nJ) -> bool:
    # I = xJ for some x iff I * conj(J) represents nrd(I)nrd(J)
    L = I.multiply(J.conjugate())
    return bool(elements_of_norm(L, nI * nJ))


def _neighbours(I: Lattice, nI: Fraction, R: Lattice, q: int):
    """The right-stable index-q^2 sublattices of I of reduced norm q*nrd(I)."""
    bs = I.basis()
    rmats = []
    for r in R.basis():
        rows = []
        for b in bs:
            co = I.coordinates(b * r)
            rows.append([int(c) % q for c in co])
        rmats.append(rows)

    def matvec(v, m):
        return [sum(v[r] * m[r][c] for r in range(4)) % q for c in range(4)]

    def rank(vecs):
        a = [list(v) for v in vecs]
        r = 0
        for c in range(4):
            piv = next((i for i in range(r, len(a)) if a[i][c] % q), None)
            if piv is None:
                continue
            a[r], a[piv] = a[piv], a[r]
            inv = pow(a[r][c], -1, q)
            a[r] = [x * inv % q for x in a[r]]
            for i in range(len(a)):
                if i != r and a[i][c] % q:
                    f = a[i][c]
                    a[i] = [(x - f * y) % q for x, y in zip(a[i], a[r])]
            r += 1
            if r == len(a):
                break
        return r

    out = []
    for v1, v2 in _plane_reps(q):
        stable = True
        for m in rmats:
            for v in (v1, v2):
                if rank([v1, v2, matvec(v, m)]) != 2:
                    stable = False
                    break
            if not stable:
                break
        if not stable:
            continue
        rows = [b * q for b in bs]
        for v in (v1, v2):
            x = bs[0] * v[0]
            for mno in range(1, 4):
                x = x + bs[mno] * v[mno]
            rows.append(x)
        J = Lattice.from_rows(I.alg, rows)
        if ideal_norm(J, R) == q * nI:
            out.append(J)
    return out


def _plane_reps(q):
    """RREF representatives of 2-dimensional subspaces of F_q^4."""
    for p1 in range(4):
        for p2 in range(p1 + 1, 4):
            free1 = [c for c in range(4) if c > p1 and c != p2]
            free2 = [c for c in range(4) if c > p2]
            n1, n2 = len(free1), len(free2)
            for a in range(q ** n1):
                v1 = [0, 0, 0, 0]
                v1[p1] = 1
                t = a
                for c in free1:
                    v1[c] = t % q
                    t //= q
                for b in range(q ** n2):
                    v2 = [0, 0, 0, 0]
                    v2[p2] = 1
                    t = b
                    for c in free2:
                        v2[c] = t % q
                        t //= q
                    yield tuple(v1), tuple(v2)


def right_ideal_classes(po: PizerOrder, neighbour_primes=None) -> IdealClasses:
    """Enumerate the right ideal classes, certified by the mass formula."""
    mass = eichler_mass(po)
    R = po.order
    avoid = po.level
    if neighbour_primes is None:
        neighbour_primes = [q for q in (2, 3, 5, 7, 11) if po.level % q]
    ideals = [R]
    norms = [Fraction(1)]
    orders = [R]
    weights = [unit_count(R)]
    fps = [_theta_fingerprint(R, Fraction(1))]
    found_mass = Fraction(1, weights[0])
    used = 0
    frontier = [0]
    while found_mass != mass:
        if used >= len(neighbour_primes):
            raise RuntimeError("class set incomplete after exhausting "
                               f"neighbour primes; found mass {found_mass} "
                               f"of {mass}")
        q = neighbour_primes[used]
        used += 1
        frontier = list(range(len(ideals)))
        while frontier and found_mass != mass:
            nxt = []
            for idx in frontier:
                for J in _neighbours(ideals[idx], norms[idx], R, q):
                    nJ = q * norms[idx]
                    J, nJ = reduce_ideal(J, nJ, avoid)
                    fp = _theta_fingerprint(J, nJ)
                    new = True
                    for m, K in enumerate(ideals):
                        if fps[m] == fp and _is_isomorphic(J, nJ, K, norms[m]):
                            new = False
                            break
                    if new:
                        ideals.append(J)
                        norms.append(nJ)
                        OL = left_order(J)
                        orders.append(OL)
                        weights.append(unit_count(OL))
                        fps.append(fp)
                        found_mass += Fraction(1, weights[-1])
                        nxt.append(len(ideals) - 1)
                        if found_mass == mass:
                            break
                if found_mass == mass:
                    break
            frontier = nxt
    assert found_mass == mass
    return IdealClasses(po, ideals, norms, weights, orders, mass)


# ---------------------------------------------------------------------------
# characters
# ---------------------------------------------------------------------------


class SplitCharacter:
    """An even Dirichlet character of conductor dividing the split part of
    the level, lifted to the order through one of the two residue maps
    order/q.order -> F_q at each conductor prime."""

    def __init__(self, po: PizerOrder, q: int, values: dict):
        if po.n_plus % q:
            raise ValueError("conductor must divide the split level")
        self.q = q
        self.values = values  # residue class mod q -> CyclotomicNumber
        if self.values[q - 1] != self.values[1]:
            raise ValueError("only even characters are supported")
        self.hom = _residue_hom(po.order, q)

    def value_at(self, n: int) -> CyclotomicNumber:
        return self.values[n % self.q]

    def __call__(self, y: QuatElement, R: Lattice) -> CyclotomicNumber:
        co = R.coordinates(y)
        q = self.q
        res = 0
        for c, t in zip(co, self.hom):
            num, den = c.numerator, c.denominator
            if den % q == 0:
                raise ValueError("element is not integral at the conductor")
            res = (res + num * pow(den, -1, q) * t) % q
        if res == 0:
            raise ValueError("element is not a unit at the conductor")
        return self.values[res]


class InertEvenCharacter:
    """The lift of an even Dirichlet character of conductor ell at a
    residually inert prime: a fixed square root gamma of the character
    composed with the reduced norm (prime-to-ell unit part)."""

    def __init__(self, po: PizerOrder, ell: int, values: dict):
        if ell not in po.n_minus_sc:
            raise ValueError(f"{ell} is not a residually inert prime here")
        if values[ell - 1] != values[1]:
            raise ValueError("only even characters lift through the norm")
        g = _primitive_root(ell)
        # evenness means chi(g) has even order dividing ell-1, so its fixed
        # square root still generates a character mod ell
        from .exactfield import fixed_square_root
        gamma_g = fixed_square_root(values[g])
        self.ell = ell
        self.gamma = {1: ONE}
        acc = ONE
        x = 1
        for _ in range(ell - 2):
            x = x * g % ell
            acc = acc * gamma_g
            self.gamma[x] = acc
        if acc * gamma_g != ONE:
            raise ValueError("square-root character is not well defined mod ell")

    def __call__(self, y: QuatElement, R: Lattice) -> CyclotomicNumber:
        n = y.nrd()
        num, den = n.numerator, n.denominator
        while num % self.ell == 0:
            num //= self.ell
        while den % self.ell == 0:
            den //= self.ell
        u = num * pow(den, -1, self.ell) % self.ell
        return self.gamma[u]


def _primitive_root(p: int) -> int:
    from .exactfield import factorize
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q, _ in factorize(p - 1)):
            return g
    raise ValueError(f"{p} is not prime")


class LiftedCharacter:
    """Product of local lifts of a Dirichlet character to the order."""

    def __init__(self, components):
        self.components = list(components)

    def __call__(self, y: QuatElement, R: Lattice) -> CyclotomicNumber:
        total = ONE
        for comp in self.components:
            total = total * comp(y, R)
        return total


def lift_character(po: PizerOrder, local_values: dict) -> LiftedCharacter | None:
    """Lift a Dirichlet character given by per-prime value tables
    {q: {residue: CyclotomicNumber}}.  Conductor primes must divide the
    split level (lower-right residue lift) or be residually inert with an
    even local component (norm square-root lift).  Trivial data gives None
    (no twist).  Odd components at inert primes and conductor ell^2 are not
    supported."""
    comps = []
    for q, values in sorted(local_values.items()):
        if all(v == ONE for v in values.values()):
            continue
        if po.n_plus % q == 0:
            comps.append(SplitCharacter(po, q, values))
        elif q in po.n_minus_sc:
            if values[q - 1] != ONE:
                raise NotImplementedError(
                    "odd character components at residually inert primes "
                    "are not supported")
            comps.append(InertEvenCharacter(po, q, values))
        else:
            raise ValueError(f"conductor prime {q} does not divide the level")
    return LiftedCharacter(comps) if comps else None


def quadratic_character(po: PizerOrder, q: int) -> SplitCharacter:
    vals = {}
    for n in range(1, q):
        r = pow(n, (q - 1) // 2, q)
        vals[n] = ONE if r == 1 else -ONE
    if vals[q - 1] != ONE:
        raise ValueError(f"the quadratic character mod {q} is odd")
    return SplitCharacter(po, q, vals)


def _residue_hom(R: Lattice, q: int):
    """Values (t_0..t_3) on the basis of R of a ring homomorphism
    R/qR -> F_q.  There are exactly two; the lexicographically smallest
    value tuple is chosen."""
    bs = R.basis()
    one_co = [int(c) % q for c in R.coordinates(R.alg.one())]
    prods = [[[int(x) % q for x in R.coordinates(bs[m] * bs[n])]
              for n in range(4)] for m in range(4)]
    homs = []
    for t0 in range(q):
        for t1 in range(q):
            for t2 in range(q):
                for t3 in range(q):
                    t = (t0, t1, t2, t3)
                    if sum(a * b for a, b in zip(one_co, t)) % q != 1:
                        continue
                    ok = True
                    for m in range(4):
                        for n in range(4):
                            lhs = sum(a * b for a, b in zip(prods[m][n], t)) % q
                            if lhs != t[m] * t[n] % q:
                                ok = False
                                break
                        if not ok:
                            break
                    if ok:
                        homs.append(t)
    if len(homs) != 2:
        raise RuntimeError(f"expected 2 residue maps mod {q}, found {len(homs)}")
    return min(homs)


# ---------------------------------------------------------------------------
# weight representations
# ---------------------------------------------------------------------------


def _split_matrix(y: QuatElement):
    """Image of y under the splitting D -> M_2(Q(sqrt a))."""
    a, b = y.alg.a, y.alg.b
    s = sqrt_int(a)
    x0, x1, x2, x3 = (CyclotomicNumber.from_rational(c) for c in y.co)
    bb = CyclotomicNumber.from_rational(b)
    return ((x0 + x1 * s, x2 + x3 * s),
            (bb * (x2 - x3 * s), x0 - x1 * s))


def weight_rep(y: QuatElement, weight: int) -> DenseMatrix:
    """Action of y on homogeneous forms of degree weight-2 in (X, Y),
    P |-> P((X, Y) gamma), in the monomial basis X^m Y^{d-m}."""
    d = weight - 2
    if d == 0:
        return DenseMatrix(((ONE,),))
    g = _split_matrix(y)
    cols = []
    for m in range(d + 1):
        # expand (g00 X + g10 Y)^m (g01 X + g11 Y)^(d-m)
        coeffs = [ZERO] * (d + 1)
        for r1 in range(m + 1):
            c1 = CyclotomicNumber.from_rational(comb(m, r1)) * \
                g[0][0] ** r1 * g[1][0] ** (m - r1)
            for r2 in range(d - m + 1):
                c2 = CyclotomicNumber.from_rational(comb(d - m, r2)) * \
                    g[0][1] ** r2 * g[1][1] ** (d - m - r2)
                coeffs[r1 + r2] = coeffs[r1 + r2] + c1 * c2
        cols.append(coeffs)
    return DenseMatrix(tuple(tuple(cols[m][r] for m in range(d + 1))
                             for r in range(d + 1)))


def sym_pairing(d: int, P, Q) -> CyclotomicNumber:
    """The SL_2-invariant pairing on degree-d forms,
    <X^i Y^{d-i}, X^j Y^{d-j}> = (-1)^i / C(d, i) if i + j = d, else 0."""
    total = ZERO
    for i in range(d + 1):
        c = CyclotomicNumber.from_rational(Fraction((-1) ** i, comb(d, i)))
        total = total + c * P[i] * Q[d - i]
    return total


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def _as_cyclo(x) -> CyclotomicNumber:
    if isinstance(x, CyclotomicNumber):
        return x
    return CyclotomicNumber.from_rational(Fraction(x))


def _operator_matrix(cs: IdealClasses, target_lats, target_norm_mult,
                     weight: int = 2, char: SplitCharacter | None = None):
    """Matrix of the operator whose (i, j) block is
    (1/w_j) sum over y in T(I_i) * I_j^{-1} with nrd y = mult*n_i/n_j of
    chi(y) rho(y) / nrd(y)^{(weight-2)/2}, where T(I_i) is target_lats[i].

    Each such y gives an embedding of the class of I_j as a sub-ideal of
    T(I_i) of the right norm, counted up to the w_j units of its left order.
    """
    if weight % 2:
        raise ValueError("only even weights are supported")
    n = len(cs)
    d = weight - 2
    dim = d + 1
    blocks = [[None] * n for _ in range(n)]
    for j in range(n):
        conj_j = cs.ideals[j].conjugate()
        wj = Fraction(1, cs.weights[j])
        for i in range(n):
            L = target_lats[i].multiply(conj_j).scale(Fraction(1, cs.norms[j]))
            tgt = target_norm_mult * cs.norms[i] / cs.norms[j]
            total = None
            for y in elements_of_norm(L, tgt):
                term_scalar = _as_cyclo(2 * wj)
                if char is not None:
                    term_scalar = term_scalar * char(y, cs.po.order)
                if d == 0:
                    term = DenseMatrix(((term_scalar,),))
                else:
                    norm_pow = Fraction(tgt) ** (d // 2)
                    term = weight_rep(y, weight) * \
                        (term_scalar * _as_cyclo(1 / norm_pow))
                total = term if total is None else total + term
            if total is None:
                total = DenseMatrix(tuple(tuple(ZERO for _ in range(dim))
                                          for _ in range(dim)))
            blocks[i][j] = total
    rows = []
    for i in range(n):
        for r in range(dim):
            rows.append(tuple(blocks[i][j].entries[r][c]
                              for j in range(n) for c in range(dim)))
    return DenseMatrix(tuple(rows))


def brandt_matrix(cs: IdealClasses, q: int, weight: int = 2,
                  char: SplitCharacter | None = None) -> DenseMatrix:
    """The Hecke operator at a prime q coprime to the level."""
    if cs.po.level % q == 0:
        raise ValueError("q must be coprime to the level")
    return _operator_matrix(cs, cs.ideals, q, weight, char)


def extra_operator(cs: IdealClasses, ell: int, weight: int = 2,
                   char: SplitCharacter | None = None) -> DenseMatrix:
    """The involution-like operator induced by right translation by the
    local uniformizer at a residually inert prime ell: the ideal map
    I -> I * P for P the two-sided norm-ell ideal of the order."""
    if ell not in cs.po.n_minus_sc:
        raise ValueError(f"{ell} is not a residually inert prime here")
    PR = _ul_ideal(cs.po, ell)
    targets = [I.multiply(PR) for I in cs.ideals]
    return _operator_matrix(cs, targets, ell, weight, char)


def _ul_ideal(po: PizerOrder, ell: int) -> Lattice:
    """The two-sided ideal of the order of reduced norm ell, supported at ell.

    Built as (wR + ell R) cap R for w trace-zero of norm ell: the
    intersection restores the local components at the primes of the split
    level, where w need not be a unit of the order.
    """
    R = po.order
    P = po.radicals[ell]
    ws = [w for w in elements_of_norm(P, ell) if w.trd() == 0]
    w = ws[0]
    J = (R.left_mul(w) + R.scale(ell)).intersect(R)
    assert ideal_norm(J, R) == ell
    assert all(J.contains(x * y) for x in J.basis() for y in R.basis())
    assert all(J.contains(y * x) for x in J.basis() for y in R.basis())
    return J


def atkin_lehner(cs: IdealClasses, ell: int, weight: int = 2,
                 char: SplitCharacter | None = None) -> DenseMatrix:
    """Atkin-Lehner operator at a residually inert prime, induced by a
    norm-one element generating the quadratic residue extension mod the
    radical."""
    po = cs.po
    if ell not in po.n_minus_sc:
        raise ValueError(f"{ell} is not a residually inert prime here")
    P = po.radicals[ell]
    delta = None
    for bound in range(1, 40):
        for x in short_vectors(po.eichler, Fraction(bound)):
            disc = x.trd() ** 2 - 4 * x.nrd()
            if disc.denominator == 1 and int(disc) % ell and \
                    pow(int(disc) % ell, (ell - 1) // 2, ell) == ell - 1:
                delta = x
                break
        if delta is not None:
            break
    if delta is None:
        raise RuntimeError("no residually quadratic element found")
    R = po.order
    A = R.left_mul(delta) + R.scale(ell)
    targets = [I.multiply(A) for I in cs.ideals]
    return _operator_matrix(cs, targets, delta.nrd(), weight, char)


# ---------------------------------------------------------------------------
# pairings and spaces
# ---------------------------------------------------------------------------


def petersson_pairing(cs: IdealClasses, phi, psi, weight: int = 2):
    """<phi, psi> = sum over classes of <phi(x), psi(x)> / w_x, where the
    inner pairing is the invariant one on degree weight-2 forms (for weight
    2 it is plain multiplication)."""
    d = weight - 2
    dim = d + 1
    total = ZERO
    for x in range(len(cs)):
        wx = _as_cyclo(Fraction(1, cs.weights[x]))
        if d == 0:
            total = total + wx * _as_cyclo(phi[x]) * _as_cyclo(psi[x])
        else:
            P = [_as_cyclo(c) for c in phi[x * dim:(x + 1) * dim]]
            Q = [_as_cyclo(c) for c in psi[x * dim:(x + 1) * dim]]
            total = total + wx * sym_pairing(d, P, Q)
    return total


def trilinear_period(cs: IdealClasses, phi1, phi2, phi3, weight: int = 2):
    """Period of three forms of weights (2, k, k) against the diagonal:
    sum over classes of phi1 . <phi2, phi3> / w, the inner pairing being
    the invariant one in degree k-2 (plain multiplication for k = 2)."""
    d = weight - 2
    dim = d + 1
    total = ZERO
    for x in range(len(cs)):
        wx = _as_cyclo(Fraction(1, cs.weights[x]))
        if d == 0:
            inner = _as_cyclo(phi2[x]) * _as_cyclo(phi3[x])
        else:
            P = [_as_cyclo(c) for c in phi2[x * dim:(x + 1) * dim]]
            Q = [_as_cyclo(c) for c in phi3[x * dim:(x + 1) * dim]]
            inner = sym_pairing(d, P, Q)
        total = total + _as_cyclo(phi1[x]) * inner * wx
    return total


def f_eigenspace(cs: IdealClasses, hecke_evs: dict, weight: int = 2,
                 char=None) -> list:
    """Simultaneous eigenspace of the Brandt matrices B(q) for the given
    eigenvalue table {q: a_q}, as a basis of flat coefficient vectors."""
    from .exactfield import eigenspace
    basis = None
    for q, aq in sorted(hecke_evs.items()):
        M = brandt_matrix(cs, q, weight, char)
        if basis is None:
            basis = eigenspace(M, _as_cyclo(aq))
        else:
            basis = _restrict_eigenspace(M, _as_cyclo(aq), basis)
        if not basis:
            return []
    return basis if basis is not None else []


def _restrict_eigenspace(M: DenseMatrix, lam, basis: list) -> list:
    """Intersect an eigenspace of M with the span of the given vectors."""
    from .exactfield import DenseMatrix as DM, eigenspace
    n = len(basis)
    # express M . v_j - lam v_j in terms of an ambient kernel condition:
    # solve (M - lam) restricted to span(basis) by stacking images
    cols = []
    for v in basis:
        img = M.apply(v)
        cols.append([img[r] - lam * v[r] for r in range(len(v))])
    # kernel of the (rows x n) map c -> sum c_j cols[j]
    mat = DM(tuple(tuple(cols[j][r] for j in range(n))
                   for r in range(len(basis[0]))))
    out = []
    for c in mat.kernel():
        vec = [ZERO] * len(basis[0])
        for j in range(n):
            for r in range(len(vec)):
                vec[r] = vec[r] + c[j] * basis[j][r]
        out.append(vec)
    return out


@dataclass(frozen=True)
class SplitPiece:
    eigenvalue: CyclotomicNumber
    vector: list


def eigenspace_split(cs: IdealClasses, hecke_evs: dict, ell: int,
                     weight: int = 2, char=None) -> list[SplitPiece]:
    """Split the simultaneous Hecke eigenspace under the extra involution
    at the residually inert prime ell into one-dimensional pieces.  The
    eigenvalues are the square roots of chi_N(ell)^{-1}; the expected
    dimension is 2^(number of residually inert primes), and anything else
    raises a multiplicity anomaly."""
    basis = f_eigenspace(cs, hecke_evs, weight, char)
    expected = 2 ** len(cs.po.n_minus_sc)
    if len(basis) != expected:
        raise ValueError(
            f"multiplicity anomaly: eigenspace has dimension {len(basis)}, "
            f"expected {expected}")
    U = extra_operator(cs, ell, weight, char)
    # U^2 = chi_N(ell)^{-1}, so eigenvalues are +-mu with mu a fixed root
    from .exactfield import fixed_square_root
    if char is None:
        usq = ONE
    else:
        sample = basis[0]
        img = U.apply(U.apply(sample))
        k = next(i for i, c in enumerate(sample) if c != ZERO)
        usq = img[k] * sample[k].inverse()
    mu = fixed_square_root(usq)
    pieces = []
    for lam in (mu, ZERO - mu):
        for v in _restrict_eigenspace(U, lam, basis):
            pieces.append(SplitPiece(eigenvalue=lam, vector=v))
    if len(pieces) != expected:
        raise ValueError("multiplicity anomaly: involution does not split "
                         "the eigenspace into the expected pieces")
    return pieces
