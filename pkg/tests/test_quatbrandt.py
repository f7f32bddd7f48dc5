"""Tests for the definite quaternion arithmetic and Brandt operator layer."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from quatlfun.exactfield import CyclotomicNumber, DenseMatrix, ONE, ZERO
from quatlfun import brandt as B
from quatlfun import quatalg as Q


# ---------------------------------------------------------------------------
# local symbols and algebra construction
# ---------------------------------------------------------------------------

def test_hilbert_symbol_known_values():
    # (-1,-1) ramifies exactly at 2 and infinity
    assert Q.hilbert_symbol(-1, -1, 2) == -1
    assert Q.hilbert_symbol(-1, -1, 'inf') == -1
    assert Q.hilbert_symbol(-1, -1, 3) == 1
    assert Q.hilbert_symbol(-1, -1, 5) == 1
    # (-1,-7): ramified at 7 and infinity only
    assert Q.hilbert_symbol(-1, -7, 7) == -1
    assert Q.hilbert_symbol(-1, -7, 2) == 1
    # squares are always split
    assert Q.hilbert_symbol(4, -7, 7) == 1


@pytest.mark.parametrize("primes", [(3,), (5,), (7,), (11,), (13,)])
def test_construct_algebra_ramification(primes):
    alg = Q.construct_algebra(primes)
    ram = {p for p in [2, 3, 5, 7, 11, 13] if Q.hilbert_symbol(alg.a, alg.b, p) == -1}
    assert ram == set(primes)
    assert Q.hilbert_symbol(alg.a, alg.b, 'inf') == -1
    assert alg.discriminant() == primes[0]


def test_construct_algebra_rejects_bad_input():
    with pytest.raises(ValueError):
        Q.construct_algebra(())
    with pytest.raises(ValueError):
        Q.construct_algebra((3, 5))  # even cardinality cannot be definite


rationals = st.fractions(min_value=-30, max_value=30, max_denominator=6)


@given(st.tuples(*[rationals] * 8))
@settings(max_examples=60, deadline=None)
def test_quaternion_arithmetic(coords):
    alg = Q.construct_algebra((7,))
    x = alg.element(*coords[:4])
    y = alg.element(*coords[4:])
    # norm is multiplicative, trace is linear, conjugation reverses products
    assert (x * y).nrd() == x.nrd() * y.nrd()
    assert (x + y).trd() == x.trd() + y.trd()
    assert (x * y).conj().co == (y.conj() * x.conj()).co
    # x * conj(x) = nrd(x)
    assert (x * x.conj()).co == alg.element(x.nrd(), 0, 0, 0).co
    if x.nrd() != 0:
        assert (x * x.inverse()).co == alg.one().co


def test_quaternion_associativity():
    alg = Q.construct_algebra((3,))
    i, j, k = alg.gens()
    one = alg.one()
    basis = [one, i, j, k]
    for x in basis:
        for y in basis:
            for z in basis:
                assert ((x * y) * z).co == (x * (y * z)).co


# ---------------------------------------------------------------------------
# lattices and Hermite forms
# ---------------------------------------------------------------------------

def test_hnf_idempotent():
    rows = [(26, 0, 182, 78), (0, 26, 78, 104), (0, 0, 26, 0), (0, 0, 0, 26)]
    h1 = Q.hnf_rows([list(r) for r in rows])
    h2 = Q.hnf_rows([list(r) for r in h1])
    assert h1 == h2


def test_lattice_intersection_and_sum():
    alg = Q.construct_algebra((7,))
    O = Q.maximal_order(alg)
    L2 = O.scale(Fraction(2))
    L3 = O.scale(Fraction(3))
    assert (L2 + L3).mat == O.mat and (L2 + L3).den == O.den
    meet = L2.intersect(L3)
    assert meet.index_in(O) == 6 ** 4


def test_lattice_contains_and_coordinates():
    alg = Q.construct_algebra((5,))
    O = Q.maximal_order(alg)
    for b in O.basis():
        assert O.contains(b)
        c = O.coordinates(b)
        rebuilt = sum((bb * ci for bb, ci in zip(O.basis(), c)),
                      alg.element(0, 0, 0, 0))
        assert rebuilt.co == b.co
    assert not O.contains(alg.element(Fraction(1, 7), 0, 0, 0))


# ---------------------------------------------------------------------------
# orders
# ---------------------------------------------------------------------------

MAXIMAL_UNIT_COUNTS = {3: 12, 5: 6, 7: 4, 11: 4, 13: 2}


@pytest.mark.parametrize("disc", [3, 5, 7, 11, 13])
def test_maximal_order(disc):
    alg = Q.construct_algebra((disc,))
    O = Q.maximal_order(alg)
    assert Q.is_order(O)
    assert Q.discrd(O) == disc
    assert Q.unit_count(O) == MAXIMAL_UNIT_COUNTS[disc]


def test_two_sided_radical():
    for disc in (3, 7, 13):
        alg = Q.construct_algebra((disc,))
        O = Q.maximal_order(alg)
        P = Q.two_sided_radical(O, disc)
        PP = P.multiply(P)
        lO = O.scale(Fraction(disc))
        assert PP.mat == lO.mat and PP.den == lO.den


@pytest.mark.parametrize("disc,n_plus,level", [(7, 1, 49), (3, 5, 45), (5, 2, 50)])
def test_pizer_order_level(disc, n_plus, level):
    alg = Q.construct_algebra((disc,))
    po = Q.pizer_order(alg, n_plus, (disc,))
    assert po.level == level
    assert Q.is_order(po.order)
    assert Q.discrd(po.order) == level


def test_pizer_order_rejects_bad_levels():
    alg = Q.construct_algebra((7,))
    with pytest.raises(ValueError):
        Q.pizer_order(alg, 7, (7,))  # shares a prime with the discriminant
    with pytest.raises(ValueError):
        Q.pizer_order(alg, 4, (7,))  # non-squarefree auxiliary level


# ---------------------------------------------------------------------------
# class sets and masses
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cs49():
    alg = Q.construct_algebra((7,))
    return B.right_ideal_classes(Q.pizer_order(alg, 1, (7,)))


@pytest.fixture(scope="module")
def cs45():
    alg = Q.construct_algebra((3,))
    return B.right_ideal_classes(Q.pizer_order(alg, 5, (3,)))


@pytest.mark.parametrize("disc,n_plus,mass", [
    (3, 1, Fraction(1, 3)),
    (5, 1, Fraction(1)),
    (7, 1, Fraction(2)),
    (11, 1, Fraction(5)),
    (3, 2, Fraction(1)),
])
def test_eichler_mass_values(disc, n_plus, mass):
    alg = Q.construct_algebra((disc,))
    po = Q.pizer_order(alg, n_plus, (disc,))
    assert B.eichler_mass(po) == mass


def test_class_set_level_49(cs49):
    assert len(cs49) == 4
    assert cs49.weights == [2, 2, 2, 2]
    assert sum(Fraction(1, w) for w in cs49.weights) == cs49.mass


def test_class_set_mass_certificate(cs45):
    assert sum(Fraction(1, w) for w in cs45.weights) == cs45.mass == B.eichler_mass(cs45.po)


def test_class_representative_norms_coprime_to_level(cs49):
    for n in cs49.norms:
        assert n.denominator == 1
        from math import gcd
        assert gcd(n.numerator, cs49.po.level) == 1


def test_class_set_deterministic():
    alg = Q.construct_algebra((7,))
    a = B.right_ideal_classes(Q.pizer_order(alg, 1, (7,)))
    b = B.right_ideal_classes(Q.pizer_order(alg, 1, (7,)))
    assert [i.mat for i in a.ideals] == [i.mat for i in b.ideals]
    assert a.weights == b.weights


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def _identity(n):
    return DenseMatrix.identity(n)


def test_brandt_row_sums(cs49):
    for q in (2, 3, 5):
        M = B.brandt_matrix(cs49, q)
        for row in M.entries:
            total = ZERO
            for x in row:
                total = total + x
            assert total == B._as_cyclo(q + 1)


def test_brandt_matrices_commute(cs49):
    mats = {q: B.brandt_matrix(cs49, q) for q in (2, 3, 5, 11, 13, 17, 19)}
    U = B.extra_operator(cs49, 7)
    qs = sorted(mats)
    for a in qs:
        for b in qs:
            assert mats[a] * mats[b] == mats[b] * mats[a]
        assert mats[a] * U == U * mats[a]


def test_extra_operator_involution(cs49):
    U = B.extra_operator(cs49, 7)
    assert U * U == _identity(len(cs49))


def test_extra_operator_rejects_split_prime(cs49):
    with pytest.raises(ValueError):
        B.extra_operator(cs49, 5)


def test_atkin_lehner_involution(cs49):
    W = B.atkin_lehner(cs49, 7)
    assert W * W == _identity(len(cs49))
    M2 = B.brandt_matrix(cs49, 2)
    assert W * M2 == M2 * W


def test_self_adjointness_weight_2(cs49):
    n = len(cs49)
    for q in (2, 3):
        M = B.brandt_matrix(cs49, q)
        for i in range(n):
            for j in range(n):
                lhs = M.entries[i][j] * B._as_cyclo(Fraction(1, cs49.weights[i]))
                rhs = M.entries[j][i] * B._as_cyclo(Fraction(1, cs49.weights[j]))
                assert lhs == rhs


def test_weight_4_operators(cs49):
    M2 = B.brandt_matrix(cs49, 2, weight=4)
    M3 = B.brandt_matrix(cs49, 3, weight=4)
    U = B.extra_operator(cs49, 7, weight=4)
    assert M2 * M3 == M3 * M2
    assert U * M2 == M2 * U
    assert U * U == _identity(M2.rows)


def test_weight_rep_multiplicative():
    alg = Q.construct_algebra((7,))
    i, j, k = alg.gens()
    one = alg.one()
    x = one + i
    y = j + k * 2 + one
    rx, ry = B.weight_rep(x, 4), B.weight_rep(y, 4)
    assert B.weight_rep(x * y, 4) == rx * ry


def test_sym_pairing_identities():
    # degree 1: <X, Y> = 1, alternating
    X = [ONE, ZERO]
    Y = [ZERO, ONE]
    assert B.sym_pairing(1, X, Y) == ONE
    assert B.sym_pairing(1, Y, X) == ZERO - ONE
    assert B.sym_pairing(1, X, X) == ZERO
    # invariance up to the norm power: <gP, gQ> = nrd(g)^d <P, Q>
    alg = Q.construct_algebra((7,))
    i, j, k = alg.gens()
    one = alg.one()
    g = one * 2 + i + j
    d = 2
    rep = B.weight_rep(g, d + 2)
    P = [ONE, B._as_cyclo(3), ZERO]
    Qv = [ZERO, ONE, B._as_cyclo(-2)]
    lhs = B.sym_pairing(d, rep.apply(P), rep.apply(Qv))
    rhs = B.sym_pairing(d, P, Qv) * B._as_cyclo(g.nrd() ** d)
    assert lhs == rhs


# ---------------------------------------------------------------------------
# characters
# ---------------------------------------------------------------------------

def test_quadratic_character_twisted_involution(cs45):
    chi = B.quadratic_character(cs45.po, 5)
    U = B.extra_operator(cs45, 3, char=chi)
    # 3 is a non-residue mod 5, so U^2 = chi(3)^{-1} Id = -Id
    assert U * U == _identity(len(cs45)) * (ZERO - ONE)
    M2 = B.brandt_matrix(cs45, 2, char=chi)
    assert U * M2 == M2 * U


def test_inert_even_character_lift(cs49):
    z3 = CyclotomicNumber.zeta(3)
    # order-3 character mod 7 with chi(3) = zeta_3 (3 generates (Z/7)^*)
    vals, x, acc = {1: ONE}, 1, ONE
    for _ in range(5):
        x, acc = x * 3 % 7, acc * z3
        vals[x] = acc
    chi = B.lift_character(cs49.po, {7: vals})
    U = B.extra_operator(cs49, 7, char=chi)
    M2 = B.brandt_matrix(cs49, 2, char=chi)
    assert U * U == _identity(len(cs49))
    assert U * M2 == M2 * U


def test_lift_character_trivial_is_none(cs49):
    assert B.lift_character(cs49.po, {7: {r: ONE for r in range(1, 7)}}) is None


def test_lift_character_rejections(cs49):
    z6 = CyclotomicNumber.zeta(6)
    odd = {1: ONE}
    x, acc = 1, ONE
    for _ in range(5):
        x, acc = x * 3 % 7, acc * z6
        odd[x] = acc
    with pytest.raises(NotImplementedError):
        B.lift_character(cs49.po, {7: odd})
    with pytest.raises(ValueError):
        B.lift_character(cs49.po, {5: {1: ONE, 2: ZERO - ONE, 3: ZERO - ONE, 4: ONE}})


# ---------------------------------------------------------------------------
# eigenspaces, pairings, periods
# ---------------------------------------------------------------------------

def test_worked_example_eigenspace_split(cs49):
    pieces = B.eigenspace_split(cs49, {2: 1}, 7)
    assert len(pieces) == 2
    by_eig = {p.eigenvalue: p.vector for p in pieces}
    assert set(by_eig) == {ONE, ZERO - ONE}
    # up to scalar, the +1 vector is supported on one swap-orbit and the
    # -1 vector on the other, with shape (1, -1, 0, 0)
    for vec in by_eig.values():
        support = [i for i, c in enumerate(vec) if c != ZERO]
        assert len(support) == 2
        i, j = support
        assert vec[i] + vec[j] == ZERO
    supports = {tuple(i for i, c in enumerate(v) if c != ZERO)
                for v in by_eig.values()}
    assert len(supports) == 2 and not set.intersection(*map(set, supports))


def test_f_eigenspace_empty_for_wrong_eigenvalue(cs49):
    assert B.f_eigenspace(cs49, {2: 5}) == []


def test_eigenspace_split_multiplicity_anomaly(cs49):
    with pytest.raises(ValueError, match="multiplicity anomaly"):
        B.eigenspace_split(cs49, {2: 5}, 7)


def test_petersson_self_adjointness(cs49):
    M = B.brandt_matrix(cs49, 3)
    phi = [B._as_cyclo(v) for v in (1, 2, -1, 3)]
    psi = [B._as_cyclo(v) for v in (0, 1, 1, -2)]
    assert B.petersson_pairing(cs49, M.apply(phi), psi) == \
        B.petersson_pairing(cs49, phi, M.apply(psi))


def test_petersson_self_adjointness_weight_4(cs49):
    M = B.brandt_matrix(cs49, 2, weight=4)
    n = M.rows
    phi = [B._as_cyclo((x * 7919) % 11 - 5) for x in range(n)]
    psi = [B._as_cyclo((x * 104729) % 13 - 6) for x in range(n)]
    assert B.petersson_pairing(cs49, M.apply(phi), psi, weight=4) == \
        B.petersson_pairing(cs49, phi, M.apply(psi), weight=4)


def test_trilinear_period_weight_2(cs49):
    ones = [ONE] * len(cs49)
    # sum of 1/w over four classes of weight 2
    assert B.trilinear_period(cs49, ones, ones, ones) == B._as_cyclo(2)
    pieces = B.eigenspace_split(cs49, {2: 1}, 7)
    v_plus = next(p.vector for p in pieces if p.eigenvalue == ONE)
    v_minus = next(p.vector for p in pieces if p.eigenvalue == ZERO - ONE)
    # opposite-sign eigenvectors pair to zero against an invariant vector
    assert B.petersson_pairing(cs49, v_plus, v_minus) == ZERO


def test_trilinear_period_mixed_weight(cs49):
    phi1 = [ONE] * len(cs49)
    phi2 = [ONE, ZERO, ZERO] * len(cs49)
    phi3 = [ZERO, ZERO, ONE] * len(cs49)
    # <(1,0,0),(0,0,1)>_2 = 1 on every class, so the period is the mass
    assert B.trilinear_period(cs49, phi1, phi2, phi3, weight=4) == B._as_cyclo(2)
