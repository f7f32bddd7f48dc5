"""Unit tests for local components, transfers, and trilinear averages.

The brute-force average over the division-algebra unit group is the oracle;
every closed formula and classification rule is checked against it here on
small primes, with the large sweeps living in the acceptance suite.
"""

import random
from fractions import Fraction
from itertools import product

import pytest

from quatlfun.exactfield import CyclotomicNumber, fixed_square_root
from quatlfun.langlands import (
    ConductorOneRep,
    ConductorTwoRep,
    adjoint_L_factor,
    central_product_trivial,
    epsilon_sign_triple,
    local_zeta,
    partition_sigma,
    triple_L_factor,
    triple_case,
)
from quatlfun.localquat import (
    dual_vector,
    eigenvectors_pm,
    jl_transfer_local,
    random_discrete_triple,
    regular_exponents,
    trilinear_bruteforce,
    trilinear_closed_form,
    trilinear_nonvanishing,
)

Z = CyclotomicNumber.zeta
Q = CyclotomicNumber.from_rational


def test_rep_validation():
    with pytest.raises(ValueError):
        ConductorTwoRep(3, 0)          # not regular
    with pytest.raises(ValueError):
        ConductorTwoRep(3, 4)          # 2*4 = 0 mod 8
    with pytest.raises(ValueError):
        ConductorOneRep(3, 2)          # not a root of unity
    r = ConductorTwoRep(5, 1, Z(3))
    assert r.central_at_uniformizer() == Z(3)
    assert r.central_unit_value() == Z(4)


def test_local_zeta():
    assert local_zeta(7, 1) == Fraction(7, 6)
    assert local_zeta(7, 2) == Fraction(49, 48)
    assert local_zeta(2, -1) == Fraction(-1)


def test_adjoint_factors():
    st = ConductorOneRep(7, -1)
    assert adjoint_L_factor(st, 1) == local_zeta(7, 2)
    sc = ConductorTwoRep(7, 1)
    assert adjoint_L_factor(sc, 1) == local_zeta(7, 2) / local_zeta(7, 1)
    # 1/(1+q^{-s}) shape
    assert adjoint_L_factor(sc, 1) == Fraction(7, 8)


def test_triple_case_and_partition():
    st = ConductorOneRep(3, 1)
    sc = ConductorTwoRep(3, 1)
    assert triple_case([st, st, st]) == 1
    assert triple_case([st, sc, sc]) == 2
    assert triple_case([sc, sc, sc]) == 3
    assert triple_case([st, st, sc]) == 0
    sig = partition_sigma({3: (sc, sc, sc), 7: (ConductorOneRep(7, 1),) * 3})
    assert sig == {1: [7], 2: [], 3: [3]}
    with pytest.raises(ValueError):
        partition_sigma({3: (st, st, sc)})


def test_triple_L_factor_shapes():
    st = ConductorOneRep(3, 1)
    sc = ConductorTwoRep(3, 1, -1)
    z = lambda s: local_zeta(3, s)
    assert triple_L_factor([st, st, st], 1) == z(4) * z(3) ** 2
    assert triple_L_factor([sc, sc, st], 1) == z(4)
    assert triple_L_factor([sc, sc, sc], 1) == z(2)


def test_central_triviality_guard():
    st = ConductorOneRep(3, Z(3))
    triv = ConductorOneRep(3, 1)
    assert not central_product_trivial([st, triv, triv])
    with pytest.raises(ValueError):
        epsilon_sign_triple(st, triv, triv)
    with pytest.raises(ValueError):
        trilinear_bruteforce([st, triv, triv])
    # but the cube of a cubic twist is centrally trivial
    assert central_product_trivial([st, st, st])


def test_eigenvectors():
    r = ConductorTwoRep(5, 1, -1)
    plus, minus = eigenvectors_pm(r)
    lam = fixed_square_root(Q(-1))
    assert plus == (Q(1), lam) and minus == (Q(1), -lam)
    # pi(w_D) really has these eigenvalues: [[0,1],[omega,0]] (1, s*lam)^T
    # = (s*lam, omega)^T = s*lam * (1, s*lam)^T
    for v, s in ((plus, 1), (minus, -1)):
        image = (v[1], r.omega_pi * v[0])
        assert image == (s * lam * v[0], s * lam * v[1])


def test_dual_vector_pairing():
    r = ConductorTwoRep(5, 1, Z(3))
    plus, minus = eigenvectors_pm(r)
    for v in (plus, minus, (Q(2), Q(3)), (Q(1), Q(0))):
        d = dual_vector(r, v)
        assert v[0] * d[0] + v[1] * d[1] == Q(1)
    # dual of an eigenvector kills the other eigenvector
    dp = dual_vector(r, plus)
    assert plus[0] * dp[0] + plus[1] * dp[1] == Q(1)
    assert minus[0] * dp[0] + minus[1] * dp[1] == Q(0)


def test_case1_bruteforce_value():
    # all 1-dimensional: average is 1 + c1 c2 c3 exactly
    for cs in [(1, 1, 1), (-1, 1, -1), (1, -1, -1), (-1, -1, -1)]:
        reps = [ConductorOneRep(3, c) for c in cs]
        want = Q(1) + Q(cs[0] * cs[1] * cs[2])
        assert trilinear_bruteforce(reps) == want
        assert trilinear_closed_form(reps) == want


def test_bruteforce_matches_closed_form_small():
    rng = random.Random(7)
    for ell in (3, 5):
        for case in (1, 2, 3):
            for _ in range(6):
                reps = random_discrete_triple(ell, case, rng)
                two = [i for i, r in enumerate(reps)
                       if isinstance(r, ConductorTwoRep)]
                for signs in product((1, -1), repeat=len(two)):
                    eps = [None] * 3
                    for s, i in zip(signs, two):
                        eps[i] = s
                    assert trilinear_bruteforce(reps, eps=eps) == \
                        trilinear_closed_form(reps, eps=eps)


def test_bruteforce_general_vectors():
    # non-eigen test vectors still match the invariant-functional prediction:
    # expanding v = a e+ + b e-, the chosen dual picks out the leading
    # eigencomponent, so the value equals the eigenvector value of that sign.
    rng = random.Random(11)
    reps = random_discrete_triple(3, 3, rng)
    v = (Q(1), Q(0))  # a = b = 1/2: leading component is +
    got = trilinear_bruteforce(reps, vectors=[v, None, None])
    want = trilinear_closed_form(reps, eps=[1, 1, 1])
    assert got == want


def test_nonvanishing_iff_sign():
    rng = random.Random(3)
    for ell in (3, 5):
        for case in (1, 2, 3):
            for _ in range(10):
                reps = random_discrete_triple(ell, case, rng)
                sign = epsilon_sign_triple(*reps)
                assert trilinear_nonvanishing(list(reps)) == (sign == -1)


def test_sign_examples():
    # three Steinbergs, trivial twists: product is 1, sign -1
    st = ConductorOneRep(7, 1)
    assert epsilon_sign_triple(st, st, st) == -1
    st2 = ConductorOneRep(7, -1)
    assert epsilon_sign_triple(st, st2, st2) == -1
    assert epsilon_sign_triple(st, st, st2) == 1
    # case 2 at ell=3: q=8, pairs summing to 0 or scaled by 3
    sc1 = ConductorTwoRep(3, 1, 1)
    sc7 = ConductorTwoRep(3, 7, 1)
    assert epsilon_sign_triple(sc1, sc7, ConductorOneRep(3, 1)) == -1  # 1+7=8
    sc3 = ConductorTwoRep(3, 3, 1)
    assert epsilon_sign_triple(sc1, sc3, ConductorOneRep(3, 1)) == 1


def test_regular_exponents():
    assert regular_exponents(3) == [1, 2, 3, 5, 6, 7]
    for ell in (3, 5, 7):
        N = ell * ell - 1
        for e in regular_exponents(ell):
            assert (ell - 1) * e % N != 0


def test_random_triple_admissible():
    rng = random.Random(0)
    for ell in (3, 5, 7, 11):
        for case in (1, 2, 3):
            reps = random_discrete_triple(ell, case, rng)
            assert central_product_trivial(reps)
            assert triple_case(reps) == case


def test_jl_transfer_dims():
    assert jl_transfer_local(ConductorOneRep(3, 1)).dim == 1
    assert jl_transfer_local(ConductorTwoRep(3, 1)).dim == 2
    with pytest.raises(TypeError):
        jl_transfer_local("not a rep")
