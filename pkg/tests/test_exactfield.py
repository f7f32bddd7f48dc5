from fractions import Fraction
from math import gcd, isclose

import pytest
from hypothesis import given, settings, strategies as st

from quatlfun.exactfield import (
    CyclotomicNumber,
    DenseMatrix,
    FqElement,
    cyclotomic_poly,
    eigenspace,
    euler_phi,
    factorize,
    fixed_square_root,
    fq2_dlog,
    fq2_elements,
    fq2_generator,
    least_nonresidue,
    sqrt_int,
)

Z = CyclotomicNumber.zeta
Q = CyclotomicNumber.from_rational


def test_cyclotomic_poly_small():
    assert cyclotomic_poly(1) == (-1, 1)
    assert cyclotomic_poly(2) == (1, 1)
    assert cyclotomic_poly(3) == (1, 1, 1)
    assert cyclotomic_poly(4) == (1, 0, 1)
    assert cyclotomic_poly(6) == (1, -1, 1)
    assert cyclotomic_poly(12) == (1, 0, -1, 0, 1)
    # degree is phi(n)
    for n in range(1, 60):
        assert len(cyclotomic_poly(n)) - 1 == euler_phi(n)


def test_zeta_identities():
    assert Z(4) * Z(4) == Q(-1)
    assert Z(3) + Z(3) ** 2 == Q(-1)
    assert Z(8) * Z(8) == Z(4)
    assert Z(1) == Q(1)
    assert Z(2) == Q(-1)
    # zeta_6 lives in Q(zeta_3): order normalization
    assert Z(6).order == 3
    assert Z(6) == -(Z(3) ** 2)
    assert Z(6) ** 6 == Q(1)
    assert Z(6) ** 3 == Q(-1)


def test_zeta_order_exact():
    for n in (3, 4, 5, 7, 8, 9, 12, 15):
        z = Z(n)
        assert z ** n == Q(1)
        for k in range(1, n):
            assert z ** k != Q(1)


def test_cross_order_arithmetic():
    # zeta_3 * zeta_4 = zeta_12^7
    assert Z(3) * Z(4) == Z(12, 7)
    assert Z(3) + Q(0) == Z(3)
    x = Z(5) + Z(7)
    assert (x - Z(7)) == Z(5)


def test_inverse_and_division():
    for n in (3, 4, 5, 8, 12):
        z = Z(n)
        assert z * z.inverse() == Q(1)
    x = Q(3) + Z(5) * 2
    assert x * x.inverse() == Q(1)
    assert (x / x) == Q(1)
    with pytest.raises(ZeroDivisionError):
        Q(0).inverse()


def test_conjugate():
    assert Z(4).conjugate() == -Z(4)
    x = Z(7) + Z(7, 6)
    assert x.conjugate() == x  # real
    for n in (3, 5, 8):
        z = Z(n)
        assert z * z.conjugate() == Q(1)


def test_as_root_of_unity():
    assert Q(1).as_root_of_unity() == (0, 1)
    assert Q(-1).as_root_of_unity() == (1, 2)
    assert Z(3).as_root_of_unity() == (1, 3)
    assert Z(4).as_root_of_unity() == (1, 4)
    assert (-Z(3)).as_root_of_unity() == (5, 6)
    assert (Z(3) + 1).as_root_of_unity() == (1, 6)  # 1 + zeta_3 = zeta_6
    assert Q(2).as_root_of_unity() is None
    assert (Z(5) + 1).as_root_of_unity() is None


def test_fixed_square_root_examples():
    assert fixed_square_root(Q(1)) == Q(1)
    assert fixed_square_root(Q(-1)) == Z(4)
    assert fixed_square_root(Z(3)) == Z(6)
    assert fixed_square_root(Z(4)) == Z(8)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 8, 9, 12, 15, 16])
def test_fixed_square_root_squares_back(m):
    for k in range(m):
        if gcd(k, m) == 1 or (k == 0 and m == 1):
            u = Z(m, k)
            s = fixed_square_root(u)
            assert s * s == u


def test_fixed_square_root_rejects_non_roots():
    with pytest.raises(ValueError):
        fixed_square_root(Q(2))
    with pytest.raises(ValueError):
        fixed_square_root(Q(0))


@pytest.mark.parametrize("d", [1, 2, 3, 5, -1, -2, -3, -7, 12, 45, -39, 49])
def test_sqrt_int(d):
    s = sqrt_int(d)
    assert s * s == Q(d)


def test_sqrt_int_numeric_branch():
    # positive d lands on the positive real root
    for d in (2, 3, 5, 7, 13):
        assert isclose(sqrt_int(d).to_complex().real, d ** 0.5, rel_tol=1e-9)
        assert abs(sqrt_int(d).to_complex().imag) < 1e-9


@given(st.integers(-30, 30), st.integers(-30, 30), st.integers(-30, 30))
@settings(max_examples=60, deadline=None)
def test_rational_field_axioms(a, b, c):
    x, y, w = Q(a), Q(b), Q(c)
    assert (x + y) * w == x * w + y * w
    assert x * y == y * x
    assert x + (y + w) == (x + y) + w


@given(st.integers(0, 11), st.integers(0, 11), st.integers(-5, 5))
@settings(max_examples=60, deadline=None)
def test_mixed_axioms(i, j, c):
    x = Z(12, i) + c
    y = Z(12, j) - c
    assert (x + y) - y == x
    assert x * y == y * x
    if not x.is_zero():
        assert x * x.inverse() == Q(1)


def test_demote():
    # an element of Q(zeta_12) that is really in Q(zeta_3)
    x = Z(3).promote(12)
    assert x.order == 12
    assert x.demote().order == 3
    assert hash(Z(3).promote(12)) == hash(Z(3))


# -- finite fields ----------------------------------------------------------

@pytest.mark.parametrize("ell", [3, 5, 7, 11, 13])
def test_fq2_field(ell):
    one = FqElement(ell, 1)
    g = fq2_generator(ell)
    q = ell * ell - 1
    assert g ** q == one
    # generator has full order
    for p, _ in factorize(q):
        assert g ** (q // p) != one
    # norm is multiplicative, frobenius is the involution
    x = FqElement(ell, 2, 1)
    y = FqElement(ell, 1, 2)
    assert (x * y).norm() == (x.norm() * y.norm()) % ell
    assert x.frobenius().frobenius() == x
    assert x ** ell == x.frobenius()
    assert x * x.inverse() == one


@pytest.mark.parametrize("ell", [3, 5, 7])
def test_fq2_frobenius_exhaustive(ell):
    for x in fq2_elements(ell):
        assert x ** ell == x.frobenius()
        assert fq2_generator(ell) ** fq2_dlog(x) == x


def test_fq2_norm_onto():
    # the norm maps F_{l^2}^* onto F_l^*
    for ell in (3, 5, 7):
        norms = {x.norm() for x in fq2_elements(ell)}
        assert norms == set(range(1, ell))


def test_least_nonresidue():
    assert least_nonresidue(3) == 2
    assert least_nonresidue(5) == 2
    assert least_nonresidue(7) == 3
    assert least_nonresidue(11) == 2
    assert least_nonresidue(13) == 2


# -- matrices ----------------------------------------------------------------

def test_matrix_basics():
    I = DenseMatrix.identity(2)
    M = DenseMatrix([[0, 1], [1, 0]])
    assert M * M == I
    assert (M * M) * M == M
    assert M.transpose() == M
    assert M.apply([Q(1), Q(2)]) == [Q(2), Q(1)]


def test_eigenspace_identity():
    I = DenseMatrix.identity(2)
    assert len(eigenspace(I, 1)) == 2
    assert eigenspace(I, -1) == []


def test_eigenspace_swap():
    M = DenseMatrix([[0, 1], [1, 0]])
    minus = eigenspace(M, -1)
    assert len(minus) == 1
    v = minus[0]
    assert v[0] == -v[1]
    plus = eigenspace(M, 1)
    assert len(plus) == 1 and plus[0][0] == plus[0][1]


def test_eigenspace_cyclotomic_eigenvalue():
    # rotation by zeta_4 on the span of (1, i)
    M = DenseMatrix([[0, -1], [1, 0]])
    basis = eigenspace(M, Z(4))
    assert len(basis) == 1
    v = basis[0]
    got = M.apply(v)
    assert got == [Z(4) * v[0], Z(4) * v[1]]


def test_kernel():
    M = DenseMatrix([[1, 1], [2, 2]])
    k = M.kernel()
    assert len(k) == 1
    assert M.apply(k[0]) == [Q(0), Q(0)]
