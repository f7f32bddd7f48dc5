"""Tests for the interpolation Euler factors and normalization constants."""

import random
from fractions import Fraction

import pytest

from quatlfun.exactfield import CyclotomicNumber, ONE, ZERO
from quatlfun.interpolation import (MissingExternalDatum, NormalizationReport,
                                    PExpr, SatakeData, SigmaPartition,
                                    SqrtZeta, WeightPoint,
                                    balanced_euler_product, euler_adjoint,
                                    euler_balanced, local_zeta_constant,
                                    normalization_constant, sign_factor,
                                    steinberg_b_constant, zeta_factor)


def _rou(rng):
    """A random root of unity of order dividing 12."""
    n = rng.choice([1, 2, 3, 4, 6, 12])
    k = rng.randrange(n)
    z, out = CyclotomicNumber.zeta(n), ONE
    for _ in range(k):
        out = out * z
    return out


def _pexpr_complex(x: PExpr, pval: float) -> complex:
    return sum(complex(u.to_complex()) * pval ** float(e)
               for e, u in x.terms.items())


# ---------------------------------------------------------------------------
# symbolic p-power arithmetic
# ---------------------------------------------------------------------------

def test_pexpr_arithmetic():
    p = 5
    x = PExpr.monomial(p, 1, Fraction(1, 2)) + PExpr.monomial(p, -2, -1)
    y = PExpr.monomial(p, 3, 0)
    assert (x + y) - y == x
    assert x * y == y * x
    assert (x * y) * x == x * (y * x)
    assert PExpr.monomial(p, 2, 3).inverse() * PExpr.monomial(p, 2, 3) == 1
    with pytest.raises(ValueError):
        x.inverse()  # not a monomial
    with pytest.raises(ValueError):
        PExpr.monomial(p, 1, Fraction(1, 3))


def test_satake_invariant_enforced():
    p = 5
    alpha = PExpr.monomial(p, 1, 0)
    good = PExpr.monomial(p, 1, 1)
    SatakeData("x", 2, p, alpha, good, ONE)
    with pytest.raises(ValueError):
        SatakeData("x", 2, p, alpha, PExpr.monomial(p, 1, 2), ONE)


def test_ordinarity_flag():
    p = 7
    f = SatakeData("f", 2, p, PExpr.monomial(p, 2, 0),
                   PExpr.monomial(p, Fraction(1, 2), 1), ONE)
    assert f.ordinary
    g = SatakeData("g", 2, p, PExpr.monomial(p, 1, 1),
                   PExpr.monomial(p, 1, 0), ONE)
    assert not g.ordinary


# ---------------------------------------------------------------------------
# balanced and adjoint Euler factors
# ---------------------------------------------------------------------------

def _simple_form(label, k, p, alpha_unit, chi):
    alpha = PExpr.monomial(p, alpha_unit, 0)
    beta = PExpr.monomial(p, chi * alpha_unit.inverse(), k - 1)
    return SatakeData(label, k, p, alpha, beta, chi)


def test_euler_balanced_all_beta_zero():
    p = 5
    forms = [SatakeData(s, 2, p, PExpr.monomial(p, 1, 1), PExpr(p, {}), ZERO)
             for s in "fgh"]
    # with all beta = 0, every factor collapses to 1
    assert balanced_euler_product(*forms, c=2) == 1


def test_euler_balanced_matches_direct_substitution():
    # independent oracle: numerical evaluation of the four factors
    rng = random.Random(11)
    p = 5
    for _ in range(10):
        chi_f, chi_g = _rou(rng), _rou(rng)
        chi_h = (chi_f * chi_g).inverse()
        f = _simple_form("f", 2, p, _rou(rng), chi_f)
        g = _simple_form("g", 2, p, _rou(rng), chi_g)
        h = _simple_form("h", 2, p, _rou(rng), chi_h)
        val = euler_balanced(f, g, h, WeightPoint(2, 2, 2))
        af, bf = (_pexpr_complex(x, p) for x in (f.alpha, f.beta))
        ag, bg = (_pexpr_complex(x, p) for x in (g.alpha, g.beta))
        ah, bh = (_pexpr_complex(x, p) for x in (h.alpha, h.beta))
        direct = ((1 - af * bg * bh / p ** 2) * (1 - bf * ag * bh / p ** 2)
                  * (1 - bf * bg * ah / p ** 2) * (1 - bf * bg * bh / p ** 2))
        assert abs(_pexpr_complex(val, p) - direct) < 1e-9


def test_euler_balanced_symmetric_in_g_h():
    rng = random.Random(3)
    p = 7
    for _ in range(5):
        chi_f, chi_g = _rou(rng), _rou(rng)
        chi_h = (chi_f * chi_g).inverse()
        f = _simple_form("f", 2, p, _rou(rng), chi_f)
        g = _simple_form("g", 4, p, _rou(rng), chi_g)
        h = _simple_form("h", 4, p, _rou(rng), chi_h)
        w = WeightPoint(2, 4, 4)
        assert euler_balanced(f, g, h, w) == \
            euler_balanced(f, h, g, WeightPoint(2, 4, 4))


def test_euler_balanced_rejects_unbalanced():
    p = 5
    f = _simple_form("f", 6, p, ONE, ONE)
    g = _simple_form("g", 2, p, ONE, ONE)
    h = _simple_form("h", 2, p, ONE, ONE)
    with pytest.raises(ValueError, match="balanced"):
        euler_balanced(f, g, h, WeightPoint(6, 2, 2))


def test_euler_balanced_rejects_nontrivial_central_product():
    p = 5
    zi = CyclotomicNumber.zeta(4)
    f = _simple_form("f", 2, p, ONE, zi)
    g = _simple_form("g", 2, p, ONE, ONE)
    h = _simple_form("h", 2, p, ONE, ONE)
    with pytest.raises(ValueError, match="central"):
        euler_balanced(f, g, h, WeightPoint(2, 2, 2))


def test_euler_adjoint_theta_critical_vanishes():
    p = 5
    # alpha^2 = chi(p) p^{k-1}: take k = 3, alpha = p, chi(p) p^2 = p^2
    alpha = PExpr.monomial(p, 1, 1)
    f = SatakeData("f", 3, p, alpha, alpha, ONE)
    assert euler_adjoint(f).is_zero()


def test_euler_adjoint_requires_nonzero_alpha():
    p = 5
    f = SatakeData("f", 2, p, PExpr(p, {}), PExpr(p, {}), ZERO)
    with pytest.raises(ValueError):
        euler_adjoint(f)


def test_euler_adjoint_weight_one_regular_nonzero():
    p = 5
    z = CyclotomicNumber.zeta(3)
    f = SatakeData("f", 1, p, PExpr.monomial(p, z, 0),
                   PExpr.monomial(p, z * z, 0), ONE)
    assert not euler_adjoint(f).is_zero()


# ---------------------------------------------------------------------------
# CM specialization: Euler factor identities along theta-series families
# ---------------------------------------------------------------------------

def make_cm_family(rng, p):
    """Random split-prime character data for a pair of theta series: values
    of psi_g, psi_h at the two primes above p, and the weight-raising
    character with product of local values equal to p."""
    lam_unit = _rou(rng)
    lam_p = PExpr.monomial(p, lam_unit, Fraction(1, 2))
    lam_pbar = PExpr.monomial(p, lam_unit.inverse(), Fraction(1, 2))
    data = {
        "psi_g": (_rou(rng), _rou(rng)),
        "psi_h": (_rou(rng), _rou(rng)),
        "lam_p": lam_p,
        "lam_pbar": lam_pbar,
    }
    return data


def cm_theta_satake(label, psi, lam_p, weight, p):
    """Satake data of the weight-``weight`` member of the theta family."""
    psi_p, psi_pbar = psi
    alpha = PExpr.monomial(p, psi_p, 0) * lam_p ** (weight - 1)
    beta = PExpr.monomial(p, psi_pbar, weight - 1) * \
        lam_p.inverse() ** (weight - 1)
    chi = psi_p * psi_pbar
    return SatakeData(label, weight, p, alpha, beta, chi)


def cm_f_form(rng, data, p):
    chi_f = (data["psi_g"][0] * data["psi_g"][1]
             * data["psi_h"][0] * data["psi_h"][1]).inverse()
    return _simple_form("f", 2, p, _rou(rng), chi_f)


def cm_identity_sides(f, data, ell, p):
    """Left side: the four balanced factors over the Hecke-compatible part
    of the CM L-factor at p; right side: the two psi_1 factors."""
    g = cm_theta_satake("g", data["psi_g"], data["lam_p"], ell, p)
    h = cm_theta_satake("h", data["psi_h"], data["lam_p"], ell, p)
    four = balanced_euler_product(f, g, h, c=Fraction(ell))
    # e(f, Psi_gh): X = psi_2(pbar) lam(pbar)^{2l-2} p^{-l}, psi_2 = psi_g psi_h
    psi2_bar = data["psi_g"][1] * data["psi_h"][1]
    X = PExpr.monomial(p, psi2_bar, -ell) * data["lam_pbar"] ** (2 * ell - 2)
    one = PExpr.scalar(p, 1)
    e_f = (one - f.alpha * X) * (one - f.beta * X)
    # E(l) = (1 - b_f psi_1(p) p^{-1})(1 - b_f psi_1(pbar) p^{-1})
    psi1_p = data["psi_g"][0] * data["psi_h"][1]
    psi1_pbar = data["psi_g"][1] * data["psi_h"][0]
    E = (one - f.beta * PExpr.monomial(p, psi1_p, -1)) * \
        (one - f.beta * PExpr.monomial(p, psi1_pbar, -1))
    return four, E * e_f


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_cm_euler_identity(seed):
    rng = random.Random(seed)
    p = 5
    data = make_cm_family(rng, p)
    f = cm_f_form(rng, data, p)
    for ell in range(1, 6):
        lhs, rhs = cm_identity_sides(f, data, ell, p)
        assert lhs == rhs


@pytest.mark.parametrize("seed", [4, 5])
def test_cm_adjoint_factor_identity(seed):
    # the adjoint Euler factor of a theta-family member equals the Katz-type
    # factor of the square-free character twist
    rng = random.Random(seed)
    p = 7
    data = make_cm_family(rng, p)
    for ell in range(1, 6):
        for key in ("psi_g", "psi_h"):
            F = cm_theta_satake("F", data[key], data["lam_p"], ell, p)
            # Psi_F(l)(p-prime) = psi^{-2}(p-prime) chi(p) p^l at each prime
            psi_p, psi_pbar = data[key]
            lam2 = data["lam_p"] ** (2 * ell - 2)
            chi = psi_p * psi_pbar
            one = PExpr.scalar(p, 1)
            Psi_p = PExpr.monomial(p, psi_p.inverse() ** 2 * chi, ell) * \
                lam2.inverse()
            e1 = one - Psi_p * PExpr.monomial(p, 1, -1)
            Psi_pbar = PExpr.monomial(p, psi_pbar.inverse() ** 2 * chi, ell) * \
                data["lam_pbar"].inverse() ** (2 * ell - 2)
            e2 = one - Psi_pbar.inverse()
            assert euler_adjoint(F) == e1 * e2


# ---------------------------------------------------------------------------
# sign factors
# ---------------------------------------------------------------------------

def test_sign_factor_examples():
    part = SigmaPartition(steinberg=(2,), two_sc=(), three_sc=(7,))
    val = sign_factor(part, {7: (1, 1, 1)}, {})
    assert val == ZERO + CyclotomicNumber.from_rational(Fraction(1, 2))
    part2 = SigmaPartition(steinberg=(), two_sc=(5,), three_sc=())
    assert sign_factor(part2, {5: (1, 1)}, {5: ONE}) == ONE
    # vanishing branch at a three-supercuspidal prime
    assert sign_factor(part, {7: (1, 1, -1)}, {}).is_zero()
    # empty supercuspidal locus
    empty = SigmaPartition(steinberg=(3,), two_sc=(), three_sc=())
    assert sign_factor(empty, {}, {}) == ONE


def test_sign_factor_two_sc_vanishing_branch():
    part = SigmaPartition(steinberg=(), two_sc=(7,), three_sc=())
    assert sign_factor(part, {7: (1, -1)}, {7: ONE}).is_zero()
    assert not sign_factor(part, {7: (1, 1)}, {7: ONE}).is_zero()


def test_sign_factor_sweep_structure():
    # over all sign choices the value is 0 or 2^{-a} times a unit
    part = SigmaPartition(steinberg=(), two_sc=(5,), three_sc=(7,))
    for e1 in (1, -1):
        for e2 in (1, -1):
            for d in ((1, 1, 1), (1, 1, -1), (-1, 1, 1)):
                v = sign_factor(part, {5: (e1, e2), 7: d}, {5: ONE})
                expected_zero = (e1 * e2 == -1) or (d[0] * d[1] * d[2] == -1)
                assert v.is_zero() == expected_zero
                if not v.is_zero():
                    assert v == CyclotomicNumber.from_rational(Fraction(1, 2))


# ---------------------------------------------------------------------------
# normalization and local zeta constants
# ---------------------------------------------------------------------------

def test_normalization_constant_pieces():
    part = SigmaPartition(steinberg=(), two_sc=(7,), three_sc=())
    w = WeightPoint(2, 1, 1)
    rep = normalization_constant(part, w, n_minus=49, eps_sigma_minus="eps",
                                 conductor_f_prime="ff")
    assert rep.two_power_exponent == 1  # -(1 + 1 - 4)/2
    assert rep.sigma_exc_factor == 1
    assert rep.two_variable_constant == 1
    rep2 = normalization_constant(part, WeightPoint(2, 2, 2), n_minus=49,
                                  eps_sigma_minus="eps", conductor_f_prime="ff")
    exp, sym = rep2.ell_pieces[7]
    assert exp == Fraction(6) - Fraction(13, 2) == Fraction(-1, 2)
    assert sym == SqrtZeta(7) and sym.square == Fraction(49, 48)


def test_normalization_constant_requires_external_data():
    part = SigmaPartition(steinberg=(3,), two_sc=(), three_sc=())
    with pytest.raises(MissingExternalDatum, match="requires-external-datum"):
        normalization_constant(part, WeightPoint(2, 2, 2), n_minus=9)
    with pytest.raises(MissingExternalDatum, match="requires-external-datum"):
        normalization_constant(part, WeightPoint(2, 2, 2), n_minus=9,
                               eps_sigma_minus="eps")


def test_normalization_exceptional_primes():
    part = SigmaPartition(steinberg=(), two_sc=(), three_sc=(7,))
    rep = normalization_constant(part, WeightPoint(2, 2, 2), n_minus=343,
                                 eps_sigma_minus=1, conductor_f_prime=1,
                                 sigma_exc=(3,))
    assert rep.sigma_exc_factor == Fraction(4, 9)
    assert rep.two_variable_constant == Fraction(1, 2)


def test_local_zeta_constant_three_sc():
    w = WeightPoint(2, 2, 2)
    val = local_zeta_constant(7, "three-supercuspidal", eps=(1, 1, 1), weights=w)
    expected = Fraction(1, 2) * Fraction(7) ** (13 - 12) / zeta_factor(7, 2)
    assert val == CyclotomicNumber.from_rational(expected)
    assert local_zeta_constant(7, "three-supercuspidal", eps=(1, -1, 1),
                               weights=w).is_zero()


def test_local_zeta_constant_two_sc_vanishing():
    w = WeightPoint(2, 2, 2)
    assert local_zeta_constant(7, "two-supercuspidal", eps=(1, -1), omega3=ONE,
                               weights=w).is_zero()
    val = local_zeta_constant(7, "two-supercuspidal", eps=(1, 1), omega3=ONE,
                              weights=w)
    expected = -Fraction(7) ** 1 / zeta_factor(7, 2)
    assert val == CyclotomicNumber.from_rational(expected)


def test_local_zeta_constant_split_level():
    assert local_zeta_constant(3, "split-level") == ONE
    assert local_zeta_constant(3, "split-level", exceptional=True) == \
        CyclotomicNumber.from_rational(Fraction(16, 9))


def test_steinberg_b_constant():
    q = 3
    assert steinberg_b_constant(q) == \
        -zeta_factor(q, 2) ** 3 / zeta_factor(q, 1) ** 3 == \
        -Fraction(Fraction(9, 8) ** 3, Fraction(3, 2) ** 3)
