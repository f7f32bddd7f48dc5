"""Local division-algebra models and invariant trilinear forms.

Over the quadratic unramified extension E of Q_ell the unit group of the local
division algebra D is generated by E^* together with a uniformizer w_D whose
square is a uniformizer of the base and whose conjugation action on E is the
Frobenius.  Both transfers we need are finite-dimensional:

* a Steinberg twist St x eta transfers to the character eta(nu(.)) of D^*;
* the conductor-2 supercuspidal attached to the exponent-e character psi of
  E^* transfers to the 2-dimensional model
      x in E^*  |->  diag(psi(x), psi(Frob x)),
      w_D       |->  [[0, 1], [omega, 0]],    omega = central value.

The trilinear form on a triple with trivial central character product is
computed by brute-force summation of matrix coefficients over the group
D^*/F^* Z, using representatives E^*/F^* join w_D E^*/F^*; after averaging
this equals a sum over all of F_{l^2}^* of unit coefficients plus the
uniformizer branch.  Intermediate scalars are held in the group ring
Q[x]/(x^M - 1) and reduced to an exact cyclotomic number only at the end.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import lcm

from .exactfield import (
    CyclotomicNumber,
    ONE,
    ZERO,
    _coerce,
    fixed_square_root,
)
from .langlands import ConductorOneRep, ConductorTwoRep, central_product_trivial, triple_case

# ---------------------------------------------------------------------------
# transfer models
# ---------------------------------------------------------------------------


class OneDimModel:
    """Character model eta(nu(.)): trivial on units, c at the uniformizer."""

    dim = 1

    def __init__(self, rep: ConductorOneRep):
        self.rep = rep
        self.ell = rep.ell
        self.c = rep.c


class TwoDimModel:
    """The 2-dimensional transfer of a conductor-2 supercuspidal."""

    dim = 2

    def __init__(self, rep: ConductorTwoRep):
        self.rep = rep
        self.ell = rep.ell
        self.e = rep.e
        self.omega = rep.omega_pi

    @property
    def lam(self):
        return _sqrt_pair(self.omega)[0]

    def unit_matrix(self, k: int):
        """pi(g^k) = diag(zeta^{ek}, zeta^{e l k}) as cyclotomic scalars."""
        n = self.ell * self.ell - 1
        return (
            CyclotomicNumber.zeta(n, self.e * k % n),
            CyclotomicNumber.zeta(n, self.e * self.ell * k % n),
        )


def jl_transfer_local(rep):
    """Transfer a discrete GL_2 component to its division-algebra model."""
    if isinstance(rep, ConductorOneRep):
        return OneDimModel(rep)
    if isinstance(rep, ConductorTwoRep):
        return TwoDimModel(rep)
    raise TypeError(f"no transfer for {rep!r}")


def eigenvectors_pm(rep: ConductorTwoRep):
    """The two eigenvectors of pi(w_D): (1, +lam) and (1, -lam).

    lam is the canonical square root of the central value at the uniformizer;
    the eigenvalue on (1, s*lam) is s*lam.
    """
    lam = fixed_square_root(rep.omega_pi)
    return (ONE, lam), (ONE, -lam)


def dual_vector(rep: ConductorTwoRep, v):
    """The linear functional with <v, dual(v)> = 1, vanishing on the other
    pi(w_D)-eigenline when v is not itself an eigenvector mixture.

    Expanding v = a e_+ + b e_- in the eigenbasis, the dual is the dual-basis
    functional of the leading eigencomponent, scaled to pair to 1.
    """
    lam = fixed_square_root(rep.omega_pi)
    v0, v1 = _coerce(v[0]), _coerce(v[1])
    lam_inv = lam.inverse()
    half = Fraction(1, 2)
    a = (v0 + v1 * lam_inv) * half
    b = (v0 - v1 * lam_inv) * half
    if not a.is_zero():
        return (half / a, half * lam_inv / a)
    if not b.is_zero():
        return (half / b, -(half * lam_inv) / b)
    raise ValueError("cannot take the dual of the zero vector")


# ---------------------------------------------------------------------------
# group-ring scalars: sparse integer elements of Z[x]/(x^M - 1), with the
# rational denominator tracked separately for speed
# ---------------------------------------------------------------------------


def _gr_from_cyclo(c: CyclotomicNumber, M: int):
    """Embed as (denominator, integer dict)."""
    assert M % c.order == 0
    step = M // c.order
    den = lcm(*(v.denominator for v in c.coeffs)) if any(c.coeffs) else 1
    return den, {i * step: int(v * den) for i, v in enumerate(c.coeffs) if v}


def _gr_mul(a: dict, b: dict, M: int) -> dict:
    out: dict[int, int] = {}
    for i, x in a.items():
        for j, y in b.items():
            k = (i + j) % M
            out[k] = out.get(k, 0) + x * y
    return {k: v for k, v in out.items() if v}


def _gr_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
        if not out[k]:
            del out[k]
    return out


def _gr_to_cyclo(a: dict, M: int) -> CyclotomicNumber:
    if not a:
        return ZERO
    return CyclotomicNumber._reduce_poly(M, a)


# ---------------------------------------------------------------------------
# brute-force trilinear form
# ---------------------------------------------------------------------------


_SQRT_PAIRS: dict = {}


def _sqrt_pair(omega: CyclotomicNumber):
    """(lam, lam^{-1}) for the canonical square root of a root of unity."""
    key = (omega.order, omega.coeffs)
    hit = _SQRT_PAIRS.get(key)
    if hit is None:
        k, m = omega.as_root_of_unity()
        lam = CyclotomicNumber.zeta(2 * m, k)
        hit = (lam, CyclotomicNumber.zeta(2 * m, -k))
        _SQRT_PAIRS[key] = hit
    return hit


def _model_vectors(reps, eps, vectors):
    """Resolve test vectors and duals: explicit > eigen-sign > default (+)."""
    models = [jl_transfer_local(r) for r in reps]
    vecs, duals = [], []
    half = Fraction(1, 2)
    for i, m in enumerate(models):
        if m.dim == 1:
            vecs.append(None)
            duals.append(None)
            continue
        if vectors is not None and vectors[i] is not None:
            v = tuple(_coerce(c) for c in vectors[i])
            vecs.append(v)
            duals.append(dual_vector(m.rep, v))
        else:
            sign = 1 if eps is None or eps[i] is None else eps[i]
            lam, lam_inv = _sqrt_pair(m.omega)
            vecs.append((ONE, lam if sign == 1 else -lam))
            duals.append((half * ONE, half * (lam_inv if sign == 1 else -lam_inv)))
    return models, vecs, duals


def trilinear_bruteforce(reps, eps=None, vectors=None) -> CyclotomicNumber:
    """Average of products of matrix coefficients over D^*/F^*.

    ``eps`` selects the uniformizer-eigenvector sign per 2-dimensional
    component (default +1); ``vectors`` may supply explicit test vectors
    instead.  Dual vectors are taken via :func:`dual_vector`.  The result is
    an exact cyclotomic number, zero exactly when no invariant functional
    pairs the chosen lines.
    """
    if not central_product_trivial(reps):
        raise ValueError("product of central characters is not trivial")
    ell = reps[0].ell
    N = ell * ell - 1
    models, vecs, duals = _model_vectors(reps, eps, vectors)

    orders = [2 * N]
    for m, v, d in zip(models, vecs, duals):
        if m.dim == 1:
            orders.append(m.c.order)
        else:
            for c in (*v, *d, m.omega):
                orders.append(c.order)
    M = lcm(*orders)
    if M % 4 == 2:
        M *= 2

    def cy(c):
        return _gr_from_cyclo(c, M)

    # pre-convert per-representation constants once (denominator, int dict);
    # character values on the unit group are embedded directly as monomials
    # x^{e k M/N}.  The vector scale applies to both branches; the central
    # scale only to the uniformizer branch.
    step = M // N
    consts = []
    den0 = den1 = 1
    for m, v, d in zip(models, vecs, duals):
        if m.dim == 1:
            dc, c = cy(m.c)
            consts.append((1, c))
            den1 *= dc
        else:
            dv0, v0 = cy(v[0])
            dv1, v1 = cy(v[1])
            dd0, d0 = cy(d[0])
            dd1, d1 = cy(d[1])
            dom, om = cy(m.omega)
            mv = lcm(dv0, dv1)
            md = lcm(dd0, dd1)
            v0 = {k: x * (mv // dv0) for k, x in v0.items()}
            v1 = {k: x * (mv // dv1) for k, x in v1.items()}
            d0 = {k: x * (md // dd0) for k, x in d0.items()}
            d1 = {k: x * (md // dd1) for k, x in d1.items()}
            consts.append((2, v0, v1, d0, d1, om, m.e))
            den0 *= mv * md
            den1 *= mv * md * dom

    totals = [{}, {}]
    one = {0: 1}
    for k in range(N):
        for branch in (0, 1):
            prod = one
            for c in consts:
                if c[0] == 1:
                    if not branch:
                        continue
                    coeff = c[1]
                else:
                    _, v0, v1, d0, d1, om, e = c
                    p0 = e * k % N * step
                    p1 = e * ell * k % N * step
                    w0 = {(i + p0) % M: x for i, x in v0.items()}
                    w1 = {(i + p1) % M: x for i, x in v1.items()}
                    if branch:
                        w0, w1 = w1, _gr_mul(om, w0, M)
                    coeff = _gr_add(_gr_mul(w0, d0, M), _gr_mul(w1, d1, M))
                prod = _gr_mul(prod, coeff, M)
                if not prod:
                    break
            totals[branch] = _gr_add(totals[branch], prod)
    result = _gr_to_cyclo(totals[0], M) * Fraction(1, den0) + \
        _gr_to_cyclo(totals[1], M) * Fraction(1, den1)
    return result * Fraction(1, N)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _trivial_pattern_count(ell: int, exponents: tuple) -> int:
    """Number of Frobenius-twist patterns making the product character
    of F_{l^2}^* trivial; always 0 or 2 for regular exponents."""
    N = ell * ell - 1
    count = 0
    k = len(exponents)
    for mask in range(2 ** k):
        s = sum(e * (ell if (mask >> i) & 1 else 1) for i, e in enumerate(exponents))
        if s % N == 0:
            count += 1
    return count


def trilinear_closed_form(reps, eps=None) -> CyclotomicNumber:
    """Closed evaluation of the trilinear average on eigenvector lines.

    Writes I = (N0 / 2^t) (1 + t1 t2 t3) where t is the number of
    2-dimensional components, t_i is the uniformizer eigenvalue eps_i*lam_i
    (or the character value c_i for 1-dimensional components) and N0 counts
    the Frobenius patterns on which the product of unit characters is
    trivial.  Matches :func:`trilinear_bruteforce` on eigenvectors.
    """
    if not central_product_trivial(reps):
        raise ValueError("product of central characters is not trivial")
    ell = reps[0].ell
    exps = [r.e for r in reps if isinstance(r, ConductorTwoRep)]
    t = len(exps)
    if t == 0:
        scale = Fraction(1)
    else:
        n0 = _trivial_pattern_count(ell, tuple(exps))
        if n0 == 0:
            return ZERO
        scale = Fraction(n0, 2 ** t)
    prod = ONE
    for i, r in enumerate(reps):
        if isinstance(r, ConductorOneRep):
            prod = prod * r.c
        else:
            sign = 1 if eps is None or eps[i] is None else eps[i]
            lam = _sqrt_pair(r.omega_pi)[0]
            prod = prod * (lam if sign == 1 else -lam)
    return (ONE + prod) * scale


def regular_exponents(ell: int):
    """All regular exponents mod l^2 - 1 (character differs from its
    Frobenius twist)."""
    N = ell * ell - 1
    return [e for e in range(N) if (ell - 1) * e % N]


def _root_of_unity_choices():
    out = []
    for n in (1, 2, 3, 4, 8):
        for k in range(n):
            from math import gcd
            if gcd(k, n) == 1 or k == 0:
                out.append(CyclotomicNumber.zeta(n, k))
    return out


def random_discrete_triple(ell: int, case: int, rng):
    """A random triple of local components with trivial central product.

    case 1: three Steinberg twists; case 2: one twist plus two conductor-2
    components; case 3: three conductor-2 components.
    """
    roots = _root_of_unity_choices()
    if case == 1:
        c1, c2 = rng.choice(roots), rng.choice(roots)
        c3 = (c1 * c2).inverse() * rng.choice([1, -1])
        return (ConductorOneRep(ell, c1), ConductorOneRep(ell, c2),
                ConductorOneRep(ell, c3))
    regs = regular_exponents(ell)
    if case == 2:
        while True:
            e1 = rng.choice(regs)
            e2 = rng.choice([e for e in regs if (e1 + e) % (ell - 1) == 0])
            w1, w2 = rng.choice(roots), rng.choice(roots)
            c3 = fixed_square_root((w1 * w2).inverse()) * rng.choice([1, -1])
            return (ConductorTwoRep(ell, e1, w1), ConductorTwoRep(ell, e2, w2),
                    ConductorOneRep(ell, c3))
    if case == 3:
        e1, e2 = rng.choice(regs), rng.choice(regs)
        opts = [e for e in regs if (e1 + e2 + e) % (ell - 1) == 0]
        e3 = rng.choice(opts)
        w1, w2 = rng.choice(roots), rng.choice(roots)
        w3 = (w1 * w2).inverse()
        return (ConductorTwoRep(ell, e1, w1), ConductorTwoRep(ell, e2, w2),
                ConductorTwoRep(ell, e3, w3))
    raise ValueError(f"unknown case {case}")


def trilinear_nonvanishing(reps) -> bool:
    """Whether some choice of eigenvector signs gives a nonzero trilinear
    average; by the dichotomy this happens exactly when the sign is -1."""
    case = triple_case(reps)
    two_dim = [i for i, r in enumerate(reps) if isinstance(r, ConductorTwoRep)]
    if not two_dim:
        return not trilinear_closed_form(reps).is_zero()
    for mask in range(2 ** len(two_dim)):
        eps = [None] * 3
        for b, i in enumerate(two_dim):
            eps[i] = 1 if (mask >> b) & 1 else -1
        if not trilinear_closed_form(reps, eps).is_zero():
            return True
    return False
