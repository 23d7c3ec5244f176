import json
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from lamebands.elliptic import complete_K, jacobi, sqrt_dn_plus_cn
from lamebands.model import PotentialParams
from lamebands.qes import (
    BandEdge,
    ComplexRootsError,
    EllipticCombination,
    EllipticMonomial,
    MidBand,
    NotClosedError,
    Poly,
    QesEigenproblem,
    RatFunc,
    UPoly,
    apply_operator,
    detect_closure,
    qes_energies,
    real_roots,
    residual,
    search_closures,
    wavefunction,
)
from lamebands.qes.linalg import ModPField, RatField, charpoly, nullspace, rref

GOLDEN = Path(__file__).parent / "golden"

S, C, D, W, m, lam, E = sp.symbols("S C D W m lam E")
Z0, Z1, Z2, sgn, a_, b_ = sp.symbols("Z0 Z1 Z2 s a b")
JACOBI_IDEAL = sp.groebner([C**2 + S**2 - 1, D**2 + m * S**2 - 1, sgn**2 - 1], C, D, sgn, S, m, a_, b_, E, Z0, Z1, Z2, order="lex")


def to_sympy_poly(p: Poly, var=m):
    return sum(sp.Rational(c.numerator, c.denominator) * var**i for i, c in enumerate(p.c))


def to_sympy_upoly(u: UPoly, var):
    return sp.expand(sum(sp.cancel(to_sympy_poly(c.num) / to_sympy_poly(c.den)) * var**i for i, c in enumerate(u.c)))


def to_sympy_combination(f: EllipticCombination):
    return sum(to_sympy_poly(c) * S**k.sn_power * C**k.eps_c * D**k.eps_d for k, c in f.terms.items())


def d_dx(expr, w_prime=0):
    return (
        sp.diff(expr, S) * C * D
        - sp.diff(expr, C) * S * D
        - sp.diff(expr, D) * m * S * C
        + sp.diff(expr, W) * w_prime
        + sp.diff(expr, Z0) * Z1
        + sp.diff(expr, Z1) * Z2
    )


def reduce_zero(expr) -> bool:
    num = sp.expand(sp.numer(sp.together(expr)))
    return JACOBI_IDEAL.reduce(num)[1] == 0


# ------------------------------------------------------------------ algebra

small_polys = st.lists(st.fractions(-5, 5, max_denominator=7), min_size=0, max_size=5).map(Poly)


@given(small_polys, small_polys)
def test_poly_ring_matches_sympy(p, q):
    x = sp.Symbol("x")
    assert sp.expand(to_sympy_poly(p * q, x) - to_sympy_poly(p, x) * to_sympy_poly(q, x)) == 0
    assert sp.expand(to_sympy_poly(p - q, x) - (to_sympy_poly(p, x) - to_sympy_poly(q, x))) == 0


@given(small_polys, small_polys)
def test_poly_divmod(p, q):
    if q.is_zero():
        return
    quo, rem = p.divmod(q)
    assert quo * q + rem == p
    assert rem.is_zero() or rem.degree < q.degree


def test_ratfunc_normal_form():
    r = RatFunc(Poly((-1, 0, 1)), Poly((2, 2)))  # (m^2 - 1) / (2m + 2) = (m - 1)/2
    assert r == RatFunc(Poly((F(-1, 2), F(1, 2))))
    assert r.is_poly()
    assert (r / r) == RatFunc(1)
    with pytest.raises(ZeroDivisionError):
        RatFunc(1, 0)


def test_upoly_shift():
    # lam^2 - m with lam = E - (1 + m)
    u = UPoly([RatFunc(Poly((0, -1))), 0, 1]).shift(Poly((1, 1)))
    assert sp.expand(to_sympy_upoly(u, E) - ((E - 1 - m) ** 2 - m)) == 0


# ------------------------------------------------------------- linear algebra

rat_matrices = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.fractions(-4, 4, max_denominator=5), min_size=n, max_size=n), min_size=n, max_size=n)
)


@given(rat_matrices)
def test_charpoly_matches_sympy(rows):
    got = charpoly([[RatFunc(x) for x in r] for r in rows], RatField)
    x = sp.Symbol("x")
    ref = sp.Matrix([[sp.Rational(v.numerator, v.denominator) for v in r] for r in rows]).charpoly(x).all_coeffs()[::-1]
    assert [c.num.coeff(0) for c in got] == [F(int(sp.numer(v)), int(sp.denom(v))) for v in ref]


@given(rat_matrices)
def test_nullspace(rows):
    field = RatField
    conv = [[RatFunc(x) for x in r] for r in rows]
    ker = nullspace(conv, len(rows[0]), field)
    red, _ = rref(conv, field)
    assert len(ker) + len(red) == len(rows[0])
    for v in ker:
        for r in conv:
            assert sum((x * y for x, y in zip(r, v)), RatFunc(0)).is_zero()


def test_modp_field_specialises_m():
    f = ModPField()
    assert f.convert(Poly((1, 1))) == (1 + f.m_residue) % f.p
    assert f.mul(f.inv(7), 7) == 1


# ---------------------------------------------------------------- sturm

@given(st.lists(st.integers(-6, 6), min_size=1, max_size=6))
def test_real_roots_recovers_integer_roots(roots):
    p = Poly((1,))
    for r in roots:
        p = p * Poly((-r, 1))
    assert real_roots(p) == pytest.approx(sorted(roots), abs=1e-12)


@given(st.lists(st.fractions(-3, 3, max_denominator=9), min_size=2, max_size=7))
def test_real_roots_vs_numpy(coeffs):
    p = Poly(coeffs)
    if p.degree < 1:
        return
    got = real_roots(p, allow_complex=True)
    ref = np.roots([float(c) for c in reversed(p.c)])
    real_ref = sorted(r.real for r in ref if abs(r.imag) < 1e-7)
    if len(real_ref) == len(got):
        assert got == pytest.approx(real_ref, abs=1e-6)


def test_real_roots_rejects_complex():
    with pytest.raises(ComplexRootsError):
        real_roots(Poly((1, 0, 1)))
    assert real_roots(Poly((1, 0, 1)), allow_complex=True) == []


def test_real_roots_close_pair():
    eps = F(1, 10**12)
    p = Poly((-1, 1)) * Poly((-1 - eps, 1))
    lo, hi = real_roots(p)
    assert lo == 1.0 and hi == pytest.approx(1 + 1e-12, abs=1e-16)


# ------------------------------------------------------------- combinations

def test_canonical_reduction():
    sq = EllipticCombination.monomial(cn=1) * EllipticCombination.monomial(cn=1)
    assert sq == EllipticCombination.monomial() - EllipticCombination.monomial(sn=2)
    dd = EllipticCombination.monomial(dn=1) * EllipticCombination.monomial(dn=1)
    assert dd == EllipticCombination.monomial() - EllipticCombination.monomial(sn=2, coeff=Poly((0, 1)))
    assert not (sq - sq)
    with pytest.raises(ValueError):
        EllipticMonomial.from_powers(2, cn=2)


monomials = st.tuples(st.integers(0, 5), st.integers(0, 1), st.integers(0, 1))


@given(monomials, st.floats(0.05, 0.95), st.floats(0.1, 5.0))
def test_derivative_against_finite_difference(powers, mv, x):
    f = EllipticCombination.monomial(*powers)
    h = 1e-5
    fd = (f(x + h, mv) - f(x - h, mv)) / (2 * h)
    assert f.derivative()(x, mv) == pytest.approx(fd, abs=1e-6)


@given(monomials, monomials, st.floats(0.0, 0.95), st.floats(-5.0, 5.0))
def test_product_is_pointwise(u, v, mv, x):
    fu, fv = EllipticCombination.monomial(*u), EllipticCombination.monomial(*v)
    assert (fu * fv)(x, mv) == pytest.approx(fu(x, mv) * fv(x, mv), abs=1e-12)


def test_combination_json_roundtrip():
    f = EllipticCombination.monomial(sn=3, cn=1, coeff=Poly((F(1, 3), 2))) + EllipticCombination.monomial(dn=1)
    assert EllipticCombination.from_json(f.to_json()) == f


# ------------------------------------------------------------- derivations

def test_band_edge_operator_derivation():
    # psi = dn^-beta f turns -psi'' + V psi = E psi into the stated f equation
    pref = D ** (-b_)
    psi = pref * Z0
    V = a_ * (a_ + 1) * m * S**2 + b_ * (b_ + 1) * m * C**2 / D**2
    lhs = sp.expand(sp.powsimp(sp.expand((d_dx(d_dx(psi)) - (V - E) * psi) / pref)))
    lam_ = E - m * b_**2
    stated = Z2 + 2 * b_ * m * S * C / D * Z1 + (lam_ - (a_ + b_) * (a_ + 1 - b_) * m * S**2) * Z0
    assert reduce_zero(lhs - stated)


def test_midband_operator_derivation():
    # psi = dn^-b sqrt(dn + s cn) z, multiplied through by sn dn
    w_prime = (-m * S * C - sgn * S * D) / (2 * W)
    pref = D ** (-b_) * W
    psi = pref * Z0
    V = a_ * (a_ + 1) * m * S**2 + b_ * (b_ + 1) * m * C**2 / D**2
    lhs = sp.expand(sp.powsimp(sp.expand((d_dx(d_dx(psi, w_prime), w_prime) - (V - E) * psi) / pref)))
    lhs = lhs.subs(W, sp.sqrt(D + sgn * C))
    r = (a_ + 1 - b_) * (a_ + b_) - sp.Rational(3, 4)
    lam1 = E - (1 + m) / 4 - m * b_**2
    stated = (
        S * D * Z2
        + (C * D**2 - sgn * D + 2 * b_ * m * S**2 * C) * Z1
        + (-r * m * S**3 * D - sgn * b_ * m * S * C + b_ * m * S * C**2 * D + lam1 * S * D) * Z0
    )
    assert reduce_zero(lhs - stated / (S * D))


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("powers", [(0, 0, 0), (2, 1, 0), (3, 0, 1), (1, 1, 1)])
def test_apply_operator_matches_derivation(powers, sign):
    a, b = F(5, 2), F(1)
    z = EllipticCombination.monomial(*powers)
    img = apply_operator(MidBand(a, b, sign), z)
    zs = to_sympy_combination(z)
    z1 = d_dx(zs)
    z2 = d_dx(z1)
    r = (a + 1 - b) * (a + b) - F(3, 4)
    r = sp.Rational(r.numerator, r.denominator)
    bb = sp.Rational(b.numerator, b.denominator)
    stated = (
        S * D * z2
        + (C * D**2 - sign * D + 2 * bb * m * S**2 * C) * z1
        + (-r * m * S**3 * D - sign * bb * m * S * C + bb * m * S * C**2 * D) * zs
    )
    assert reduce_zero(to_sympy_combination(img.free) - stated)
    assert reduce_zero(to_sympy_combination(img.weight) - S * D * zs)


@pytest.mark.parametrize("powers", [(0, 0, 0), (2, 1, 0), (3, 0, 0), (1, 1, 0)])
def test_apply_band_edge_matches_derivation(powers):
    a, b = F(3), F(2)
    f = EllipticCombination.monomial(*powers)
    img = apply_operator(BandEdge(a, b), f)
    fs = to_sympy_combination(f)
    stated = d_dx(d_dx(fs)) + 4 * m * S * C / D * d_dx(fs) - 10 * m * S**2 * fs
    assert reduce_zero(to_sympy_combination(img.free) - stated)
    assert img.weight == f


def test_apply_operator_examples():
    img = apply_operator(BandEdge(F(1, 2), 0), EllipticCombination.monomial())
    assert img.free == EllipticCombination.monomial(sn=2, coeff=Poly((0, F(-3, 4))))
    mid = apply_operator(MidBand(F(1, 2), 0), EllipticCombination.monomial())
    assert not mid.free  # r = 0: z = 1 closes with lam1 = 0
    assert mid.weight == EllipticCombination.monomial(sn=1, dn=1)
    with pytest.raises(ValueError):
        apply_operator(BandEdge(3, 2), EllipticCombination.monomial(dn=1))


def test_operator_validation():
    with pytest.raises(ValueError):
        BandEdge(1, 0, dn_branch=2)
    with pytest.raises(ValueError):
        MidBand(1, 0, sign=0)


# ------------------------------------------------------------------ closure

def test_ground_state_closure():
    prob = detect_closure(BandEdge(3, 2), (0, 0, 1))
    assert prob.size == 1 and prob.period_tag == "2K"
    for mv in (0.1, 0.5, 0.9):
        assert qes_energies(prob, mv) == pytest.approx([9 * mv], abs=1e-14)


def test_cn_cubic_is_printed_cubic():
    prob = detect_closure(BandEdge(3, 2), (0, 1, 0))
    assert prob.size == 3 and prob.period_tag == "4K"
    printed = lam**3 - 4 * (8 - m) * lam**2 + 48 * (4 + m) * lam - 576 * m
    in_e = sp.expand(printed.subs(lam, E - 1 - 4 * m))
    assert sp.expand(to_sympy_upoly(prob.energy_charpoly(), E) - in_e) == 0
    assert qes_energies(prob, 0.0) == pytest.approx([1, 9, 25], abs=1e-12)


def test_midband_three_halves():
    prob = detect_closure(MidBand(F(3, 2), 0), ((0, 0, 1), (0, 1, 0)))
    assert prob.size == 2 and prob.period_tag == "8K"
    for mv in (0.1, 0.5, 0.9):
        root = np.sqrt(1 - mv + mv * mv)
        assert qes_energies(prob, mv) == pytest.approx([1.25 * (1 + mv) - root, 1.25 * (1 + mv) + root], abs=1e-12)


def test_non_qes_parameters_do_not_close():
    op = BandEdge(F(355, 113), 0)
    for sector in [(0, 0, 0), (0, 1, 0)]:
        with pytest.raises(NotClosedError):
            detect_closure(op, sector, max_k=6)
    with pytest.raises(ValueError):
        detect_closure(op, (0, 0, 0), max_k=65)


def test_closure_certificates():
    for op in (BandEdge(3, 2), BandEdge(3, 1), BandEdge(F(5, 2), F(1, 2)), MidBand(F(5, 2), 0), MidBand(F(1, 2), 1, -1)):
        found = search_closures(op, max_k=6)
        assert found
        for prob in found:
            assert prob.verify_closure()


def test_integer_in_band_degenerate_sector_not_closed():
    # (3, 2): the 4K sectors close; in-band degenerate 2K states have no closed form
    op = BandEdge(3, 2)
    with pytest.raises(NotClosedError):
        detect_closure(op, (1, 1, 0), max_k=8)


def test_sign_partners_share_characteristic_polynomial():
    for a, b, fam in [(F(3, 2), 0, ((0, 0, 1), (0, 1, 0))), (F(5, 2), 0, ((0, 0, 0), (0, 1, 1))), (F(1, 2), 1, ((0, 0, 1), (0, 1, 0)))]:
        plus = detect_closure(MidBand(a, b, 1), fam)
        minus = detect_closure(MidBand(a, b, -1), fam)
        assert plus.energy_charpoly() == minus.energy_charpoly()


def test_large_problem_numeric_path():
    prob = detect_closure(BandEdge(16, 0), (0, 0, 0))
    assert prob.size > 8
    exact = real_roots(prob.charpoly().at(F(1, 2)))
    shift = prob.energy_shift(0.5)
    assert qes_energies(prob, 0.5) == pytest.approx([x + shift for x in exact], rel=1e-10)


def test_golden_json():
    prob = detect_closure(BandEdge(3, 2), (0, 1, 0))
    golden = json.loads((GOLDEN / "qes_3_2_cn.json").read_text())
    assert json.loads(prob.dumps()) == golden
    back = QesEigenproblem.from_json(golden)
    assert back.charpoly() == prob.charpoly()
    assert back.verify_closure()


# ------------------------------------------------------------ wavefunctions

def test_ground_state_wavefunction_is_dn_cubed():
    prob = detect_closure(BandEdge(3, 2), (0, 0, 1))
    mv = 0.5
    psi = wavefunction(prob, 0, mv)
    x = np.linspace(0, 8 * complete_K(mv), 300)
    np.testing.assert_allclose(psi(x), jacobi(x, mv).dn ** 3, atol=1e-12)
    assert psi.energy == pytest.approx(4.5)


def test_midband_wavefunction_shape():
    prob = detect_closure(MidBand(F(1, 2), 1), ((0, 0, 1), (0, 1, 0)))
    mv = 0.3
    assert qes_energies(prob, mv) == pytest.approx([(9 + mv) / 4])
    psi = wavefunction(prob, 0, mv)
    x = np.linspace(0, 8 * complete_K(mv), 500)
    sn, cn, dn = jacobi(x, mv)
    ref = (1 - 2 * cn / dn) * sqrt_dn_plus_cn(x, mv)
    k = np.argmax(np.abs(ref))
    np.testing.assert_allclose(psi(x), ref / ref[k], atol=1e-10)
    assert np.max(np.abs(psi(x))) == pytest.approx(1.0, abs=1e-3)


def test_partner_is_independent_with_same_energy():
    fam = ((0, 0, 1), (0, 1, 0))
    mv = 0.6
    plus = wavefunction(detect_closure(MidBand(F(1, 2), 1, 1), fam), 0, mv)
    minus = wavefunction(detect_closure(MidBand(F(1, 2), 1, -1), fam), 0, mv)
    assert plus.energy == pytest.approx(minus.energy, abs=1e-14)
    x = np.linspace(0.1, 8 * complete_K(mv), 300)
    sv = np.linalg.svd(np.vstack([plus(x), minus(x)]), compute_uv=False)
    assert sv[1] > 1e-3 * sv[0]


def test_residual_examples():
    params = PotentialParams(3, 2, 0.5)
    prob = detect_closure(BandEdge(3, 2), (0, 0, 1))
    psi = wavefunction(prob, 0, 0.5)
    assert residual(psi, 4.5, params) <= 1e-6
    assert residual(lambda x: jacobi(x, 0.5).dn ** 3, 4.5, params) <= 1e-6
    assert residual(psi, 4.6, params) > 1e-2
    with pytest.raises(ValueError):
        residual(psi, 4.5, params, grid_n=32)


@pytest.mark.parametrize("sector", [(0, 0, 0), (1, 1, 0), (0, 1, 1), (1, 0, 1)])
def test_every_kernel_state_has_small_residual(sector):
    mv = 0.7
    params = PotentialParams(3, 1, mv)
    prob = detect_closure(BandEdge(3, 1), sector, max_k=6)
    for i, e in enumerate(qes_energies(prob, mv)):
        assert residual(wavefunction(prob, i, mv), e, params) <= 1e-6
