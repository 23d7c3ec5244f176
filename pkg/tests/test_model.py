from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lamebands.elliptic import complete_K
from lamebands.model import (
    PotentialParams,
    classify,
    gap_bounds,
    ince_reduce,
    parse_rational,
    potential_value,
    q_roots,
    qstar_roots,
)

# mpmath.ellipfun at 30 digits: 12 m sn^2 + 2 m cd^2 at x = 0.5, m = 0.9
V_REF = 4.0755711264452277128


def test_parse_rational():
    assert parse_rational("7/2") == F(7, 2)
    assert parse_rational(" 3 ") == 3
    assert parse_rational(0.5) == F(1, 2)
    with pytest.raises(ValueError):
        parse_rational("seven")
    with pytest.raises(ValueError):
        parse_rational(float("inf"))


def test_params_derived_fields():
    p = PotentialParams("7/2", "1/2", 0.5)
    assert (p.a, p.b) == (F(7, 2), F(1, 2))
    assert (p.p, p.q) == (F(63, 4), F(3, 4))
    assert p.period == pytest.approx(2 * complete_K(0.5))
    assert "a=7/2" in str(p)


def test_equal_strengths_period_is_K():
    p = PotentialParams(2, 2, 0.3)
    assert p.equal_strengths
    assert p.period == pytest.approx(complete_K(0.3))
    # b -> -b-1 gives the same q
    assert PotentialParams(2, -3, 0.3).equal_strengths


@pytest.mark.parametrize("a,b,m", [(1, 2, 0.5), ("1/2", "3", 0.2), (3, 2, 1.0), (3, 2, -0.1)])
def test_invalid_params(a, b, m):
    with pytest.raises(ValueError):
        PotentialParams(a, b, m)


def test_potential_values():
    x = np.linspace(-3, 3, 7)
    np.testing.assert_array_equal(potential_value(x, PotentialParams(3, 2, 0.0)), 0.0)
    for m in (0.2, 0.8):
        p = PotentialParams(3, 2, m)
        assert potential_value(complete_K(m), p) == pytest.approx(12 * m, rel=1e-12)
        assert potential_value(0.0, p) == pytest.approx(6 * m)
    assert potential_value(0.5, PotentialParams(3, 1, 0.9)) == pytest.approx(V_REF, abs=1e-12)


def test_translation_by_K_swaps_strengths():
    m = 0.6
    x = np.linspace(0, 3, 31)
    k = complete_K(m)
    # V_{p,q}(x + K) = V_{q,p}(x); check with p = 12, q = 6 via the defining formula
    from lamebands.elliptic import jacobi

    sn, cn, dn = jacobi(x, m)
    swapped = 6 * m * sn**2 + 12 * m * (cn / dn) ** 2
    np.testing.assert_allclose(potential_value(x + k, PotentialParams(3, 2, m)), swapped, rtol=1e-12)


def test_ince_coefficients_exact():
    c = ince_reduce(PotentialParams(3, 2, 0.5), m=F(1, 2))
    assert c.A == F(1, 3)
    assert c.B == 1
    assert c.D == F(10, 3)
    assert c.C(F(0)) == F(-10, 3) and c.C_slope == F(2, 3)
    assert c.energy_shift == 2
    assert c.substitution["lambda"] == "E - m*b**2"


def test_ince_special_values():
    free = ince_reduce(PotentialParams(0, 0, 0.4), m=F(2, 5))
    assert free.B == -F(2, 5) / F(8, 5) and free.D == 0
    flat = ince_reduce(PotentialParams(3, 2, 0.0), m=F(0))
    assert flat.A == flat.B == flat.D == 0
    assert flat.C(F(7)) == F(7, 2)
    floats = ince_reduce(PotentialParams(3, 2, 0.5))
    assert floats.D == pytest.approx(10 / 3)


def test_q_roots():
    assert q_roots(3, 2) == (F(5, 2), -1)
    assert qstar_roots(3, 2) == (3, F(-1, 2))
    assert q_roots("3/2", "1/2") == (1, -1)
    assert qstar_roots("3/2", "1/2") == (F(3, 2), F(-1, 2))
    for a in range(5):
        assert qstar_roots(a, a)[1] == 0


def test_integrality_dichotomy():
    for a in range(11):
        for b in range(a + 1):
            mu1, mu2 = q_roots(a, b)
            s1, s2 = qstar_roots(a, b)
            first = mu1.denominator == 1 and s2.denominator == 1
            second = mu2.denominator == 1 and s1.denominator == 1
            assert first != second, (a, b)


@given(st.fractions(-20, 20, max_denominator=50))
def test_q_invariant_under_reflection(b):
    assert b * (b + 1) == (-b - 1) * (-b)
    assert PotentialParams(30, b, 0.1).q == PotentialParams(30, -b - 1, 0.1).q


@pytest.mark.parametrize(
    "a,b,two_k,four_k",
    [(3, 2, 1, 3), (3, 1, 3, 1), ("3/2", "1/2", 1, None)],
)
def test_gap_bounds_examples(a, b, two_k, four_k):
    g = gap_bounds(a, b)
    assert (g.max_gaps_2k, g.max_gaps_4k) == (two_k, four_k)


def test_gap_bounds_raw_and_sharpened():
    g = gap_bounds(3, 2)
    assert g.raw_4k == 4 and g.max_gaps_4k == 3
    assert gap_bounds("3/2", "1/2").raw_2k == 2


def test_integer_pairs_have_finite_bounds():
    for a in range(8):
        for b in range(a + 1):
            assert gap_bounds(a, b).total is not None


def test_generic_is_flagged():
    g = gap_bounds("3/10", "1/5")
    assert g.total is None and g.open_question
    assert classify("3/10", "1/5").variant == "Generic"


@pytest.mark.parametrize(
    "a,b,variant",
    [
        (3, 2, "BothInteger"),
        ("3/2", "1/2", "BothHalfInteger"),
        ("7/2", 0, "MixedHalfIntegerA_IntegerB"),
        ("1/3", "4/3", "SumOrDiffInteger"),
        ("1/3", "1/5", "Generic"),
    ],
)
def test_classify(a, b, variant):
    assert classify(a, b).variant == variant


def test_classify_midband_count():
    assert classify("7/2", 0).midband_count == 4
    assert classify(3, 2).a_minus_b_odd is True
