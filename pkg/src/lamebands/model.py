"""Associated Lame potential V(x) = p m sn^2 x + q m cn^2 x / dn^2 x.

Parameters a, b are kept as exact rationals so the integer/half-integer
case analysis never depends on floating-point equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Optional

import numpy as np

from .elliptic import check_modulus, complete_K, jacobi

__all__ = [
    "PotentialParams",
    "CaseTag",
    "InceCoefficients",
    "GapBounds",
    "parse_rational",
    "classify",
    "potential_value",
    "ince_reduce",
    "q_roots",
    "qstar_roots",
    "gap_bounds",
]

HALF = Fraction(1, 2)


def parse_rational(value) -> Fraction:
    """Accept ints, Fractions, or strings such as "7/2"; floats only if exactly representable."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"not a finite number: {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {value!r}") from exc
    raise TypeError(f"cannot interpret {value!r} as a rational")


def _is_int(x: Fraction) -> bool:
    return x.denominator == 1


def _is_half_int(x: Fraction) -> bool:
    return x.denominator == 2


@dataclass(frozen=True)
class PotentialParams:
    a: Fraction
    b: Fraction
    m: float

    def __post_init__(self):
        object.__setattr__(self, "a", parse_rational(self.a))
        object.__setattr__(self, "b", parse_rational(self.b))
        object.__setattr__(self, "m", check_modulus(self.m))
        if self.p < self.q:
            raise ValueError(f"need p >= q, got p={self.p} q={self.q}")

    @property
    def p(self) -> Fraction:
        return self.a * (self.a + 1)

    @property
    def q(self) -> Fraction:
        return self.b * (self.b + 1)

    @property
    def equal_strengths(self) -> bool:
        return self.p == self.q

    @cached_property
    def strengths(self) -> tuple[float, float]:
        """(p m, q m) as floats, the coefficients of sn^2 and cd^2."""
        return float(self.p) * self.m, float(self.q) * self.m

    @property
    def K(self) -> float:
        return complete_K(self.m)

    @property
    def period(self) -> float:
        """Fundamental period: 2K, or K when p == q."""
        return self.K if self.equal_strengths else 2.0 * self.K

    def with_m(self, m) -> "PotentialParams":
        return PotentialParams(self.a, self.b, m)

    def __str__(self):
        return f"a={self.a} b={self.b} m={self.m!r}"


@dataclass(frozen=True)
class CaseTag:
    """Arithmetic class of (a, b).

    variant is one of "BothInteger", "BothHalfInteger",
    "MixedHalfIntegerA_IntegerB", "SumOrDiffInteger", "Generic".
    """

    variant: str
    a_minus_b_odd: Optional[bool] = None
    midband_count: Optional[int] = None
    note: str = ""


def classify(a, b) -> CaseTag:
    a, b = parse_rational(a), parse_rational(b)
    diff_odd = None
    if _is_int(a - b):
        diff_odd = (a - b).numerator % 2 == 1
    if _is_int(a) and _is_int(b):
        return CaseTag("BothInteger", a_minus_b_odd=diff_odd)
    if _is_half_int(a) and _is_half_int(b):
        return CaseTag("BothHalfInteger", a_minus_b_odd=diff_odd)
    if _is_half_int(a) and _is_int(b):
        # a = k + 1/2 carries k + 1 mid-band states
        return CaseTag("MixedHalfIntegerA_IntegerB", midband_count=int(a - HALF) + 1)
    if _is_int(a + b) or _is_int(a - b):
        return CaseTag("SumOrDiffInteger", a_minus_b_odd=diff_odd)
    return CaseTag("Generic", note="no gap-count statement available; treated as unbounded")


def potential_value(x, params: PotentialParams):
    s, c, d = jacobi(x, params.m)
    pm, qm = params.strengths
    return pm * s * s + qm * (c / d) ** 2


@dataclass(frozen=True)
class InceCoefficients:
    """Coefficients of Ince's equation after psi = dn^-b y and sn x = sin t.

    C is affine in lambda: C(lam) = C_slope * lam + C_offset, and the
    physical energy is E = lam + energy_shift.
    """

    A: object
    B: object
    D: object
    C_slope: object
    C_offset: object
    energy_shift: object
    substitution: dict = field(default_factory=dict)

    def C(self, lam):
        return self.C_slope * lam + self.C_offset


def ince_reduce(params: PotentialParams, m=None) -> InceCoefficients:
    """Ince coefficients; pass an exact Fraction as m to get exact values."""
    a, b = params.a, params.b
    mm = params.m if m is None else m
    if isinstance(mm, Fraction):
        den = 2 - mm
    else:
        mm = float(mm)
        den = 2.0 - mm
        a, b = float(a), float(b)
    return InceCoefficients(
        A=mm / den,
        B=(2 * b - 1) * mm / den,
        D=(a + 1 - b) * (a + b) * mm / den,
        C_slope=1 / den,
        C_offset=-(a + b) * (a + 1 - b) * mm / den,
        energy_shift=mm * b * b,
        substitution={
            "psi": "dn(x)**(-b) * y(x)",
            "sn(x)": "sin(t)",
            "y(x)": "z(t)",
            "lambda": "E - m*b**2",
        },
    )


def q_roots(a, b) -> tuple[Fraction, Fraction]:
    a, b = parse_rational(a), parse_rational(b)
    return (a + b) / 2, (b - a - 1) / 2


def qstar_roots(a, b) -> tuple[Fraction, Fraction]:
    a, b = parse_rational(a), parse_rational(b)
    return (a + b + 1) / 2, (b - a) / 2


def _root_bound(roots) -> tuple[Optional[int], Optional[int]]:
    """Bounds from the two root criteria: j+1 for the largest nonnegative
    integral root j, and j0+1 for the smallest negative integral root -j0-1."""
    ints = [int(r) for r in roots if _is_int(r)]
    nonneg = [r for r in ints if r >= 0]
    neg = [r for r in ints if r < 0]
    return (max(nonneg) + 1 if nonneg else None, -min(neg) if neg else None)


def _first(*vals):
    for v in vals:
        if v is not None:
            return v
    return None


def _least(*vals):
    vals = [v for v in vals if v is not None]
    return min(vals) if vals else None


@dataclass(frozen=True)
class GapBounds:
    """Upper bounds on the number of gaps of each period; None means unbounded.

    Counts include the semi-infinite gap below the ground state, which is
    of period-2K type.  raw_* use the root criterion as first stated for the
    given b (nonnegative root if any, else negative root); max_gaps_* take
    the tightest of both criteria for both b and -b-1, which leave q unchanged.
    """

    raw_2k: Optional[int]
    raw_4k: Optional[int]
    max_gaps_2k: Optional[int]
    max_gaps_4k: Optional[int]
    open_question: bool = False

    @property
    def total(self) -> Optional[int]:
        if self.max_gaps_2k is None or self.max_gaps_4k is None:
            return None
        return self.max_gaps_2k + self.max_gaps_4k


def gap_bounds(a, b) -> GapBounds:
    a, b = parse_rational(a), parse_rational(b)
    raw = []
    sharp = []
    for roots_of in (q_roots, qstar_roots):
        pos, neg = _root_bound(roots_of(a, b))
        raw.append(_first(pos, neg))
        alt_pos, alt_neg = _root_bound(roots_of(a, -b - 1))
        sharp.append(_least(pos, neg, alt_pos, alt_neg))
    generic = classify(a, b).variant == "Generic"
    return GapBounds(raw[0], raw[1], sharp[0], sharp[1], open_question=generic)
