"""Exact univariate polynomials over Q and rational functions in Q(m).

Poly is used for two variables in this package: the elliptic parameter m
(coefficients of basis functions and matrix entries) and the spectral
variable (characteristic polynomials over Fractions).  UPoly holds a
polynomial whose coefficients are RatFunc, i.e. an element of Q(m)[x].
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Sequence

__all__ = ["Poly", "RatFunc", "UPoly", "M"]


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class Poly:
    """Dense polynomial with Fraction coefficients in ascending order."""

    __slots__ = ("c", "_hash")

    def __init__(self, coeffs: Iterable = ()):
        c = [_frac(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.c = tuple(c)
        self._hash = None

    @classmethod
    def const(cls, x) -> "Poly":
        return cls((x,))

    @classmethod
    def monomial(cls, degree: int, coeff=1) -> "Poly":
        return cls([0] * degree + [coeff])

    # --- basic properties
    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def is_const(self) -> bool:
        return len(self.c) <= 1

    @property
    def lead(self) -> Fraction:
        return self.c[-1] if self.c else Fraction(0)

    def coeff(self, i: int) -> Fraction:
        return self.c[i] if 0 <= i < len(self.c) else Fraction(0)

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.c == other.c
        if isinstance(other, (int, Fraction)):
            return self.c == Poly.const(other).c
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.c)
        return self._hash

    def __repr__(self):
        return f"Poly({[str(x) for x in self.c]})"

    def __str__(self):
        return self.pretty("m")

    def pretty(self, var="m") -> str:
        if not self.c:
            return "0"
        parts = []
        for i, x in enumerate(self.c):
            if x == 0:
                continue
            mon = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
            if mon and abs(x) == 1:
                term = ("-" if x < 0 else "") + mon
            else:
                term = str(x) + (f"*{mon}" if mon else "")
            parts.append(term)
        return " + ".join(parts).replace("+ -", "- ")

    # --- arithmetic
    @staticmethod
    def _coerce(other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(other)
        raise TypeError(f"cannot combine Poly with {type(other).__name__}")

    def __add__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        n = max(len(self.c), len(o.c))
        return Poly(self.coeff(i) + o.coeff(i) for i in range(n))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-x for x in self.c)

    def __sub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly(x * other for x in self.c) if other else Poly()
        if not isinstance(other, Poly):
            return NotImplemented
        if not self.c or not other.c:
            return Poly()
        out = [Fraction(0)] * (len(self.c) + len(other.c) - 1)
        for i, x in enumerate(self.c):
            if x:
                for j, y in enumerate(other.c):
                    out[i + j] += x * y
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if not other.c:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        dq = other.degree
        lead = other.lead
        if len(rem) - 1 < dq:
            return Poly(), self
        quo = [Fraction(0)] * (len(rem) - dq)
        for i in range(len(rem) - 1, dq - 1, -1):
            f = rem[i] / lead
            if f:
                quo[i - dq] = f
                for j, y in enumerate(other.c):
                    rem[i - dq + j] -= f * y
        return Poly(quo), Poly(rem[:dq])

    def __floordiv__(self, other):
        return self.divmod(self._coerce(other))[0]

    def __mod__(self, other):
        return self.divmod(self._coerce(other))[1]

    def monic(self) -> "Poly":
        return self * (1 / self.lead) if self.c else self

    def derivative(self) -> "Poly":
        return Poly(i * x for i, x in enumerate(self.c) if i)

    def __call__(self, x):
        if isinstance(x, (int, Fraction)):
            acc = Fraction(0)
            for coef in reversed(self.c):
                acc = acc * x + coef
            return acc
        acc = 0.0
        for coef in reversed(self.c):
            acc = acc * x + float(coef)
        return acc

    def compose(self, inner: "Poly") -> "Poly":
        out = Poly()
        for coef in reversed(self.c):
            out = out * inner + coef
        return out

    def content_primitive(self) -> tuple[Fraction, "Poly"]:
        """Split into a rational content and a primitive integer polynomial with positive lead."""
        if not self.c:
            return Fraction(0), self
        den = lcm(*(x.denominator for x in self.c))
        nums = [int(x * den) for x in self.c]
        g = reduce(gcd, nums)
        if nums[-1] < 0:
            g = -g
        return Fraction(g, den), Poly(Fraction(n, g) for n in nums)


def poly_gcd(p: Poly, q: Poly) -> Poly:
    while q.c:
        p, q = q, p.divmod(q)[1]
    return p.monic()


M = Poly((0, 1))


class RatFunc:
    """Element of Q(m), stored as num/den with den monic and gcd(num, den) = 1."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, _normalized=False):
        num = num if isinstance(num, Poly) else Poly.const(num)
        den = Poly.const(1) if den is None else (den if isinstance(den, Poly) else Poly.const(den))
        if not _normalized:
            if den.is_zero():
                raise ZeroDivisionError("zero denominator")
            if num.is_zero():
                den = Poly.const(1)
            elif not den.is_const():
                g = poly_gcd(num, den)
                if not g.is_const():
                    num = num // g
                    den = den // g
            lead = den.lead
            if lead != 1:
                num = num * (1 / lead)
                den = den * (1 / lead)
        self.num = num
        self.den = den

    @staticmethod
    def of(x) -> "RatFunc":
        return x if isinstance(x, RatFunc) else RatFunc(x)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.is_const()

    def __bool__(self):
        return not self.num.is_zero()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            other = RatFunc(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        if self.is_poly():
            return f"RatFunc({self.num})"
        return f"RatFunc(({self.num})/({self.den}))"

    def __str__(self):
        if self.is_poly():
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __add__(self, other):
        o = RatFunc.of(other) if not isinstance(other, RatFunc) else other
        if self.den == o.den:
            return RatFunc(self.num + o.num, self.den)
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, _normalized=True)

    def __sub__(self, other):
        return self + (-RatFunc.of(other))

    def __rsub__(self, other):
        return RatFunc.of(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return RatFunc(self.num * other, self.den, _normalized=bool(other))
        o = RatFunc.of(other)
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other):
        return self * RatFunc.of(other).inverse()

    def __rtruediv__(self, other):
        return RatFunc.of(other) * self.inverse()

    def __call__(self, x):
        return self.num(x) / self.den(x)

    def to_json(self) -> dict:
        return {"num": [str(x) for x in self.num.c], "den": [str(x) for x in self.den.c]}

    @classmethod
    def from_json(cls, data: dict) -> "RatFunc":
        return cls(Poly(Fraction(s) for s in data["num"]), Poly(Fraction(s) for s in data["den"]))


class UPoly:
    """Polynomial in one variable with RatFunc coefficients (ascending)."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Sequence):
        c = [RatFunc.of(x) for x in coeffs]
        while c and c[-1].is_zero():
            c.pop()
        self.c = tuple(c)

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def __eq__(self, other):
        return isinstance(other, UPoly) and self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def __repr__(self):
        return f"UPoly([{', '.join(str(x) for x in self.c)}])"

    def __add__(self, other: "UPoly"):
        n = max(len(self.c), len(other.c))
        zero = RatFunc(0)
        return UPoly([(self.c[i] if i < len(self.c) else zero) + (other.c[i] if i < len(other.c) else zero) for i in range(n)])

    def __mul__(self, other: "UPoly"):
        if not self.c or not other.c:
            return UPoly([])
        out = [RatFunc(0)] * (len(self.c) + len(other.c) - 1)
        for i, x in enumerate(self.c):
            for j, y in enumerate(other.c):
                out[i + j] = out[i + j] + x * y
        return UPoly(out)

    def shift(self, offset) -> "UPoly":
        """Return P(x - offset): substitutes lam = E - offset to get a polynomial in E."""
        lin = UPoly([-RatFunc.of(offset), RatFunc(1)])
        out = UPoly([])
        for coef in reversed(self.c):
            out = out * lin + UPoly([coef])
        return out

    def monic(self) -> "UPoly":
        lead = self.c[-1]
        return UPoly([x / lead for x in self.c])

    def divmod(self, other: "UPoly") -> tuple["UPoly", "UPoly"]:
        rem = list(self.c)
        dq = other.degree
        lead = other.c[-1]
        if len(rem) - 1 < dq:
            return UPoly([]), self
        quo = [RatFunc(0)] * (len(rem) - dq)
        for i in range(len(rem) - 1, dq - 1, -1):
            f = rem[i] / lead
            if not f.is_zero():
                quo[i - dq] = f
                for j, y in enumerate(other.c):
                    rem[i - dq + j] = rem[i - dq + j] - f * y
        return UPoly(quo), UPoly(rem[:dq])

    def divides(self, other: "UPoly") -> bool:
        """True if self divides other exactly in Q(m)[x]."""
        return not other.divmod(self)[1].c

    def at(self, m) -> Poly:
        """Specialize m (exact Fraction) to get a Poly over Q in the main variable."""
        m = _frac(m)
        return Poly(x(m) for x in self.c)

    def to_json(self) -> list:
        return [x.to_json() for x in self.c]

    @classmethod
    def from_json(cls, data: list) -> "UPoly":
        return cls([RatFunc.from_json(x) for x in data])
