"""Finite combinations of sn^j cn^e dn^f with e, f in {0, 1} over Q[m].

Higher powers of cn and dn are always rewritten with cn^2 = 1 - sn^2 and
dn^2 = 1 - m sn^2, so every element has a unique canonical form.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from ..elliptic import jacobi
from .algebra import M, Poly

__all__ = ["EllipticMonomial", "EllipticCombination", "SN", "CN", "DN", "ONE"]


class EllipticMonomial(NamedTuple):
    """sn^(2k + eps_s) * cn^eps_c * dn^eps_d."""

    k: int
    eps_s: int
    eps_c: int
    eps_d: int

    @classmethod
    def from_powers(cls, sn: int, cn: int = 0, dn: int = 0) -> "EllipticMonomial":
        if sn < 0 or cn not in (0, 1) or dn not in (0, 1):
            raise ValueError(f"not a reduced monomial: sn^{sn} cn^{cn} dn^{dn}")
        return cls(sn // 2, sn % 2, cn, dn)

    @property
    def sn_power(self) -> int:
        return 2 * self.k + self.eps_s

    @property
    def sector(self) -> tuple[int, int, int]:
        return (self.eps_s, self.eps_c, self.eps_d)

    @property
    def degree(self) -> int:
        return self.sn_power + self.eps_c + self.eps_d

    def __str__(self):
        parts = []
        j = self.sn_power
        if j:
            parts.append("sn" if j == 1 else f"sn^{j}")
        if self.eps_c:
            parts.append("cn")
        if self.eps_d:
            parts.append("dn")
        return "*".join(parts) or "1"


def _reduce(j: int, e: int, f: int) -> dict[EllipticMonomial, Poly]:
    """Rewrite sn^j cn^e dn^f (e, f <= 2) in canonical monomials."""
    if e == 2:
        out: dict[EllipticMonomial, Poly] = {}
        for key, coef in _reduce(j, 0, f).items():
            out[key] = out.get(key, Poly()) + coef
        for key, coef in _reduce(j + 2, 0, f).items():
            out[key] = out.get(key, Poly()) - coef
        return out
    if f == 2:
        return {
            EllipticMonomial.from_powers(j, e, 0): Poly.const(1),
            EllipticMonomial.from_powers(j + 2, e, 0): -M,
        }
    return {EllipticMonomial.from_powers(j, e, f): Poly.const(1)}


@lru_cache(maxsize=None)
def _mono_product(u: EllipticMonomial, v: EllipticMonomial) -> tuple[tuple[EllipticMonomial, Poly], ...]:
    red = _reduce(u.sn_power + v.sn_power, u.eps_c + v.eps_c, u.eps_d + v.eps_d)
    return tuple((k, c) for k, c in red.items() if c)


@lru_cache(maxsize=None)
def _mono_derivative(u: EllipticMonomial) -> tuple[tuple[EllipticMonomial, Poly], ...]:
    # (sn^j)' = j sn^(j-1) cn dn, (cn)' = -sn dn, (dn)' = -m sn cn
    j, e, f = u.sn_power, u.eps_c, u.eps_d
    acc: dict[EllipticMonomial, Poly] = {}

    def add(red, coef):
        for key, c in red.items():
            acc[key] = acc.get(key, Poly()) + coef * c

    if j:
        add(_reduce(j - 1, e + 1, f + 1), Poly.const(j))
    if e:
        add(_reduce(j + 1, 0, f + 1), Poly.const(-1))
    if f:
        add(_reduce(j + 1, e + 1, 0), -M)
    return tuple((k, c) for k, c in acc.items() if c)


def _as_poly(x) -> Poly:
    if isinstance(x, Poly):
        return x
    return Poly.const(Fraction(x))


class EllipticCombination:
    """Canonical linear combination of EllipticMonomial with Q[m] coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[EllipticMonomial, Poly] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[EllipticMonomial, Poly] = {}
        for key, coef in items:
            key = EllipticMonomial(*key)
            coef = _as_poly(coef)
            total = clean.get(key, Poly()) + coef
            if total:
                clean[key] = total
            else:
                clean.pop(key, None)
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def monomial(cls, sn: int = 0, cn: int = 0, dn: int = 0, coeff=1) -> "EllipticCombination":
        return cls({EllipticMonomial.from_powers(sn, cn, dn): _as_poly(coeff)})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, EllipticCombination) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __iter__(self):
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"EllipticCombination({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*{k}" for k, c in self.terms.items())

    def __add__(self, other):
        return EllipticCombination(list(self.terms.items()) + list(other.terms.items()))

    def __neg__(self):
        return EllipticCombination({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "EllipticCombination":
        f = _as_poly(factor)
        return EllipticCombination({k: c * f for k, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, EllipticCombination):
            return self.scale(other)
        acc: list = []
        for u, cu in self.terms.items():
            for v, cv in other.terms.items():
                for key, c in _mono_product(u, v):
                    acc.append((key, cu * cv * c))
        return EllipticCombination(acc)

    __rmul__ = __mul__

    def derivative(self) -> "EllipticCombination":
        acc: list = []
        for u, cu in self.terms.items():
            for key, c in _mono_derivative(u):
                acc.append((key, cu * c))
        return EllipticCombination(acc)

    def drop_dn(self) -> "EllipticCombination":
        """Divide by dn; every term must carry a dn factor."""
        out = {}
        for k, c in self.terms.items():
            if not k.eps_d:
                raise ArithmeticError(f"term {k} is not divisible by dn")
            out[k._replace(eps_d=0)] = c
        return EllipticCombination(out)

    def sectors(self) -> set[tuple[int, int, int]]:
        return {k.sector for k in self.terms}

    def __call__(self, x, m: float):
        s, c, d = jacobi(np.asarray(x, dtype=float), m)
        out = np.zeros_like(s)
        for k, coef in self.terms.items():
            term = coef(float(m)) * s ** k.sn_power
            if k.eps_c:
                term = term * c
            if k.eps_d:
                term = term * d
            out = out + term
        return out

    def to_json(self) -> list:
        return [
            {"k": k.k, "eps_s": k.eps_s, "eps_c": k.eps_c, "eps_d": k.eps_d, "coeff": [str(x) for x in c.c]}
            for k, c in self.terms.items()
        ]

    @classmethod
    def from_json(cls, data: list) -> "EllipticCombination":
        return cls(
            {
                EllipticMonomial(t["k"], t["eps_s"], t["eps_c"], t["eps_d"]): Poly(Fraction(s) for s in t["coeff"])
                for t in data
            }
        )


ONE = EllipticCombination.monomial()
SN = EllipticCombination.monomial(sn=1)
CN = EllipticCombination.monomial(cn=1)
DN = EllipticCombination.monomial(dn=1)
