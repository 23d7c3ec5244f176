"""Registry of closed-form band-edge and mid-band states, with cross-checks.

Every entry carries its energies as an exact polynomial in E over Q[m]
(linear law, quadratic surd pair, or a shifted characteristic
polynomial), the kernel sectors that should reproduce it, and, where a
closed form is known, explicit wavefunctions.  ``crosscheck`` validates
an entry three ways: Schroedinger residual, Floquet roots, and exact
agreement with the closure engine.
"""

from __future__ import annotations

import difflib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .elliptic import jacobi
from .floquet import AmbiguousNodeError, count_nodes, root_near
from .integrate import IntegratorError
from .model import PotentialParams
from .qes import BandEdge, MidBand, Poly, QesEigenproblem, UPoly, Wavefunction, detect_closure, qes_energies, real_roots, residual, wavefunction

__all__ = [
    "CATALOG_VERSION",
    "RESIDUAL_TOL",
    "FLOQUET_TOL",
    "EnergyLaw",
    "ExplicitState",
    "KernelRef",
    "CatalogEntry",
    "CrosscheckReport",
    "entries",
    "lookup",
    "crosscheck",
    "dumps",
]

CATALOG_VERSION = 1
RESIDUAL_TOL = 1e-6
FLOQUET_TOL = 1e-7

F = Fraction
U1 = ((0, 0, 0), (0, 1, 1))  # sn^2k and cn dn sn^2k
U2 = ((0, 0, 1), (0, 1, 0))  # dn sn^2k and cn sn^2k


def _m(*coeffs) -> Poly:
    """Polynomial in m from ascending coefficients."""
    return Poly(tuple(F(c) for c in coeffs))


# ------------------------------------------------------------------ energies


@dataclass(frozen=True)
class EnergyLaw:
    """Energies of an entry: the real roots of ``poly`` (monic in E)."""

    text: str
    poly: UPoly
    spectral: Optional[UPoly] = None  # printed polynomial in the spectral parameter
    shift: Optional[Poly] = None  # E = spectral parameter + shift
    radicand: Optional[Poly] = None

    @classmethod
    def linear(cls, c0, c1, text: str) -> "EnergyLaw":
        return cls(text, UPoly([-_m(c0, c1), 1]))

    @classmethod
    def surd(cls, centre: Poly, radicand: Poly, text: str, coeff=1) -> "EnergyLaw":
        # (E - centre)^2 - coeff^2 * radicand
        c2 = F(coeff) ** 2
        poly = UPoly([centre * centre - radicand * c2, centre * F(-2), 1])
        return cls(text, poly, radicand=radicand)

    @classmethod
    def charpoly(cls, coeffs, shift: Poly, text: str) -> "EnergyLaw":
        spectral = UPoly(list(coeffs))
        return cls(text, spectral.shift(shift), spectral=spectral, shift=shift)

    @property
    def count(self) -> int:
        return self.poly.degree

    def energies(self, m) -> list[float]:
        return real_roots(self.poly.at(F(m)))

    def to_json(self) -> dict:
        out = {"text": self.text, "poly": self.poly.to_json()}
        if self.spectral is not None:
            out["spectral"] = self.spectral.to_json()
            out["shift"] = [str(c) for c in self.shift.c]
        if self.radicand is not None:
            out["radicand"] = [str(c) for c in self.radicand.c]
        return out


# ------------------------------------------------------------- wavefunctions


@dataclass(frozen=True)
class ExplicitState:
    """psi = dn^dn_power * [sqrt(dn + sign cn)] * body(sn, cn, dn, m) for energy ``index``."""

    text: str
    dn_power: Fraction
    body: Callable
    midband_sign: int = 0
    index: int = 0

    def wavefunction(self, m: float, flip_cn: bool = False) -> Wavefunction:
        body = self.body

        def values(x):
            s, c, d = jacobi(x, m)
            return body(s, -c if flip_cn else c, d, m)

        sign = -self.midband_sign if flip_cn else self.midband_sign
        return Wavefunction(F(self.dn_power), sign, values, m).normalize()


def _state(text, dn_power, body, sign=0, index=0) -> ExplicitState:
    return ExplicitState(text, F(dn_power), body, sign, index)


@dataclass(frozen=True)
class KernelRef:
    """Closure-engine ansatz expected to contain an entry's states."""

    operator: str  # "edge" or "mid"
    family: tuple
    sign: int = 1

    def problem(self, a, b) -> QesEigenproblem:
        return _problem(self.operator, F(a), F(b), self.family, self.sign)

    def to_json(self) -> dict:
        return {"operator": self.operator, "family": [list(s) for s in self.family], "sign": self.sign}


@lru_cache(maxsize=None)
def _problem(operator: str, a: Fraction, b: Fraction, family: tuple, sign: int) -> QesEigenproblem:
    if operator == "edge":
        return detect_closure(BandEdge(a, b), family)
    return detect_closure(MidBand(a, b, sign), family)


def _edge(*sector) -> KernelRef:
    return KernelRef("edge", (tuple(sector),))


def _mid(union) -> tuple[KernelRef, KernelRef]:
    return KernelRef("mid", union, 1), KernelRef("mid", union, -1)


# ------------------------------------------------------------------ entries


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    a: Fraction
    b: Fraction
    state_label: str
    period: str  # 2K, 4K or 8K
    kind: str  # "edge" (D = +-2) or "mid" (D = 0)
    energy: EnergyLaw
    kernel: tuple[KernelRef, ...]
    states: tuple[ExplicitState, ...] = ()
    ladder: Optional[int] = None
    degenerate: bool = False
    edge_labels: tuple[int, ...] = ()  # ordinal of each energy among all band edges
    m0_limits: tuple[Fraction, ...] = ()
    m1_limits: tuple[Fraction, ...] = ()

    @property
    def params_pq(self) -> tuple[Fraction, Fraction]:
        return self.a * (self.a + 1), self.b * (self.b + 1)

    @property
    def swapped(self) -> bool:
        """True when q > p; then V(x + K) is the potential with p and q exchanged."""
        p, q = self.params_pq
        return q > p

    def params(self, m) -> PotentialParams:
        """Canonical (p >= q) potential with the same spectrum."""
        if self.swapped:
            return PotentialParams(self.b, self.a, m)
        return PotentialParams(self.a, self.b, m)

    def energies(self, m) -> list[float]:
        return self.energy.energies(m)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "a": str(self.a),
            "b": str(self.b),
            "ladder": self.ladder,
            "state_label": self.state_label,
            "period": self.period,
            "kind": self.kind,
            "degenerate": self.degenerate,
            "energy": self.energy.to_json(),
            "kernel": [k.to_json() for k in self.kernel],
            "wavefunctions": [
                {"text": s.text, "dn_power": str(s.dn_power), "midband_sign": s.midband_sign, "index": s.index}
                for s in self.states
            ],
            "edge_labels": list(self.edge_labels),
            "m0_limits": [str(x) for x in self.m0_limits],
            "m1_limits": [str(x) for x in self.m1_limits],
        }


def _sqrt(poly: Poly, m):
    return math.sqrt(float(poly(F(m))))


def _fixed_entries() -> list[CatalogEntry]:
    out = []
    add = out.append
    # a = 3, b = 2: p = 12, q = 6
    a, b = F(3), F(2)
    add(CatalogEntry(
        "ALP-12-6-ground", a, b, "psi_0", "2K", "edge",
        EnergyLaw.linear(0, 9, "E = 9m"), (_edge(0, 0, 1),),
        (_state("dn^3", 3, lambda s, c, d, m: np.ones_like(s)),),
        edge_labels=(0,), m0_limits=(F(0),), m1_limits=(F(9),),
    ))
    add(CatalogEntry(
        "ALP-12-6-cn-cubic", a, b, "psi_1,6,9", "4K", "edge",
        EnergyLaw.charpoly([_m(0, -576), _m(192, 48), _m(-32, 4), _m(1)], _m(1, 4),
                           "lam^3 - 4(8-m) lam^2 + 48(4+m) lam - 576m = 0, E = lam + 1 + 4m"),
        (_edge(0, 1, 0),), edge_labels=(1, 6, 9), m0_limits=(F(1), F(9), F(25)),
    ))
    add(CatalogEntry(
        "ALP-12-6-sn-cubic", a, b, "psi_2,5,10", "4K", "edge",
        EnergyLaw.charpoly([_m(0, -1728, -576), _m(192, 336), _m(-32, -8), _m(1)], _m(1, 1),
                           "lam^3 - 8(4+m) lam^2 + 48(4+7m) lam - 576m(3+m) = 0, E = lam + 1 + m"),
        (_edge(1, 0, 0),), edge_labels=(2, 5, 10), m0_limits=(F(1), F(9), F(25)),
    ))
    # a = 3, b = 1: p = 12, q = 2
    a, b = F(3), F(1)
    add(CatalogEntry(
        "ALP-12-2-psi1", a, b, "psi_1", "4K", "edge",
        EnergyLaw.linear(1, 4, "E = 1 + 4m"), (_edge(0, 1, 1),),
        (_state("cn dn^2", 2, lambda s, c, d, m: c),), edge_labels=(1,), m0_limits=(F(1),),
    ))
    add(CatalogEntry(
        "ALP-12-2-psi2", a, b, "psi_2", "4K", "edge",
        EnergyLaw.linear(1, 9, "E = 1 + 9m"), (_edge(1, 0, 1),),
        (_state("sn dn^2", 2, lambda s, c, d, m: s),), edge_labels=(2,), m0_limits=(F(1),),
    ))
    delta7 = _m(9, -9, 1)
    add(CatalogEntry(
        "ALP-12-2-psi83", a, b, "psi_8,3", "2K", "edge",
        EnergyLaw.surd(_m(10, 2), delta7, "E = 10 + 2m +- 2 sqrt(9 - 9m + m^2)", coeff=2),
        (_edge(1, 1, 0),),
        (
            _state("sn cn / dn (5m sn^2 - 3 - m - d7)", -1,
                   lambda s, c, d, m: s * c * (5 * m * s * s - 3 - m - _sqrt(delta7, m)), index=0),
            _state("sn cn / dn (5m sn^2 - 3 - m + d7)", -1,
                   lambda s, c, d, m: s * c * (5 * m * s * s - 3 - m + _sqrt(delta7, m)), index=1),
        ),
        edge_labels=(3, 8), m0_limits=(F(4), F(16)),
    ))
    add(CatalogEntry(
        "ALP-12-2-cubic", a, b, "psi_0,4,7", "2K", "edge",
        EnergyLaw.charpoly([_m(0, -384, -192), _m(64, 176), _m(-20, -8), _m(1)], _m(0, 1),
                           "lam^3 - 4(2m+5) lam^2 + 16(4+11m) lam - 192m(2+m) = 0, E = lam + m"),
        (_edge(0, 0, 0),), edge_labels=(0, 4, 7), m0_limits=(F(0), F(4), F(16)),
    ))
    # half-integer a, b
    a, b = F(3, 2), F(1, 2)
    add(CatalogEntry(
        "HALF-3/2-1/2-psi0", a, b, "psi_0", "2K", "edge",
        EnergyLaw.linear(0, F(9, 4), "E = 9m/4"), (_edge(0, 0, 1),),
        (_state("dn^(3/2)", F(3, 2), lambda s, c, d, m: np.ones_like(s)),),
        edge_labels=(0,), m0_limits=(F(0),),
    ))
    add(CatalogEntry(
        "HALF-3/2-1/2-psi34", a, b, "psi_3,4", "2K", "edge",
        EnergyLaw.linear(4, F(1, 4), "E = 4 + m/4"), (_edge(1, 1, 0), _edge(0, 0, 0)),
        (
            _state("sn cn / dn^(1/2)", F(-1, 2), lambda s, c, d, m: s * c),
            _state("(2 sn^2 - 1) / dn^(1/2)", F(-1, 2), lambda s, c, d, m: 2 * s * s - 1),
        ),
        degenerate=True, edge_labels=(3,), m0_limits=(F(4),),
    ))
    a, b = F(5, 2), F(1, 2)
    add(CatalogEntry(
        "HALF-5/2-1/2-psi1", a, b, "psi_1", "4K", "edge",
        EnergyLaw.linear(1, F(9, 4), "E = 1 + 9m/4"), (_edge(0, 1, 1),),
        (_state("cn dn^(3/2)", F(3, 2), lambda s, c, d, m: c),), edge_labels=(1,), m0_limits=(F(1),),
    ))
    add(CatalogEntry(
        "HALF-5/2-1/2-psi2", a, b, "psi_2", "4K", "edge",
        EnergyLaw.linear(1, F(25, 4), "E = 1 + 25m/4"), (_edge(1, 0, 1),),
        (_state("sn dn^(3/2)", F(3, 2), lambda s, c, d, m: s),), edge_labels=(2,), m0_limits=(F(1),),
    ))
    add(CatalogEntry(
        "HALF-5/2-1/2-psi56", a, b, "psi_5,6", "4K", "edge",
        EnergyLaw.linear(9, F(1, 4), "E = 9 + m/4"), (_edge(0, 1, 0), _edge(1, 0, 0)),
        (
            _state("cn (4 sn^2 - 1) / dn^(1/2)", F(-1, 2), lambda s, c, d, m: c * (4 * s * s - 1)),
            _state("sn (4 sn^2 - 3) / dn^(1/2)", F(-1, 2), lambda s, c, d, m: s * (4 * s * s - 3)),
        ),
        degenerate=True, edge_labels=(5,), m0_limits=(F(9),),
    ))
    return out


LADDER_RANGE = {"b1/2-even": range(5), "b1/2-odd": range(5), "b3/2-even": range(4), "b3/2-odd": range(4)}


def _ladder_entries() -> list[CatalogEntry]:
    out = []
    half, three_half = F(1, 2), F(3, 2)
    for n in LADDER_RANGE["b1/2-even"]:
        a = 2 * n + three_half
        e0 = (2 * n + 2) ** 2
        out.append(CatalogEntry(
            f"LAD-{a}-1/2", a, half, "degenerate pair", "2K", "edge",
            EnergyLaw.linear(e0, F(1, 4), f"E = {e0} + m/4"), (_edge(0, 0, 0), _edge(1, 1, 0)),
            ladder=n, degenerate=True, m0_limits=(F(e0),),
        ))
    for n in LADDER_RANGE["b1/2-odd"]:
        a = 2 * n + F(5, 2)
        e0 = (2 * n + 3) ** 2
        out.append(CatalogEntry(
            f"LAD-{a}-1/2", a, half, "degenerate pair", "4K", "edge",
            EnergyLaw.linear(e0, F(1, 4), f"E = {e0} + m/4"), (_edge(1, 0, 0), _edge(0, 1, 0)),
            ladder=n, degenerate=True, m0_limits=(F(e0),),
        ))
    for n in LADDER_RANGE["b3/2-even"]:
        a = 2 * n + F(5, 2)
        k = (4 * n + 6) ** 2
        centre = 4 * n * n + 12 * n + 10
        out.append(CatalogEntry(
            f"LAD-{a}-3/2", a, three_half, "two degenerate pairs", "2K", "edge",
            EnergyLaw.surd(_m(centre, F(5, 4)), _m(k, -k, 1), f"E = {centre} + 5m/4 +- sqrt({k} - {k}m + m^2)"),
            (_edge(0, 0, 0), _edge(1, 1, 0)),
            ladder=n, degenerate=True, m0_limits=(F(centre) - math.isqrt(k), F(centre) + math.isqrt(k)),
        ))
    for n in LADDER_RANGE["b3/2-odd"]:
        a = 2 * n + F(7, 2)
        k = 16 * (n + 2) ** 2
        centre = 4 * n * n + 16 * n + 17
        out.append(CatalogEntry(
            f"LAD-{a}-3/2", a, three_half, "two degenerate pairs", "4K", "edge",
            EnergyLaw.surd(_m(centre, F(5, 4)), _m(k, -k, 1), f"E = {centre} + 5m/4 +- sqrt({k} - {k}m + m^2)"),
            (_edge(1, 0, 0), _edge(0, 1, 0)),
            ladder=n, degenerate=True, m0_limits=(F(centre) - math.isqrt(k), F(centre) + math.isqrt(k)),
        ))
    return out


def _midband_entries() -> list[CatalogEntry]:
    out = []
    add = out.append
    q = F(1, 4)
    shift0 = _m(q, q)

    def mb(a, b, label, law, union, states=(), m0=(), m1=()):
        add(CatalogEntry(
            f"MB-{F(a)}-{F(b)}", F(a), F(b), label, "8K", "mid", law, _mid(union), tuple(states),
            degenerate=True, m0_limits=tuple(F(x) for x in m0), m1_limits=tuple(F(x) for x in m1),
        ))

    mb("1/2", 0, "z = 1", EnergyLaw.linear(q, q, "E = (1+m)/4"), U1,
       [_state("sqrt(dn + cn)", 0, lambda s, c, d, m: np.ones_like(s), sign=1)], m0=[q], m1=[F(1, 2)])
    root1 = _m(1, -1, 1)
    mb("3/2", 0, "z = dn + B cn", EnergyLaw.surd(_m(F(5, 4), F(5, 4)), root1, "E = 5(1+m)/4 +- sqrt(1 - m + m^2)"), U2,
       [
           _state("[dn - (1 - m - r) cn] sqrt(dn + cn)", 0,
                  lambda s, c, d, m: d - (1 - m - _sqrt(root1, m)) * c, sign=1, index=0),
           _state("[dn - (1 - m + r) cn] sqrt(dn + cn)", 0,
                  lambda s, c, d, m: d - (1 - m + _sqrt(root1, m)) * c, sign=1, index=1),
       ], m0=[q, F(9, 4)], m1=[F(3, 2), F(7, 2)])
    mb("1/2", 1, "z = dn - 2 cn", EnergyLaw.linear(F(9, 4), q, "E = (9+m)/4"), U2,
       [_state("(1 - 2 cn/dn) sqrt(dn + cn)", 0, lambda s, c, d, m: 1 - 2 * c / d, sign=1)],
       m0=[F(9, 4)], m1=[F(5, 2)])
    mb("7/2", 0, "quartic", EnergyLaw.charpoly(
        [_m(0, 1080, 3105, 1080), _m(-144, -1404, -1404, -144), _m(108, 342, 108), _m(-20, -20), _m(1)], shift0,
        "l^4 - 20(1+m) l^3 + 18(6+19m+6m^2) l^2 - 36(4+39m+39m^2+4m^3) l + 135m(8+23m+8m^2) = 0, E = l + (1+m)/4"),
       U2, m0=[q, F(9, 4), F(25, 4), F(49, 4)])
    mb("5/2", 1, "cubic", EnergyLaw.charpoly(
        [_m(0, -96, -98, 5), _m(24, 88, -1), _m(-14, -5), _m(1)], _m(q, F(5, 4)),
        "l^3 - (5m+14) l^2 + (24+88m-m^2) l + 5m^3 - 98m^2 - 96m = 0, E = l + (1+m)/4 + m"),
       U2, m0=[q, F(9, 4), F(49, 4)])
    mb("3/2", 2, "pair", EnergyLaw.surd(_m(F(29, 4), F(5, 4)), _m(25, -25, 1), "E = (29+5m)/4 +- sqrt(25 - 25m + m^2)"),
       U2, m0=[F(9, 4), F(49, 4)])
    mb("1/2", 3, "single", EnergyLaw.linear(F(49, 4), q, "E = (49+m)/4"), U2,
       [_state("dn^-3 (dn [1 - (4-m)/3 sn^2] - 4/3 cn [1 - (2-m) sn^2]) sqrt(dn + cn)", -3,
               lambda s, c, d, m: d * (1 - (4 - m) / 3 * s * s) - 4 / 3 * c * (1 - (2 - m) * s * s), sign=1)],
       m0=[F(49, 4)])
    mb("5/2", 0, "cubic", EnergyLaw.charpoly(
        [_m(0, -48, -48), _m(12, 52, 12), _m(-8, -8), _m(1)], shift0,
        "l^3 - 8(1+m) l^2 + 4(3+13m+3m^2) l - 48m(1+m) = 0, E = l + (1+m)/4"),
       U1, m0=[q, F(9, 4), F(25, 4)])
    mb("3/2", 1, "pair", EnergyLaw.surd(_m(F(13, 4), F(5, 4)), _m(9, -9, 1), "E = (13+5m)/4 +- sqrt(9 - 9m + m^2)"),
       U1, m0=[q, F(25, 4)])
    mb("1/2", 2, "single", EnergyLaw.linear(F(25, 4), q, "E = (25+m)/4"), U1,
       [_state("dn^-2 [1 - (4-m)/3 sn^2 - 2/3 cn dn] sqrt(dn + cn)", -2,
               lambda s, c, d, m: 1 - (4 - m) / 3 * s * s - 2 / 3 * c * d, sign=1)],
       m0=[F(25, 4)])
    # a = b: the potential has period K, so period-4K states sit at D = 0
    add(CatalogEntry(
        "MB-1/2-1/2", F(1, 2), F(1, 2), "psi_1, psi_2", "4K", "mid",
        EnergyLaw.linear(1, q, "E = 1 + m/4"), (_edge(0, 1, 0), _edge(1, 0, 0)),
        (
            _state("cn / dn^(1/2)", F(-1, 2), lambda s, c, d, m: c),
            _state("sn / dn^(1/2)", F(-1, 2), lambda s, c, d, m: s),
        ),
        degenerate=True, m0_limits=(F(1),),
    ))
    add(CatalogEntry(
        "MB-3/2-3/2", F(3, 2), F(3, 2), "two pairs", "4K", "mid",
        EnergyLaw.surd(_m(5, F(5, 4)), _m(16, -16, 1), "E = 5 + 5m/4 +- sqrt(16 - 16m + m^2)"),
        (_edge(0, 1, 0), _edge(1, 0, 0)),
        degenerate=True, m0_limits=(F(1), F(9)),
    ))
    return out


@lru_cache(maxsize=1)
def _all() -> tuple[CatalogEntry, ...]:
    found = _fixed_entries() + _ladder_entries() + _midband_entries()
    ids = [e.id for e in found]
    if len(set(ids)) != len(ids):
        raise RuntimeError("duplicate catalog ids")
    return tuple(found)


def entries() -> list[CatalogEntry]:
    return list(_all())


def lookup(entry_id: str) -> CatalogEntry:
    for e in _all():
        if e.id == entry_id:
            return e
    close = difflib.get_close_matches(entry_id, [e.id for e in _all()], n=3)
    hint = f"; did you mean {', '.join(close)}?" if close else ""
    raise KeyError(f"no catalog entry {entry_id!r}{hint}")


def dumps() -> str:
    return json.dumps({"version": CATALOG_VERSION, "entries": [e.to_json() for e in _all()]}, indent=1)


# --------------------------------------------------------------- crosscheck


@dataclass
class CrosscheckReport:
    entry_id: str
    m: float
    energies: list[float]
    residual: float
    floquet_error: float
    qes_match: bool
    nodes_ok: Optional[bool] = None
    independent: Optional[bool] = None
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@lru_cache(maxsize=None)
def qes_match(entry: CatalogEntry) -> tuple[bool, str]:
    """Exact comparison with the closure engine, for every kernel reference.

    A printed characteristic polynomial must equal the kernel's; other
    laws must divide it.
    """
    for ref in entry.kernel:
        problem = ref.problem(entry.a, entry.b)
        kernel_poly = problem.energy_charpoly().monic()
        if entry.energy.spectral is not None:
            if entry.energy.poly.monic() != kernel_poly:
                return False, f"characteristic polynomial differs for {ref.family}"
        elif not entry.energy.poly.divides(kernel_poly):
            return False, f"energy law does not divide the kernel polynomial for {ref.family}"
    return True, ""


def _kernel_wavefunctions(entry: CatalogEntry, energy: float, m: float) -> list[Wavefunction]:
    out = []
    for ref in entry.kernel:
        problem = ref.problem(entry.a, entry.b)
        ks = qes_energies(problem, m)
        j = int(np.argmin([abs(k - energy) for k in ks]))
        if abs(ks[j] - energy) > 1e-6 * max(1.0, abs(energy)):
            continue
        out.append(wavefunction(problem, j, m))
    return out


def _wavefunctions(entry: CatalogEntry, index: int, energy: float, m: float) -> list[Wavefunction]:
    explicit = [s for s in entry.states if s.index == index]
    if not explicit:
        return _kernel_wavefunctions(entry, energy, m)
    out = [s.wavefunction(m) for s in explicit]
    out += [s.wavefunction(m, flip_cn=True) for s in explicit if s.midband_sign]
    return out


def _translated(w: Wavefunction, shift: float):
    return lambda x: w(np.asarray(x, dtype=float) + shift)


def _independent(wfs: list[Wavefunction], m: float) -> bool:
    xs = np.linspace(0.0, 8.0 * PotentialParams(0, 0, m).K, 997, endpoint=False) + 0.05
    mat = np.array([w(xs) for w in wfs])
    sv = np.linalg.svd(mat, compute_uv=False)
    return bool(sv[1] > 1e-6 * sv[0])


def crosscheck(
    entry: CatalogEntry,
    m: float,
    residual_tol: float = RESIDUAL_TOL,
    floquet_tol: float = FLOQUET_TOL,
    perturbation: float = 0.0,
    check_nodes: bool = True,
) -> CrosscheckReport:
    """Validate one entry at modulus m; ``perturbation`` shifts every energy (test hook)."""
    if not 0 < m < 1:
        raise ValueError("crosscheck needs 0 < m < 1")
    params = entry.params(m)
    energies = [e + perturbation for e in entry.energies(m)]
    failures = []

    worst_res, worst_i = 0.0, None
    independent = None
    for i, e in enumerate(energies):
        wfs = _wavefunctions(entry, i, e - perturbation, m)
        if not wfs:
            worst_res, worst_i = math.inf, i
            continue
        for w in wfs:
            if entry.swapped:
                w = _translated(w, params.K)
            r = residual(w, e, params)
            if r > worst_res:
                worst_res, worst_i = r, i
        if entry.degenerate:
            ok = len(wfs) >= 2 and _independent(wfs, m)
            independent = ok if independent is None else independent and ok
    if worst_res > residual_tol:
        failures.append(f"residual {worst_res:.3e} at E={energies[worst_i]:.12g}")
    if independent is False:
        failures.append("degenerate partners are not independent")

    worst_fl, worst_j = 0.0, None
    for j, e in enumerate(energies):
        try:
            root = root_near(e, params, entry.kind)
        except IntegratorError as exc:
            failures.append(f"integrator failure near E={e:.12g}: {exc}")
            continue
        err = math.inf if root is None else abs(root - e)
        if err > worst_fl:
            worst_fl, worst_j = err, j
    if worst_fl > floquet_tol:
        failures.append(f"Floquet root off by {worst_fl:.3e} at E={energies[worst_j]:.12g}")

    match, why = qes_match(entry)
    if not match:
        failures.append(why)

    nodes_ok = None
    if check_nodes and entry.edge_labels:
        edge_type = 2 if entry.period == "2K" else -2
        nodes_ok = True
        for e, label in zip(energies, entry.edge_labels):
            try:
                got = count_nodes(e, params, edge_type)
            except (AmbiguousNodeError, IntegratorError) as exc:
                failures.append(f"node count failed at E={e:.12g}: {exc}")
                nodes_ok = False
                continue
            if got != (label + 1) // 2:
                failures.append(f"label {label} implies {(label + 1) // 2} nodes, found {got}")
                nodes_ok = False

    return CrosscheckReport(entry.id, m, energies, worst_res, worst_fl, match, nodes_ok, independent, failures)
