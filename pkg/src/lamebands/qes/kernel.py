"""Closure engine for quasi-exactly solvable band-edge and mid-band states.

Band edges: psi = dn^(-beta) f with beta = b (or -b-1, which leaves q
unchanged).  f then satisfies

    f'' + 2 beta m (sn cn / dn) f' + [lam - (a+beta)(a+1-beta) m sn^2] f = 0,

with E = lam + m beta^2.  f is a polynomial in sn and cn, and the
(sn-parity, cn-parity) sector is preserved.

Mid-band: psi = dn^(-b) w z with w^2 = dn + sign*cn.  Multiplying the
z-equation by sn dn makes it polynomial:

    sn dn z'' + [cn dn^2 - sign dn + 2 b m sn^2 cn] z'
      + [-r m sn^3 dn - sign b m sn cn + b m sn cn^2 dn] z + lam1 sn dn z = 0,

r = (a+1-b)(a+b) - 3/4, E = lam1 + (1+m)/4 + m b^2.  Because the weight
sn dn is not invertible on the ansatz space, closure means finding the
largest subspace U with N U inside (sn dn) U.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Callable, Iterable, NamedTuple, Sequence, Union

import numpy as np

from ..elliptic import check_modulus, complete_K, jacobi, sqrt_dn_plus_cn
from ..model import PotentialParams, parse_rational, potential_value
from .algebra import M, Poly, RatFunc, UPoly, poly_gcd
from .combination import CN, DN, SN, EllipticCombination, EllipticMonomial
from .linalg import ModPField, RatField, charpoly, column_basis, invariant_subspace, solve
from .sturm import ComplexRootsError, real_roots

__all__ = [
    "BandEdge",
    "MidBand",
    "OperatorImage",
    "NotClosedError",
    "QesEigenproblem",
    "Wavefunction",
    "SECTORS",
    "MIDBAND_UNIONS",
    "apply_operator",
    "detect_closure",
    "search_closures",
    "qes_energies",
    "wavefunction",
    "residual",
]

SECTORS = [(s, c, d) for s in (0, 1) for c in (0, 1) for d in (0, 1)]
# {sn^2k} + {cn dn sn^2k} and {dn sn^2k} + {cn sn^2k}
MIDBAND_UNIONS = [((0, 0, 0), (0, 1, 1)), ((0, 0, 1), (0, 1, 0))]

EXACT_EIGEN_LIMIT = 8


class NotClosedError(LookupError):
    """No invariant subspace was found within the requested truncation."""


@dataclass(frozen=True)
class BandEdge:
    """Band-edge operator; dn_branch 0 uses dn^(-b), 1 uses dn^(b+1)."""

    a: Fraction
    b: Fraction
    dn_branch: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a", parse_rational(self.a))
        object.__setattr__(self, "b", parse_rational(self.b))
        if self.dn_branch not in (0, 1):
            raise ValueError("dn_branch must be 0 or 1")

    @property
    def beta(self) -> Fraction:
        return self.b if self.dn_branch == 0 else -self.b - 1

    @property
    def energy_shift(self) -> Poly:
        return Poly((0, self.beta**2))


@dataclass(frozen=True)
class MidBand:
    """Mid-band operator acting on z, psi = dn^(-b) sqrt(dn + sign*cn) z."""

    a: Fraction
    b: Fraction
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a", parse_rational(self.a))
        object.__setattr__(self, "b", parse_rational(self.b))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def r(self) -> Fraction:
        return (self.a + 1 - self.b) * (self.a + self.b) - Fraction(3, 4)

    @property
    def energy_shift(self) -> Poly:
        return Poly((Fraction(1, 4), Fraction(1, 4) + self.b**2))


Operator = Union[BandEdge, MidBand]


class OperatorImage(NamedTuple):
    """op[f] = free + lam * weight, with lam the spectral parameter."""

    free: EllipticCombination
    weight: EllipticCombination


def _mono(sn=0, cn=0, dn=0, coeff=1):
    return EllipticCombination.monomial(sn, cn, dn, coeff)


def _apply_band_edge(op: BandEdge, f: EllipticCombination) -> OperatorImage:
    if any(k.eps_d for k in f.terms):
        raise ValueError("band-edge operator acts on dn-free combinations")
    beta = op.beta
    strength = (op.a + beta) * (op.a + 1 - beta)
    d1 = f.derivative()
    d2 = d1.derivative()
    drift = (SN * CN * d1.drop_dn()).scale(Poly((0, 2 * beta)))
    potential = (_mono(sn=2) * f).scale(Poly((0, -strength)))
    return OperatorImage(d2 + drift + potential, f)


def _apply_midband(op: MidBand, z: EllipticCombination) -> OperatorImage:
    b, sgn = op.b, op.sign
    sd = _mono(sn=1, dn=1)
    d1 = z.derivative()
    d2 = d1.derivative()
    first = CN * DN * DN - DN.scale(sgn) + _mono(sn=2, cn=1, coeff=Poly((0, 2 * b)))
    zeroth = (
        _mono(sn=3, dn=1, coeff=Poly((0, -op.r)))
        + _mono(sn=1, cn=1, coeff=Poly((0, -sgn * b)))
        + (_mono(sn=1, dn=1) * CN * CN).scale(Poly((0, b)))
    )
    return OperatorImage(sd * d2 + first * d1 + zeroth * z, sd * z)


@lru_cache(maxsize=None)
def _apply_monomial(op: Operator, mono: EllipticMonomial) -> OperatorImage:
    f = EllipticCombination({mono: Poly.const(1)})
    if isinstance(op, BandEdge):
        return _apply_band_edge(op, f)
    return _apply_midband(op, f)


def apply_operator(op: Operator, f: EllipticCombination) -> OperatorImage:
    """Apply the reduced Schrodinger operator exactly; linear in f."""
    free: list = []
    weight: list = []
    for mono, coef in f.terms.items():
        img = _apply_monomial(op, mono)
        free.extend((k, c * coef) for k, c in img.free.terms.items())
        weight.extend((k, c * coef) for k, c in img.weight.terms.items())
    return OperatorImage(EllipticCombination(free), EllipticCombination(weight))


# ---------------------------------------------------------------- eigenproblem


def _period_tag(op: Operator, family: Sequence[tuple[int, int, int]]) -> str:
    if isinstance(op, MidBand):
        return "8K"
    es, ec, _ = family[0]
    return "4K" if (es + ec) % 2 else "2K"


@dataclass
class QesEigenproblem:
    """Closed ansatz: op[basis] = -S(basis) @ matrix, i.e. matrix v = lam v.

    basis entries are literal combinations (dn-free for band edges; the
    dn exponent lives in op.beta).  matrix[i][j] is a RatFunc in m.
    """

    op: Operator
    family: tuple
    basis: list[EllipticCombination]
    matrix: list[list[RatFunc]]
    period_tag: str
    level: int = 0
    _charpoly: UPoly | None = field(default=None, repr=False, compare=False)
    _eigen_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def energy_shift(self) -> Poly:
        return self.op.energy_shift

    @property
    def spectral_symbol(self) -> str:
        return "lambda1" if isinstance(self.op, MidBand) else "lambda"

    def charpoly(self) -> UPoly:
        """det(lam I - matrix) as a polynomial in lam over Q(m)."""
        if self._charpoly is None:
            self._charpoly = UPoly(charpoly(self.matrix, RatField))
        return self._charpoly

    def energy_charpoly(self) -> UPoly:
        """Characteristic polynomial in the physical energy E."""
        return self.charpoly().shift(RatFunc(self.energy_shift))

    def matrix_at(self, m: float) -> np.ndarray:
        return np.array([[float(x(Fraction(m))) for x in row] for row in self.matrix], dtype=float)

    def verify_closure(self) -> bool:
        """Re-apply the operator to each basis vector and check exact membership."""
        for i, v in enumerate(self.basis):
            img = apply_operator(self.op, v)
            # op[v_i] = -lam-free part must equal -sum_j matrix[j][i] * weight(v_j)
            numerator = img.free
            den = Poly.const(1)
            for j in range(self.size):
                den = _plcm(den, self.matrix[j][i].den)
            acc = numerator.scale(den)
            for j, vj in enumerate(self.basis):
                entry = self.matrix[j][i]
                if entry.is_zero():
                    continue
                wj = apply_operator(self.op, vj).weight
                acc = acc + wj.scale(entry.num * (den // entry.den))
            if acc:
                return False
        return True

    def energies(self, m: float) -> list[float]:
        return qes_energies(self, m)

    def to_json(self) -> dict:
        op = self.op
        return {
            "operator": type(op).__name__,
            "a": str(op.a),
            "b": str(op.b),
            "branch": op.dn_branch if isinstance(op, BandEdge) else op.sign,
            "family": [list(s) for s in self.family],
            "level": self.level,
            "period_tag": self.period_tag,
            "spectral_variable": self.spectral_symbol,
            "energy_shift": [str(x) for x in self.energy_shift.c],
            "basis": [v.to_json() for v in self.basis],
            "matrix": [[x.to_json() for x in row] for row in self.matrix],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "QesEigenproblem":
        if data["operator"] == "BandEdge":
            op: Operator = BandEdge(Fraction(data["a"]), Fraction(data["b"]), data["branch"])
        else:
            op = MidBand(Fraction(data["a"]), Fraction(data["b"]), data["branch"])
        return cls(
            op=op,
            family=tuple(tuple(s) for s in data["family"]),
            basis=[EllipticCombination.from_json(v) for v in data["basis"]],
            matrix=[[RatFunc.from_json(x) for x in row] for row in data["matrix"]],
            period_tag=data["period_tag"],
            level=data["level"],
        )


def _plcm(p: Poly, q: Poly) -> Poly:
    return (p * q) // poly_gcd(p, q)


# ------------------------------------------------------------------ closure


def _normalize_family(family) -> tuple[tuple[int, int, int], ...]:
    if len(family) == 3 and all(isinstance(x, int) for x in family):
        family = (tuple(family),)
    fam = tuple(sorted(tuple(int(v) for v in s) for s in family))
    for s in fam:
        if len(s) != 3 or any(v not in (0, 1) for v in s):
            raise ValueError(f"bad sector {s}")
    return fam


def _level_basis(family, level: int, band_edge: bool) -> list[EllipticMonomial]:
    def deg(es, ec, ed):
        return es + ec + (0 if band_edge else ed)

    top = min(deg(*s) for s in family) + 2 * level
    out = []
    for es, ec, ed in family:
        k = 0
        while 2 * k + deg(es, ec, ed) <= top:
            out.append(EllipticMonomial(k, es, ec, 0 if band_edge else ed))
            k += 1
    return sorted(out)


def _images(op: Operator, basis: list[EllipticMonomial]):
    imgs = [_apply_monomial(op, b) for b in basis]
    rows = sorted({k for img in imgs for k in img.free.terms} | {k for img in imgs for k in img.weight.terms})
    index = {k: i for i, k in enumerate(rows)}
    nmat = [[Poly() for _ in basis] for _ in rows]
    smat = [[Poly() for _ in basis] for _ in rows]
    for j, img in enumerate(imgs):
        for k, c in img.free.terms.items():
            nmat[index[k]][j] = c
        for k, c in img.weight.terms.items():
            smat[index[k]][j] = c
    return rows, nmat, smat


def _clear_denominators(vec: list[RatFunc]) -> list[Poly]:
    den = Poly.const(1)
    for x in vec:
        den = _plcm(den, x.den)
    polys = [x.num * (den // x.den) for x in vec]
    # strip a common polynomial factor so coefficients stay small
    g = Poly()
    for p in polys:
        if p:
            g = p if g.is_zero() else poly_gcd(g, p)
    if g and not g.is_const():
        polys = [p // g for p in polys]
    content = [c for p in polys for c in p.c if c]
    if content:
        scale = Fraction(lcm(*(c.denominator for c in content)))
        polys = [p * scale for p in polys]
    return polys


def _band_edge_closure(op: BandEdge, family, level: int):
    basis = _level_basis(family, level, band_edge=True)
    keys = set(basis)
    for mono in basis:
        img = _apply_monomial(op, mono)
        if any(k not in keys for k in img.free.terms):
            return None
    rows, nmat, _ = _images(op, basis)
    index = {k: i for i, k in enumerate(rows)}
    # weight is the identity, so matrix = -N restricted to the basis
    matrix = [[RatFunc(-nmat[index[bi]][j]) for j in range(len(basis))] for bi in basis]
    combos = [EllipticCombination({mono: Poly.const(1)}) for mono in basis]
    return combos, matrix


def _midband_closure(op: MidBand, family, level: int):
    basis = _level_basis(family, level, band_edge=False)
    rows, nmat, smat = _images(op, basis)
    screen = ModPField()
    if not invariant_subspace(
        [[screen.convert(x) for x in r] for r in nmat], [[screen.convert(x) for x in r] for r in smat], screen
    ):
        return None
    rn = [[RatFunc(x) for x in r] for r in nmat]
    rs = [[RatFunc(x) for x in r] for r in smat]
    u = invariant_subspace(rn, rs, RatField)
    if not u:
        return None
    polys = [_clear_denominators(vec) for vec in u]
    uvecs = [[RatFunc(p) for p in vec] for vec in polys]
    k = len(uvecs)
    nu = [[sum((rn[i][t] * uvecs[j][t] for t in range(len(basis))), RatFunc(0)) for j in range(k)] for i in range(len(rows))]
    su = [[sum((rs[i][t] * uvecs[j][t] for t in range(len(basis))), RatFunc(0)) for j in range(k)] for i in range(len(rows))]
    a = solve(su, nu, RatField)
    matrix = [[-x for x in row] for row in a]
    combos = [EllipticCombination({mono: p for mono, p in zip(basis, vec) if p}) for vec in polys]
    return combos, matrix


def detect_closure(op, family, max_k: int = 16) -> QesEigenproblem:
    """Smallest truncation level whose ansatz space contains a closed subspace.

    For BandEdge the sector's eps_d bit selects the dn exponent branch
    (0: dn^-b, 1: dn^(b+1)); the basis itself is dn-free.  For MidBand the
    family may be a union of sectors.
    """
    if max_k > 64:
        raise ValueError("max_k is limited to 64")
    fam = _normalize_family(family)
    if isinstance(op, BandEdge):
        if len(fam) != 1:
            raise ValueError("band-edge closure works one sector at a time")
        op = BandEdge(op.a, op.b, fam[0][2])
        finder = _band_edge_closure
    elif isinstance(op, MidBand):
        finder = _midband_closure
    else:
        raise TypeError(f"unknown operator {op!r}")
    for level in range(max_k + 1):
        found = finder(op, fam, level)
        if found is not None:
            combos, matrix = found
            return QesEigenproblem(op, fam, combos, matrix, _period_tag(op, fam), level)
    raise NotClosedError(f"{op} on sectors {fam}: no closure up to level {max_k}")


def search_closures(op, max_k: int = 16) -> list[QesEigenproblem]:
    """Try all 8 sectors, then (for MidBand) the two mixed unions.

    Returns every closed problem ordered by basis size and then sector order.
    """
    families: list = [(s,) for s in SECTORS]
    if isinstance(op, MidBand):
        families += [tuple(u) for u in MIDBAND_UNIONS]
    found = []
    for order, fam in enumerate(families):
        try:
            found.append((order, detect_closure(op, fam, max_k)))
        except NotClosedError:
            continue
    found.sort(key=lambda t: (t[1].size, t[0]))
    return [p for _, p in found]


# --------------------------------------------------------------- eigen-solve


def _eigenvalues(problem: QesEigenproblem, m: float) -> list[float]:
    m = check_modulus(m)
    cached = problem._eigen_cache.get(m)
    if cached is None:
        cached = problem._eigen_cache[m] = _solve_eigenvalues(problem, m)
    return list(cached)


def _solve_eigenvalues(problem: QesEigenproblem, m: float) -> list[float]:
    if problem.size <= EXACT_EIGEN_LIMIT:
        poly = problem.charpoly().at(Fraction(m))
        return real_roots(poly)
    vals = np.linalg.eigvals(problem.matrix_at(m))
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.max(np.abs(vals.imag)) > 1e-10 * scale:
        raise ComplexRootsError(f"eigenvalues with imaginary parts {vals.imag}")
    return sorted(vals.real.tolist())


def qes_energies(problem: QesEigenproblem, m: float) -> list[float]:
    """Sorted physical energies of a closed problem at modulus m."""
    shift = problem.energy_shift(float(m))
    return [lam + shift for lam in _eigenvalues(problem, m)]


# ------------------------------------------------------------- wavefunctions


@dataclass
class Wavefunction:
    """psi(x) = dn^dn_power * [sqrt(dn + sign cn)] * body * scale."""

    dn_power: Fraction
    midband_sign: int
    body: Callable
    m: float
    energy: float = float("nan")
    scale: float = 1.0

    def raw(self, x):
        x = np.asarray(x, dtype=float)
        _, _, d = jacobi(x, self.m)
        out = d ** float(self.dn_power) * self.body(x)
        if self.midband_sign:
            out = out * sqrt_dn_plus_cn(x, self.m, self.midband_sign)
        return out

    def __call__(self, x):
        out = self.scale * self.raw(x)
        return float(out) if np.ndim(out) == 0 else out

    def normalize(self, samples: int = 4096) -> "Wavefunction":
        xs = np.linspace(0.0, 8.0 * complete_K(self.m), samples, endpoint=False)
        vals = self.raw(xs)
        i = int(np.argmax(np.abs(vals)))
        self.scale = 1.0 / vals[i] if vals[i] != 0 else 1.0
        return self


def _null_vector(mat: np.ndarray) -> np.ndarray:
    _, _, vh = np.linalg.svd(mat)
    return vh[-1]


def wavefunction(problem: QesEigenproblem, index: int, m: float) -> Wavefunction:
    """Eigenfunction for the index-th energy (ascending), normalized to max|psi| = 1."""
    m = check_modulus(m)
    lams = _eigenvalues(problem, m)
    lam = lams[index]
    mat = problem.matrix_at(m)
    coeffs = _null_vector(mat - lam * np.eye(problem.size))

    # gather float coefficients per sector, then Horner in sn^2
    groups: dict[tuple[int, int, int], dict[int, float]] = {}
    for c, v in zip(coeffs, problem.basis):
        for mono, poly in v.terms.items():
            slot = groups.setdefault(mono.sector, {})
            slot[mono.k] = slot.get(mono.k, 0.0) + c * poly(m)

    def body(x):
        s, cn, dn = jacobi(np.asarray(x, dtype=float), m)
        s2 = s * s
        out = np.zeros_like(s)
        for (es, ec, ed), ks in groups.items():
            top = max(ks)
            acc = np.zeros_like(s)
            for k in range(top, -1, -1):
                acc = acc * s2 + ks.get(k, 0.0)
            if es:
                acc = acc * s
            if ec:
                acc = acc * cn
            if ed:
                acc = acc * dn
            out = out + acc
        return out

    op = problem.op
    if isinstance(op, BandEdge):
        wf = Wavefunction(-op.beta, 0, body, m)
    else:
        wf = Wavefunction(-op.b, op.sign, body, m)
    wf.energy = lam + problem.energy_shift(m)
    return wf.normalize()


def _evaluation_noise(psi: Callable, xs: np.ndarray, w: float) -> float:
    """Relative rounding noise of psi, from sixth differences at a spacing far below any feature."""
    step = 1e-4 / w
    probe = (xs[::16, None] + step * np.arange(40)[None, :]).ravel()
    vals = np.asarray(psi(probe), dtype=float).reshape(-1, 40)
    sixth = np.diff(vals, 6, axis=1)
    # the sixth difference of independent noise has variance 924 sigma^2
    return float(np.sqrt(np.mean(sixth**2) / 924.0))


def residual(psi: Callable, energy: float, params: PotentialParams, grid_n: int = 512) -> float:
    """max |-psi'' + (V - E) psi| / max |psi| on [0, 8K), psi'' by a 5-point stencil.

    The step balances the stencil's truncation error against the measured
    rounding noise of psi, so badly cancelling closed forms are not
    penalised for digits they never had.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    m = params.m
    xs = np.linspace(0.0, 8.0 * complete_K(m), grid_n, endpoint=False) + 0.1234
    v = potential_value(xs, params)
    w = np.sqrt(max(abs(energy), float(np.max(np.abs(v)))) + 1.0)
    centre = np.asarray(psi(xs), dtype=float)
    scale = float(np.max(np.abs(centre)))
    noise = max(_evaluation_noise(psi, xs, w) / scale, np.finfo(float).eps)
    h = (240.0 * noise) ** (1.0 / 6.0) / w
    vals = [np.asarray(psi(xs + j * h)) for j in (-2, -1, 1, 2)]
    second = (-vals[0] + 16 * vals[1] - 30 * centre + 16 * vals[2] - vals[3]) / (12 * h * h)
    res = -second + (v - energy) * centre
    return float(np.max(np.abs(res)) / scale)
