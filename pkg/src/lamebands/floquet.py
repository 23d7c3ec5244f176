"""Floquet analysis: monodromy, discriminant, band edges, nodes, mid-band roots.

V is even and L-periodic, so with c, s the even/odd solutions at the
half period h = L/2:

    D - 2 = 4 s(h) c'(h),   D + 2 = 4 c(h) s'(h),   D = 2 (c s' + s c')(h).

Each factor is the secular function of a regular Sturm-Liouville problem
on [0, h] (Dirichlet/Neumann at either end), whose eigenvalues are simple
and can be counted exactly from the number of zeros of c or s (a Pruefer
angle argument).  Edge finding brackets each factor's roots with those
counts, so coincident edges (zero-width gaps) are two simple roots of
different factors rather than a double root of D**2 - 4.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .integrate import IntegratorError, PropagationResult, StepPlan, adaptive, make_plan, propagate
from .model import PotentialParams, classify, gap_bounds, potential_value

__all__ = [
    "GAPTOL",
    "Monodromy",
    "BandEdge",
    "BandStructure",
    "BandChart",
    "monodromy",
    "discriminant",
    "find_band_edges",
    "analyze",
    "count_nodes",
    "find_midband",
    "root_near",
    "scan_m",
    "default_emax",
    "extrapolate",
    "AmbiguousNodeError",
]

GAPTOL = 1e-6
DET_TOL = 1e-10
BASE_STEP = 0.05
# full-period integrations must keep det M within DET_TOL of 1
FULL_RTOL = 1e-12
FULL_ATOL = 1e-14

# secular factors: name, D sign, parity, which solution, which component
_FACTORS = (
    ("NN", 2, "even"),  # c'(h) = 0
    ("DD", 2, "odd"),  # s(h) = 0
    ("ND", -2, "even"),  # c(h) = 0
    ("DN", -2, "odd"),  # s'(h) = 0
)


class AmbiguousNodeError(ArithmeticError):
    pass


def default_emax(params: PotentialParams) -> float:
    return float((abs(params.a) + abs(params.b) + 3) ** 2)


@lru_cache(maxsize=64)
def _plan(params: PotentialParams, e_max: float) -> tuple[StepPlan, float]:
    h = 0.5 * params.period
    xs = np.linspace(0.0, h, 2001)
    e_min = float(np.min(potential_value(xs, params))) - 1.0
    return make_plan(params, h, e_min, max(e_max, e_min + 1.0)), e_min


def _factor_values(res: PropagationResult) -> np.ndarray:
    return np.stack((res.cp, res.s, res.c, res.sp))


def _factor_counts(res: PropagationResult) -> np.ndarray:
    kc, ks = res.zeros
    return np.stack((kc + (res.c * res.cp < 0), ks, kc, ks + (res.s * res.sp < 0)))


def _theta(k, y, yp):
    phi = np.where(y > 0, np.arctan2(y, yp), np.arctan2(-y, -yp))
    return k * math.pi + phi


# ---------------------------------------------------------------- monodromy


@dataclass(frozen=True)
class Monodromy:
    matrix: np.ndarray
    energy: float
    period: float

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def _det_check(mat: np.ndarray, energy, m, tol=DET_TOL):
    a, b, c, d = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    scale = max(1.0, abs(a * d), abs(b * c))
    if abs(a * d - b * c - 1.0) > tol * scale:
        raise IntegratorError(f"Wronskian drift {a * d - b * c - 1.0:.3e}", energy, m)


def monodromy(energy: float, params: PotentialParams) -> Monodromy:
    """Transfer matrix of (psi, psi') over one full period, integrated adaptively."""
    if params.m > 1 - 1e-6:
        raise ValueError("monodromy requires m <= 1 - 1e-6")
    res, _ = adaptive([energy], params, params.period, rtol=FULL_RTOL, atol=FULL_ATOL)
    mat = np.array([[res.c[0], res.s[0]], [res.cp[0], res.sp[0]]])
    _det_check(mat, energy, params.m)
    return Monodromy(mat, float(energy), params.period)


def discriminant(energy, params: PotentialParams):
    """D(E) = trace of the monodromy, from the half-period factorization."""
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    plan, _ = _plan(params, float(np.max(e)) + 1.0)
    res = propagate(plan, e)
    d = 2.0 * (res.c * res.sp + res.s * res.cp)
    return float(d[0]) if np.ndim(energy) == 0 else d


# ---------------------------------------------------------------- root finding


def _illinois(plan: StepPlan, which: np.ndarray, lo, hi, flo, fhi, value_fn, rtol=1e-13, max_iter=100):
    """Vectorized Illinois iteration on brackets with flo * fhi < 0."""
    lo, hi, flo, fhi = (np.array(v, dtype=float) for v in (lo, hi, flo, fhi))
    side = np.zeros(lo.size, dtype=int)
    active = np.ones(lo.size, dtype=bool)
    for it in range(max_iter):
        width = hi - lo
        tol = rtol * np.maximum(1.0, np.abs(lo))
        active &= width > tol
        if not active.any():
            break
        idx = np.flatnonzero(active)
        denom = fhi[idx] - flo[idx]
        x = np.where(denom != 0, hi[idx] - fhi[idx] * (hi[idx] - lo[idx]) / np.where(denom != 0, denom, 1.0), 0.5 * (lo[idx] + hi[idx]))
        # stay strictly inside; fall back to bisection on degenerate steps
        bad = ~((x > lo[idx]) & (x < hi[idx]))
        x[bad] = 0.5 * (lo[idx][bad] + hi[idx][bad])
        fx = value_fn(x, which[idx])
        for j, i in enumerate(idx):
            if fx[j] == 0.0:
                lo[i] = hi[i] = x[j]
                active[i] = False
            elif (fx[j] < 0) == (flo[i] < 0):
                lo[i], flo[i] = x[j], fx[j]
                if side[i] == -1:
                    fhi[i] *= 0.5
                side[i] = -1
            else:
                hi[i], fhi[i] = x[j], fx[j]
                if side[i] == 1:
                    flo[i] *= 0.5
                side[i] = 1
    return 0.5 * (lo + hi)


def _make_value_fn(plan: StepPlan, kind: str):
    def value(x, which):
        res = propagate(plan, x)
        if kind == "factor":
            vals = _factor_values(res)
            return vals[which, np.arange(x.size)]
        return res.c * res.sp + res.s * res.cp

    return value


def _bracket_factors(plan: StepPlan, e_min: float, e_max: float, step: float):
    """Grid energies with factor counts refined until every count jump is <= 1."""
    energies = np.arange(e_min, e_max + 0.5 * step, step)
    energies[-1] = min(energies[-1], e_max)
    res = propagate(plan, energies)
    counts = _factor_counts(res)
    values = _factor_values(res)
    if counts[:, 0].any():
        raise IntegratorError("nonzero eigenvalue count below the potential minimum", e_min, plan.params.m)
    for _ in range(60):
        jumps = np.diff(counts, axis=1)
        if (jumps < 0).any():
            raise IntegratorError("non-monotone eigenvalue count", None, plan.params.m)
        need = np.flatnonzero((jumps >= 2).any(axis=0))
        if need.size == 0:
            break
        mids = 0.5 * (energies[need] + energies[need + 1])
        if np.any(energies[need + 1] - energies[need] < 1e-13 * np.maximum(1.0, np.abs(mids))):
            raise IntegratorError("unresolvable cluster of band edges", mids.tolist(), plan.params.m)
        r = propagate(plan, mids)
        energies = np.concatenate((energies, mids))
        counts = np.concatenate((counts, _factor_counts(r)), axis=1)
        values = np.concatenate((values, _factor_values(r)), axis=1)
        order = np.argsort(energies, kind="stable")
        energies, counts, values = energies[order], counts[:, order], values[:, order]
    else:
        raise IntegratorError("bracket refinement did not converge", None, plan.params.m)
    return energies, counts, values


# ---------------------------------------------------------------- band edges


@dataclass
class BandEdge:
    energy: float
    edge_type: int  # +2 or -2
    nodes: int
    parity: str
    period_label: str
    degenerate_with: Optional[int] = None

    @property
    def closed(self) -> bool:
        return self.degenerate_with is not None


def find_band_edges(
    params: PotentialParams, e_max: float | None = None, gaptol: float = GAPTOL, step: float = BASE_STEP
) -> list[BandEdge]:
    """All roots of D**2 - 4 below e_max, ascending, with types and node counts."""
    e_max = default_emax(params) if e_max is None else float(e_max)
    plan, e_min = _plan(params, e_max)
    energies, counts, values = _bracket_factors(plan, e_min, e_max, step)
    which, lo, hi, flo, fhi = [], [], [], [], []
    for f in range(4):
        for j in np.flatnonzero(np.diff(counts[f]) == 1):
            which.append(f)
            lo.append(energies[j])
            hi.append(energies[j + 1])
            flo.append(values[f, j])
            fhi.append(values[f, j + 1])
    if not which:
        return []
    which = np.array(which)
    flo, fhi = np.array(flo), np.array(fhi)
    lo, hi = np.array(lo), np.array(hi)
    # a grid point landing exactly on a root
    exact_lo = flo == 0
    exact_hi = fhi == 0
    same = (flo * fhi > 0)
    if same.any():
        raise IntegratorError("count jump without sign change", lo[same].tolist(), params.m)
    roots = np.where(exact_hi, hi, np.where(exact_lo, lo, np.nan))
    todo = np.isnan(roots)
    if todo.any():
        roots[todo] = _illinois(plan, which[todo], lo[todo], hi[todo], flo[todo], fhi[todo], _make_value_fn(plan, "factor"))
    order = np.lexsort((which, roots))
    roots, which = roots[order], which[order]
    res = propagate(plan, roots)
    theta_c = _theta(res.zeros[0], res.c, res.cp)
    theta_s = _theta(res.zeros[1], res.s, res.sp)
    double = 2 if params.equal_strengths else 1
    edges = []
    for i, (e, f) in enumerate(zip(roots, which)):
        name, dsign, parity = _FACTORS[f]
        if name == "NN":
            nodes = 2 * math.floor(theta_c[i] / math.pi)
        elif name == "DD":
            nodes = 2 * round(theta_s[i] / math.pi)
        elif name == "ND":
            nodes = 2 * round(theta_c[i] / math.pi) - 1
        else:
            nodes = 2 * math.floor(theta_s[i] / math.pi) + 1
        if params.equal_strengths:
            label = "K" if dsign > 0 else "2K"
        else:
            label = "2K" if dsign > 0 else "4K"
        edges.append(BandEdge(float(e), dsign, int(nodes) * double, parity, label))
    _pair_degenerate(edges, gaptol)
    _check_gap_bounds(params, edges)
    return edges


def _pair_degenerate(edges: list[BandEdge], gaptol: float):
    for i in range(1, len(edges) - 1, 2):
        lo, hi = edges[i], edges[i + 1]
        if lo.edge_type == hi.edge_type and hi.energy - lo.energy < gaptol:
            lo.degenerate_with, hi.degenerate_with = i + 1, i


def _check_gap_bounds(params: PotentialParams, edges: list[BandEdge]):
    if params.equal_strengths:
        return
    bounds = gap_bounds(params.a, params.b)
    open_2k = 1 + sum(1 for i in range(1, len(edges) - 1, 2) if not edges[i].closed and edges[i].edge_type == 2)
    open_4k = sum(1 for i in range(1, len(edges) - 1, 2) if not edges[i].closed and edges[i].edge_type == -2)
    if bounds.max_gaps_2k is not None and open_2k > bounds.max_gaps_2k:
        warnings.warn(f"{params}: {open_2k} period-2K gaps exceed the bound {bounds.max_gaps_2k}", RuntimeWarning)
    if bounds.max_gaps_4k is not None and open_4k > bounds.max_gaps_4k:
        warnings.warn(f"{params}: {open_4k} period-4K gaps exceed the bound {bounds.max_gaps_4k}", RuntimeWarning)


def oscillation_ordering_ok(edges: Sequence[BandEdge]) -> bool:
    """Types must read +2, -2, -2, +2, +2, -2, -2, ..."""
    expected = [2 if ((i + 1) // 2) % 2 == 0 else -2 for i in range(len(edges))]
    return [e.edge_type for e in edges] == expected


# ---------------------------------------------------------------- mid-band


def _midband_brackets(edges: Sequence[BandEdge], e_max: float, d_at_emax: float):
    points = []
    for e in edges:
        if points and e.closed and abs(points[-1][0] - e.energy) < GAPTOL * 10 and points[-1][1] == e.edge_type:
            continue
        points.append((e.energy, e.edge_type))
    brackets = [(e0, e1, t0) for (e0, t0), (e1, t1) in zip(points, points[1:]) if t0 != t1]
    if points and np.sign(d_at_emax) == -np.sign(points[-1][1]) and e_max > points[-1][0]:
        brackets.append((points[-1][0], e_max, points[-1][1]))
    return brackets


def _midband_roots(params: PotentialParams, edges: Sequence[BandEdge], e_max: float) -> list[float]:
    plan, _ = _plan(params, e_max)
    d_top = propagate(plan, [e_max])
    d_top = 2.0 * float(d_top.c[0] * d_top.sp[0] + d_top.s[0] * d_top.cp[0])
    brackets = _midband_brackets(edges, e_max, d_top)
    if not brackets:
        return []
    lo = np.array([b[0] for b in brackets])
    hi = np.array([b[1] for b in brackets])
    flo = np.array([b[2] / 2.0 for b in brackets])  # D/2 = +-1 at the edges
    r = propagate(plan, hi)
    fhi = r.c * r.sp + r.s * r.cp
    fhi = np.where(np.abs(hi - lo) > 0, fhi, -flo)
    roots = _illinois(plan, np.zeros(lo.size, dtype=int), lo, hi, flo, fhi, _make_value_fn(plan, "d"))
    return sorted(float(x) for x in roots)


def find_midband(params: PotentialParams, e_range: tuple[float, float] | None = None) -> list[float]:
    """All E in e_range with D(E) = 0."""
    lo, hi = e_range if e_range is not None else (-math.inf, default_emax(params))
    edges = find_band_edges(params, hi)
    return [e for e in _midband_roots(params, edges, hi) if lo <= e <= hi]


def root_near(energy: float, params: PotentialParams, kind: str = "edge", max_window: float = 0.05) -> Optional[float]:
    """Closest root of a secular factor ("edge") or of D ("mid") to energy.

    The window around energy widens by decades until some function changes
    sign, then that bracket is polished.  None if nothing is found within
    max_window.
    """
    if kind not in ("edge", "mid"):
        raise ValueError("kind must be 'edge' or 'mid'")
    scale = max(1.0, abs(energy))
    ceiling = energy + max_window * scale
    plan, _ = _plan(params, max(default_emax(params), float(math.ceil(ceiling)) + 1.0))
    value_fn = _make_value_fn(plan, "factor" if kind == "edge" else "d")

    def values(es):
        res = propagate(plan, np.asarray(es, dtype=float))
        if kind == "edge":
            return _factor_values(res)
        return (res.c * res.sp + res.s * res.cp)[None, :]

    centre = values([energy])[:, 0]
    if (centre == 0).any():
        return float(energy)
    w = 1e-10 * scale
    while w <= max_window * scale:
        lo, hi = values([energy - w, energy + w]).T
        best = None
        for f in range(centre.size):
            for a, fa, b, fb in ((energy - w, lo[f], energy, centre[f]), (energy, centre[f], energy + w, hi[f])):
                if fa * fb < 0:
                    r = float(_illinois(plan, np.array([f]), [a], [b], [fa], [fb], value_fn)[0])
                    if best is None or abs(r - energy) < abs(best - energy):
                        best = r
        if best is not None:
            return best
        w *= 10.0
    return None


# ---------------------------------------------------------------- structures


@dataclass
class BandStructure:
    params: PotentialParams
    e_max: float
    edges: list[BandEdge]
    midband: list[float]

    @property
    def gaps(self) -> list[tuple[int, float]]:
        """(lower edge index, width) for every complete gap above the ground edge."""
        return [(i, self.edges[i + 1].energy - self.edges[i].energy) for i in range(1, len(self.edges) - 1, 2)]

    @property
    def open_gaps(self) -> list[tuple[int, float]]:
        return [(i, w) for i, w in self.gaps if not self.edges[i].closed]

    @property
    def continuum_index(self) -> int:
        """Index of the edge where the continuum starts (upper edge of the last open gap)."""
        og = self.open_gaps
        return og[-1][0] + 1 if og else 0

    @property
    def continuum_threshold(self) -> float:
        return self.edges[self.continuum_index].energy if self.edges else math.nan

    @property
    def degenerate_levels(self) -> list[tuple[int, float]]:
        """Closed gaps strictly inside bound bands: (lower index, energy)."""
        top = self.continuum_index
        return [
            (i, 0.5 * (self.edges[i].energy + self.edges[i + 1].energy))
            for i, _ in self.gaps
            if self.edges[i].closed and i + 1 < top
        ]

    @property
    def ordering_ok(self) -> bool:
        return oscillation_ordering_ok(self.edges)


def analyze(params: PotentialParams, e_max: float | None = None, gaptol: float = GAPTOL) -> BandStructure:
    e_max = default_emax(params) if e_max is None else float(e_max)
    edges = find_band_edges(params, e_max, gaptol)
    return BandStructure(params, e_max, edges, _midband_roots(params, edges, e_max))


# ---------------------------------------------------------------- nodes


def count_nodes(energy: float, params: PotentialParams, edge_type: int, node_tol: float = 1e-7) -> int:
    """Sign changes over [0, 2K) of the (anti)periodic solution at a band edge."""
    span = 2.0 * params.K
    res, _ = adaptive([energy], params, span, rtol=FULL_RTOL, atol=FULL_ATOL, record=True)
    c_path, s_path = res.path[:, 0, 0, 0], res.path[:, 0, 1, 0]
    if params.equal_strengths:
        mono = monodromy(energy, params)
    else:  # the recorded span is exactly one period
        mat = np.array([[res.c[0], res.s[0]], [res.cp[0], res.sp[0]]])
        _det_check(mat, energy, params.m)
        mono = Monodromy(mat, float(energy), params.period)
    rho = 1.0 if edge_type > 0 else -1.0
    b = mono.matrix - rho * np.eye(2)
    if np.max(np.abs(b)) < 1e-6 * max(1.0, np.max(np.abs(mono.matrix))):
        counts = {_sign_changes(c_path, node_tol), _sign_changes(s_path, node_tol)}
        if len(counts) != 1:
            raise AmbiguousNodeError(f"degenerate solutions disagree on node count: {sorted(counts)}")
        return counts.pop()
    # null vector of M - rho I
    rows = b if abs(b[0]).sum() >= abs(b[1]).sum() else b[::-1]
    v = np.array([rows[0, 1], -rows[0, 0]])
    return _sign_changes(v[0] * c_path + v[1] * s_path, node_tol)


def _sign_changes(vals: np.ndarray, node_tol: float) -> int:
    vals = np.asarray(vals[:-1])  # drop x = 2K, the image of x = 0
    tol = node_tol * np.max(np.abs(vals))
    count = 1 if abs(vals[0]) <= tol else 0
    signs = np.where(np.abs(vals) > tol, np.sign(vals), 0.0)
    idx = np.flatnonzero(signs)
    if idx.size == 0:
        raise AmbiguousNodeError("solution vanishes on the whole grid")
    for i0, i1 in zip(idx, idx[1:]):
        if signs[i0] != signs[i1]:
            count += 1
        elif i1 - i0 > 1:
            raise AmbiguousNodeError(f"near-zero without crossing between samples {i0} and {i1}")
    return count


# ---------------------------------------------------------------- scans


@dataclass
class BandChart:
    a: object
    b: object
    e_max: float
    structures: list[BandStructure]
    lost_track: list[tuple[float, int]] = field(default_factory=list)
    failures: list[tuple[float, str]] = field(default_factory=list)

    @property
    def m_grid(self) -> list[float]:
        return [s.params.m for s in self.structures]

    def level_series(self, lower_index: int) -> list[tuple[float, float]]:
        """(m, degenerate level) for the closed gap whose lower edge has this index."""
        out = []
        for s in self.structures:
            for i, e in s.degenerate_levels:
                if i == lower_index:
                    out.append((s.params.m, e))
        return out

    def rows(self) -> list[dict]:
        """One row per edge, ordered by m then edge index; failed m values get a flagged row."""
        out = []
        for m, message in self.failures:
            out.append({k: "" for k in CSV_COLUMNS} | {"m": _fmt(m), "edge_index": "FAILED", "midband_energies": message})
        for s in self.structures:
            mid = ";".join(_fmt(x) for x in s.midband)
            edges = s.edges
            for i, e in enumerate(edges):
                gap = ""
                if i % 2 == 1 and i + 1 < len(edges):
                    gap = _fmt(edges[i + 1].energy - e.energy)
                out.append(
                    {
                        "m": _fmt(s.params.m),
                        "edge_index": i,
                        "E": _fmt(e.energy),
                        "D_sign": "+2" if e.edge_type > 0 else "-2",
                        "nodes": e.nodes,
                        "gap_to_next": gap,
                        "degenerate_flag": int(e.closed),
                        "midband_energies": mid,
                    }
                )
        out.sort(key=lambda r: float(r["m"]))
        return out


CSV_COLUMNS = ("m", "edge_index", "E", "D_sign", "nodes", "gap_to_next", "degenerate_flag", "midband_energies")


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _analyze_at(args):
    a, b, m, e_max, gaptol, keep_going = args
    try:
        return analyze(PotentialParams(a, b, m), e_max, gaptol)
    except (IntegratorError, AmbiguousNodeError) as exc:
        if not keep_going:
            raise
        return (m, str(exc))


def scan_m(
    a,
    b,
    m_grid: Iterable[float],
    e_max: float | None = None,
    workers: int = 1,
    keep_going: bool = False,
    gaptol: float = GAPTOL,
) -> BandChart:
    """Band structure over a grid of m; results ordered by m.

    With keep_going, numerical failures at single m values are recorded
    in ``chart.failures`` instead of aborting the scan.
    """
    m_grid = sorted(float(m) for m in m_grid)
    if any(m < 0 or m > 1 - 1e-6 for m in m_grid):
        raise ValueError("m grid must lie in [0, 1 - 1e-6]")
    template = PotentialParams(a, b, 0.0)
    e_max = default_emax(template) if e_max is None else float(e_max)
    jobs = [(template.a, template.b, m, e_max, gaptol, keep_going) for m in m_grid]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_analyze_at, jobs))
    else:
        results = [_analyze_at(j) for j in jobs]
    structures = [r for r in results if isinstance(r, BandStructure)]
    failures = [r for r in results if not isinstance(r, BandStructure)]
    chart = BandChart(template.a, template.b, e_max, structures, failures=failures)
    chart.lost_track = _track(structures)
    return chart


def _track(structures: Sequence[BandStructure]) -> list[tuple[float, int]]:
    """Flag edges whose change between neighbouring m exceeds a slope-based bound."""
    lost = []
    for j in range(1, len(structures)):
        prev, cur = structures[j - 1], structures[j]
        dm = cur.params.m - prev.params.m
        n = min(len(prev.edges), len(cur.edges))
        if len(prev.edges) != len(cur.edges):
            lost.extend((cur.params.m, i) for i in range(n, max(len(prev.edges), len(cur.edges))))
        for i in range(n):
            jump = abs(cur.edges[i].energy - prev.edges[i].energy)
            slope = 0.0
            if j >= 2 and i < len(structures[j - 2].edges):
                before = structures[j - 2]
                slope = abs(prev.edges[i].energy - before.edges[i].energy) / max(prev.params.m - before.params.m, 1e-15)
            bound = 4.0 * slope * dm + 2.0 * (abs(cur.params.p) + abs(cur.params.q)) * dm + 1e-6
            if jump > bound or cur.edges[i].edge_type != prev.edges[i].edge_type:
                lost.append((cur.params.m, i))
    return lost


def extrapolate(ms: Sequence[float], values: Sequence[float], to: float) -> float:
    """Least-squares straight line through (m, value), evaluated at m = to."""
    coef = np.polyfit(np.asarray(ms, dtype=float) - to, np.asarray(values, dtype=float), 1)
    return float(coef[-1])
