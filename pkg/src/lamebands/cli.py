"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 failed
verification.  a and b are exact rationals ("7/2"); m may be decimal.

Tolerances can be overridden from the environment with
LAMEBANDS_GAPTOL, LAMEBANDS_RESIDUAL_TOL and LAMEBANDS_FLOQUET_TOL;
explicit flags win over the environment.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Optional, Sequence

from . import catalog
from .floquet import CSV_COLUMNS, GAPTOL, AmbiguousNodeError, analyze, find_midband, scan_m
from .integrate import IntegratorError
from .model import PotentialParams, parse_rational
from .qes import ComplexRootsError

__all__ = ["RunConfig", "UsageError", "main", "run_edges", "run_scan", "run_midband", "run_verify", "run_catalog"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
NUMERIC_ERRORS = (IntegratorError, AmbiguousNodeError, ComplexRootsError, FloatingPointError)
VERIFY_M = (0.1, 0.5, 0.9)


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    a: Optional[Fraction] = None
    b: Optional[Fraction] = None
    m: list[float] = field(default_factory=list)
    e_max: Optional[float] = None
    e_min: Optional[float] = None
    out: Optional[str] = None
    format: str = "csv"
    workers: int = 1
    gaptol: float = GAPTOL
    residual_tol: float = catalog.RESIDUAL_TOL
    floquet_tol: float = catalog.FLOQUET_TOL
    only: list[str] = field(default_factory=list)
    perturb: float = 0.0
    nodes: bool = True

    def params(self, m: float) -> PotentialParams:
        return PotentialParams(self.a, self.b, m)


# ---------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _decimal(text: str) -> Decimal:
    try:
        if "/" in text:
            f = Fraction(text)
            return Decimal(f.numerator) / Decimal(f.denominator)
        d = Decimal(text)
    except (InvalidOperation, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not d.is_finite():
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return d


def _m_list(text: str) -> list[Decimal]:
    return [_decimal(t) for t in text.split(",") if t.strip()]


def _m_range(text: str) -> list[Decimal]:
    """START:STOP:STEP with both ends included; built in decimal arithmetic."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected START:STOP:STEP")
    start, stop, step = (_decimal(p) for p in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("need STEP > 0 and STOP >= START")
    count = int((stop - start) / step) + 1
    if count > 100_000:
        raise argparse.ArgumentTypeError("m range has too many points")
    return [start + k * step for k in range(count)]


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = float(raw)
    except ValueError:
        raise UsageError(f"{name} is not a number: {raw!r}") from None
    if not value > 0:
        raise UsageError(f"{name} must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lamebands", description="Band structure of associated Lame potentials.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def potential(p, many=False):
        p.add_argument("--a", type=_rational, required=True, help="rational, e.g. 7/2")
        p.add_argument("--b", type=_rational, required=True, help="rational, e.g. 1/2")
        if many:
            grid = p.add_mutually_exclusive_group(required=True)
            grid.add_argument("--m", type=_m_list, help="comma-separated m values")
            grid.add_argument("--m-range", type=_m_range, metavar="START:STOP:STEP")
        else:
            p.add_argument("--m", type=_decimal, required=True)
        p.add_argument("--emax", type=float, help="energy ceiling (default from a, b)")
        p.add_argument("--gaptol", type=float, help="gap width below which a gap counts as closed")

    def output(p, formats, default):
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--out", help="write to this file instead of stdout")

    p = sub.add_parser("edges", help="band edges at one m")
    potential(p)
    output(p, ("table", "csv", "json"), "table")

    p = sub.add_parser("scan", help="band edges over a grid of m (CSV)")
    potential(p, many=True)
    p.add_argument("--workers", type=int, default=1)
    output(p, ("csv", "json"), "csv")

    p = sub.add_parser("midband", help="in-band states with D = 0")
    potential(p)
    p.add_argument("--emin", type=float)
    output(p, ("table", "csv", "json"), "table")

    p = sub.add_parser("verify", help="cross-check the catalog of closed forms")
    p.add_argument("--m", type=_m_list, help="m values (default 0.1,0.5,0.9)")
    p.add_argument("--only", action="append", default=[], metavar="ID", help="restrict to these entries")
    p.add_argument("--perturb", type=float, default=0.0, metavar="DELTA", help="shift every energy (test hook)")
    p.add_argument("--no-nodes", action="store_true", help="skip node counting")
    p.add_argument("--residual-tol", type=float)
    p.add_argument("--floquet-tol", type=float)
    p.add_argument("--workers", type=int, default=1)
    output(p, ("table", "json"), "table")

    p = sub.add_parser("catalog", help="list or dump catalog entries")
    p.add_argument("--only", action="append", default=[], metavar="ID")
    output(p, ("table", "json"), "table")
    return parser


def _check_m(values: Sequence[Decimal]) -> list[float]:
    out = []
    for d in values:
        if d < 0 or d >= 1:
            raise UsageError(f"m must satisfy 0 <= m < 1, got {d}")
        out.append(float(d))
    return out


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    """Validate parsed arguments; raises UsageError before any computation."""
    cfg = RunConfig(command=ns.command)
    cfg.format = ns.format
    cfg.out = ns.out
    cfg.gaptol = _env_float("LAMEBANDS_GAPTOL", GAPTOL)
    cfg.residual_tol = _env_float("LAMEBANDS_RESIDUAL_TOL", catalog.RESIDUAL_TOL)
    cfg.floquet_tol = _env_float("LAMEBANDS_FLOQUET_TOL", catalog.FLOQUET_TOL)
    for name in ("gaptol", "residual_tol", "floquet_tol"):
        value = getattr(ns, name, None)
        if value is not None:
            if not value > 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
            setattr(cfg, name, value)
    if hasattr(ns, "workers"):
        if ns.workers < 1:
            raise UsageError("--workers must be at least 1")
        cfg.workers = ns.workers

    if ns.command in ("edges", "scan", "midband"):
        cfg.a, cfg.b = ns.a, ns.b
        if ns.command == "scan":
            cfg.m = _check_m(ns.m if ns.m is not None else ns.m_range)
            if not cfg.m:
                raise UsageError("empty m grid")
            if max(cfg.m) > 1 - 1e-6:
                raise UsageError("m too close to 1 for a scan (K diverges)")
        else:
            cfg.m = _check_m([ns.m])
        p, q = cfg.a * (cfg.a + 1), cfg.b * (cfg.b + 1)
        if p < q:
            raise UsageError(f"need p >= q, got p={p} q={q}; swap a and b (the spectra agree)")
        if ns.emax is not None:
            if not ns.emax > 0:
                raise UsageError("--emax must be positive")
            cfg.e_max = ns.emax
        cfg.e_min = getattr(ns, "emin", None)
    elif ns.command == "verify":
        cfg.m = _check_m(ns.m) if ns.m else list(VERIFY_M)
        if any(m == 0 for m in cfg.m):
            raise UsageError("verify needs 0 < m < 1")
        cfg.only = ns.only
        cfg.perturb = ns.perturb
        cfg.nodes = not ns.no_nodes
    else:
        cfg.only = ns.only
    for entry_id in cfg.only:
        try:
            catalog.lookup(entry_id)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    return cfg


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _csv(rows: list[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _table(rows: list[dict], columns: Sequence[str]) -> str:
    cells = [[str(c) for c in columns]] + [[str(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return "".join("  ".join(v.rjust(w) for v, w in zip(row, widths)).rstrip() + "\n" for row in cells)


def _emit(text: str, cfg: RunConfig, stdout) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _header(params: PotentialParams) -> dict:
    return {
        "a": str(params.a),
        "b": str(params.b),
        "m": _fmt(params.m),
        "p": str(params.p),
        "q": str(params.q),
        "period": "K" if params.equal_strengths else "2K",
    }


# ---------------------------------------------------------------- commands

EDGE_COLUMNS = ("index", "E", "D_sign", "period", "parity", "nodes", "gap_to_next", "closed")


def run_edges(cfg: RunConfig, stdout=sys.stdout) -> int:
    params = cfg.params(cfg.m[0])
    bs = analyze(params, cfg.e_max, cfg.gaptol)
    rows = []
    for i, e in enumerate(bs.edges):
        gap = ""
        if i % 2 == 1 and i + 1 < len(bs.edges):
            gap = _fmt(bs.edges[i + 1].energy - e.energy)
        rows.append(
            {
                "index": i,
                "E": _fmt(e.energy),
                "D_sign": "+2" if e.edge_type > 0 else "-2",
                "period": e.period_label,
                "parity": e.parity,
                "nodes": e.nodes,
                "gap_to_next": gap,
                "closed": int(e.closed),
            }
        )
    head = _header(params)
    if cfg.format == "json":
        text = _json(
            head
            | {
                "e_max": bs.e_max,
                "open_gaps": len(bs.open_gaps),
                "zero_width_gaps": [_fmt(e) for _, e in bs.degenerate_levels],
                "continuum_from": _fmt(bs.continuum_threshold),
                "edges": rows,
                "midband": [_fmt(x) for x in bs.midband],
            }
        )
    elif cfg.format == "csv":
        text = _csv(rows, EDGE_COLUMNS)
    else:
        info = " ".join(f"{k}={v}" for k, v in head.items())
        summary = (
            f"# open gaps: {len(bs.open_gaps)}  zero-width gaps: {len(bs.degenerate_levels)}"
            f"  continuum from E={_fmt(bs.continuum_threshold)}"
        )
        text = f"# {info}\n{summary}\n" + _table(rows, EDGE_COLUMNS)
    _emit(text, cfg, stdout)
    return EXIT_OK


def run_scan(cfg: RunConfig, stdout=sys.stdout) -> int:
    chart = scan_m(cfg.a, cfg.b, cfg.m, cfg.e_max, workers=cfg.workers, keep_going=True, gaptol=cfg.gaptol)
    rows = chart.rows()
    if cfg.format == "json":
        text = _json(
            {
                "a": str(chart.a),
                "b": str(chart.b),
                "e_max": _fmt(chart.e_max),
                "rows": rows,
                "lost_track": [[_fmt(m), i] for m, i in chart.lost_track],
            }
        )
    else:
        text = _csv(rows, CSV_COLUMNS)
    _emit(text, cfg, stdout)
    for m, message in chart.failures:
        print(f"numerical failure at m={_fmt(m)}: {message}", file=sys.stderr)
    return EXIT_NUMERIC if chart.failures else EXIT_OK


def run_midband(cfg: RunConfig, stdout=sys.stdout) -> int:
    params = cfg.params(cfg.m[0])
    e_range = None
    if cfg.e_min is not None or cfg.e_max is not None:
        lo = cfg.e_min if cfg.e_min is not None else -1e300
        hi = cfg.e_max if cfg.e_max is not None else 1e300
        e_range = (lo, hi)
    roots = find_midband(params, e_range)
    rows = [{"index": i, "E": _fmt(e)} for i, e in enumerate(roots)]
    if cfg.format == "json":
        text = _json(_header(params) | {"midband": [r["E"] for r in rows]})
    elif cfg.format == "csv":
        text = _csv(rows, ("index", "E"))
    else:
        info = " ".join(f"{k}={v}" for k, v in _header(params).items())
        text = f"# {info}\n" + _table(rows, ("index", "E"))
    _emit(text, cfg, stdout)
    return EXIT_OK


def _check_entry(job):
    entry_id, ms, cfg = job
    entry = catalog.lookup(entry_id)
    return [
        catalog.crosscheck(entry, m, cfg.residual_tol, cfg.floquet_tol, perturbation=cfg.perturb, check_nodes=cfg.nodes)
        for m in ms
    ]


def run_verify(cfg: RunConfig, stdout=sys.stdout) -> int:
    selected = [catalog.lookup(i) for i in cfg.only] if cfg.only else catalog.entries()
    jobs = [(e.id, cfg.m, cfg) for e in selected]
    if cfg.workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_check_entry, jobs))
    else:
        results = [_check_entry(j) for j in jobs]

    failed = [e.id for e, reports in zip(selected, results) if not all(r.passed for r in reports)]
    passed = len(selected) - len(failed)
    if cfg.format == "json":
        text = _json(
            {
                "m": [_fmt(m) for m in cfg.m],
                "passed": passed,
                "total": len(selected),
                "reports": [
                    {
                        "id": r.entry_id,
                        "m": _fmt(r.m),
                        "energies": [_fmt(e) for e in r.energies],
                        "residual": float(r.residual),
                        "floquet_error": float(r.floquet_error),
                        "qes_match": r.qes_match,
                        "nodes_ok": r.nodes_ok,
                        "independent": r.independent,
                        "failures": r.failures,
                    }
                    for reports in results
                    for r in reports
                ],
            }
        )
    else:
        lines = []
        for entry, reports in zip(selected, results):
            ok = all(r.passed for r in reports)
            if len(selected) == 1 or not ok:
                lines.append(f"{entry.id}  {entry.energy.text}  {'PASS' if ok else 'FAIL'}")
                for r in reports:
                    es = ", ".join(_fmt(e) for e in r.energies)
                    lines.append(
                        f"  m={_fmt(r.m)}  E=[{es}]  residual={r.residual:.2e}  floquet={r.floquet_error:.2e}"
                    )
                    lines.extend(f"    {msg}" for msg in r.failures)
        verdict = "PASS" if not failed else "FAIL"
        lines.append(f"{passed}/{len(selected)} entries {verdict}")
        if failed:
            lines.append("failed: " + ", ".join(failed))
        text = "\n".join(lines) + "\n"
    _emit(text, cfg, stdout)
    return EXIT_VERIFY if failed else EXIT_OK


def run_catalog(cfg: RunConfig, stdout=sys.stdout) -> int:
    selected = [catalog.lookup(i) for i in cfg.only] if cfg.only else catalog.entries()
    if cfg.format == "json":
        text = _json({"version": catalog.CATALOG_VERSION, "entries": [e.to_json() for e in selected]})
    else:
        rows = [
            {"id": e.id, "state": e.state_label, "period": e.period, "kind": e.kind, "E": e.energy.text}
            for e in selected
        ]
        cols = ("id", "state", "period", "kind", "E")
        cells = [list(cols)] + [[r[c] for c in cols] for r in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
        text = "".join("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n" for row in cells)
    _emit(text, cfg, stdout)
    return EXIT_OK


COMMANDS = {"edges": run_edges, "scan": run_scan, "midband": run_midband, "verify": run_verify, "catalog": run_catalog}


def main(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = config_from_args(ns)
    except UsageError as exc:
        print(f"lamebands: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.command](cfg, stdout)
    except NUMERIC_ERRORS as exc:
        print(f"lamebands: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"lamebands: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
