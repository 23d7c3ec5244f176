"""Jacobi elliptic functions sn, cn, dn and the complete integral K(m).

The second argument is always the parameter m = k**2, with 0 <= m < 1.
Evaluation uses the descending Landen transformation seeded by the
arithmetic-geometric mean, after reducing the argument modulo 4K.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = ["JacobiTriple", "complete_K", "jacobi", "check_modulus", "sqrt_dn_plus_cn"]


class JacobiTriple(NamedTuple):
    sn: float | np.ndarray
    cn: float | np.ndarray
    dn: float | np.ndarray


def check_modulus(m) -> float:
    m = float(m)
    if not math.isfinite(m) or m < 0.0 or m >= 1.0:
        raise ValueError(f"modulus parameter must satisfy 0 <= m < 1, got {m!r}")
    return m


@lru_cache(maxsize=256)
def _agm_ladder(m: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """AGM sequences a_n and c_n started from (1, sqrt(1-m), sqrt(m)).

    The ladder stops once c_n/a_n drops below 1e-17, which bounds the
    modulus left over after the last Landen step.
    """
    a, b, c = 1.0, math.sqrt(1.0 - m), math.sqrt(m)
    avals, cvals = [a], [c]
    while c > 1e-17 * a and len(avals) < 40:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        # c = (a_old - b_old) / 2 without the cancellation
        c = c * c / (4.0 * a)
        avals.append(a)
        cvals.append(c)
    return tuple(avals), tuple(cvals)


def complete_K(m) -> float:
    """Complete elliptic integral of the first kind, K(m) = pi / (2 AGM(1, sqrt(1-m)))."""
    m = check_modulus(m)
    avals, _ = _agm_ladder(m)
    return math.pi / (2.0 * avals[-1])


def jacobi(x, m) -> JacobiTriple:
    """Return (sn, cn, dn) at x for parameter m.

    Scalars give floats; arrays are evaluated elementwise and keep their
    shape.
    """
    m = check_modulus(m)
    avals, cvals = _agm_ladder(m)
    n = len(avals) - 1
    period = 2.0 * math.pi / avals[-1]  # 4K
    if np.ndim(x) == 0:
        x = float(x)
        if not math.isfinite(x):
            raise ValueError("argument must be finite")
        u = x - period * round(x / period)
        phi = (2.0**n) * avals[n] * u
        for j in range(n, 0, -1):
            phi = 0.5 * (phi + math.asin(cvals[j] / avals[j] * math.sin(phi)))
        sn, cn = math.sin(phi), math.cos(phi)
        return JacobiTriple(sn, cn, math.sqrt((1.0 - m) + m * cn * cn))
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("argument must be finite")
    u = x - period * np.round(x / period)
    phi = (2.0**n) * avals[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(cvals[j] / avals[j] * np.sin(phi)))
    sn, cn = np.sin(phi), np.cos(phi)
    return JacobiTriple(sn, cn, np.sqrt((1.0 - m) + m * cn * cn))


def sqrt_dn_plus_cn(x, m, sign: int = 1):
    """Analytic square root of dn(x) + sign*cn(x), built from half-argument values.

    sqrt(dn + cn) = sqrt(2) cn(x/2) dn(x/2) / sqrt(1 - m sn^4(x/2)) and
    sqrt(dn - cn) = sqrt(2(1-m)) sn(x/2) / sqrt(1 - m sn^4(x/2)).
    Unlike the principal square root these change sign where the radicand
    has a double zero, so the result is smooth with period 8K.
    """
    m = check_modulus(m)
    s, c, d = jacobi(np.asarray(x, dtype=float) * 0.5, m)
    denom = np.sqrt(1.0 - m * s**4)
    if sign > 0:
        out = math.sqrt(2.0) * c * d / denom
    else:
        out = math.sqrt(2.0 * (1.0 - m)) * s / denom
    return float(out) if np.ndim(out) == 0 else out
