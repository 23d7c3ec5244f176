"""Real roots of rational polynomials via Sturm sequences.

Everything up to the final float conversion runs in exact Fraction
arithmetic, so multiplicities and the count of real roots are exact.
"""

from __future__ import annotations

from fractions import Fraction

from .algebra import Poly, poly_gcd

__all__ = ["ComplexRootsError", "squarefree_factors", "sturm_chain", "real_roots"]


class ComplexRootsError(ArithmeticError):
    """The polynomial has non-real roots where only real ones were expected."""


def squarefree_factors(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: p = lead * prod(f_i ** i) with f_i squarefree and coprime."""
    out = []
    dp = p.derivative()
    a = poly_gcd(p, dp)
    b = p // a
    c = dp // a
    i = 1
    while b.degree > 0:
        d = c - b.derivative()
        f = poly_gcd(b, d)
        if f.degree > 0:
            out.append((f, i))
        b = b // f
        c = d // f
        i += 1
    return out


def sturm_chain(p: Poly) -> list[Poly]:
    chain = [p, p.derivative()]
    while chain[-1].degree > 0:
        r = chain[-2] % chain[-1]
        if r.is_zero():
            break
        chain.append(-r)
    return chain


def _variations(chain: list[Poly], x: Fraction) -> int:
    signs = [v for v in (q(x) for q in chain) if v != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u < 0) != (v < 0))


def _cauchy_bound(p: Poly) -> Fraction:
    lead = abs(p.lead)
    return 1 + max((abs(x) / lead for x in p.c[:-1]), default=Fraction(0))


def _isolate(p: Poly) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals (lo, hi] each containing exactly one root of squarefree p."""
    chain = sturm_chain(p)
    bound = _cauchy_bound(p)
    stack = [(-bound, bound, _variations(chain, -bound), _variations(chain, bound))]
    found = []
    while stack:
        lo, hi, vlo, vhi = stack.pop()
        n = vlo - vhi
        if n == 0:
            continue
        if n == 1:
            found.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        vmid = _variations(chain, mid)
        stack.append((lo, mid, vlo, vmid))
        stack.append((mid, hi, vmid, vhi))
    return sorted(found)


def _float_sign(coeffs: list[float], abs_coeffs: list[float], x: float) -> int:
    """Sign of p(x) from float Horner, or 0 when rounding could flip it."""
    val = 0.0
    mag = 0.0
    ax = abs(x)
    for c, a in zip(coeffs, abs_coeffs):
        val = val * x + c
        mag = mag * ax + a
    if abs(val) > 4.0 * (len(coeffs) + 1) * 2.3e-16 * mag:
        return 1 if val > 0 else -1
    return 0


def _refine(p: Poly, lo: Fraction, hi: Fraction, rel: float) -> float:
    """Bisect the sign change of p on (lo, hi] down to float resolution.

    Signs come from float evaluation whenever its error bound allows and
    from exact evaluation otherwise.
    """
    if p(hi) == 0:
        return float(hi)
    flo = p(lo)
    # a root sitting exactly on lo belongs to the neighbouring interval;
    # the sign just to its right is the sign of p' there
    slo = (flo > 0) if flo != 0 else (p.derivative()(lo) > 0)
    try:
        coeffs = [float(c) for c in reversed(p.c)]
    except OverflowError:
        coeffs = []
    abs_coeffs = [abs(c) for c in coeffs]
    for _ in range(200):
        width = hi - lo
        scale = max(1.0, abs(float(hi)))
        if float(width) <= rel * scale:
            break
        mid = (lo + hi) / 2
        # keep denominators small: snap mid to a dyadic float
        fm = Fraction(float(mid))
        sign = 0
        if lo < fm < hi:
            mid = fm
            if coeffs:
                sign = _float_sign(coeffs, abs_coeffs, float(mid))
        if sign == 0:
            val = p(mid)
            if val == 0:
                return float(mid)
            sign = 1 if val > 0 else -1
        if (sign > 0) == slo:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def real_roots(p: Poly, rel: float = 1e-16, allow_complex: bool = False) -> list[float]:
    """All real roots of p, repeated by multiplicity, ascending.

    Raises ComplexRootsError if p has non-real roots (unless allow_complex).
    """
    if p.degree < 1:
        return []
    roots: list[float] = []
    counted = 0
    for factor, mult in squarefree_factors(p):
        for lo, hi in _isolate(factor):
            r = _refine(factor, lo, hi, rel)
            roots.extend([r] * mult)
            counted += mult
    if counted != p.degree and not allow_complex:
        raise ComplexRootsError(f"only {counted} of {p.degree} roots are real")
    return sorted(roots)
