"""Exact linear algebra over a field given by a small adapter object.

Two fields are used: Q(m) (RatFunc entries, exact closure certificates)
and Z/pZ with m specialised to a fixed residue (a cheap screen that can
only over-estimate invariant subspaces, never miss one).
"""

from __future__ import annotations

from fractions import Fraction

from .algebra import Poly, RatFunc

__all__ = ["RatField", "ModPField", "rref", "nullspace", "column_basis", "invariant_subspace", "solve", "charpoly"]


class RatField:
    zero = RatFunc(0)
    one = RatFunc(1)

    @staticmethod
    def convert(x) -> RatFunc:
        return RatFunc.of(x)

    @staticmethod
    def is_zero(x) -> bool:
        return x.is_zero()

    @staticmethod
    def add(x, y):
        return x + y

    @staticmethod
    def sub(x, y):
        return x - y

    @staticmethod
    def mul(x, y):
        return x * y

    @staticmethod
    def neg(x):
        return -x

    @staticmethod
    def inv(x):
        return x.inverse()


class ModPField:
    """Integers mod a Mersenne prime with m replaced by a fixed residue."""

    def __init__(self, prime: int = (1 << 61) - 1, m_residue: int = 982_451_653):
        self.p = prime
        self.m_residue = m_residue % prime
        self.zero = 0
        self.one = 1

    def convert(self, x) -> int:
        p = self.p
        if isinstance(x, RatFunc):
            return self.convert(x.num) * pow(self.convert(x.den), -1, p) % p
        if isinstance(x, Poly):
            acc = 0
            for coef in reversed(x.c):
                acc = (acc * self.m_residue + self.convert(coef)) % p
            return acc
        x = Fraction(x)
        return x.numerator * pow(x.denominator, -1, p) % p

    @staticmethod
    def is_zero(x) -> bool:
        return x == 0

    def add(self, x, y):
        return (x + y) % self.p

    def sub(self, x, y):
        return (x - y) % self.p

    def mul(self, x, y):
        return x * y % self.p

    def neg(self, x):
        return -x % self.p

    def inv(self, x):
        return pow(x, -1, self.p)


def rref(rows: list[list], field) -> tuple[list[list], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    a = [list(r) for r in rows]
    if not a:
        return [], []
    ncols = len(a[0])
    pivots = []
    r = 0
    for col in range(ncols):
        pr = next((i for i in range(r, len(a)) if not field.is_zero(a[i][col])), None)
        if pr is None:
            continue
        a[r], a[pr] = a[pr], a[r]
        inv = field.inv(a[r][col])
        a[r] = [field.mul(inv, v) for v in a[r]]
        for i in range(len(a)):
            if i != r and not field.is_zero(a[i][col]):
                f = a[i][col]
                a[i] = [field.sub(u, field.mul(f, v)) for u, v in zip(a[i], a[r])]
        pivots.append(col)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def nullspace(rows: list[list], ncols: int, field) -> list[list]:
    """Basis of {x : rows @ x = 0}, one list per basis vector."""
    red, pivots = rref(rows, field)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [field.zero] * ncols
        v[fc] = field.one
        for row, pc in zip(red, pivots):
            v[pc] = field.neg(row[fc])
        basis.append(v)
    return basis


def column_basis(vectors: list[list], field) -> list[list]:
    """Canonical basis (RREF rows) of the span of the given vectors."""
    red, _ = rref(vectors, field)
    return red


def _matvec(mat: list[list], v: list, field) -> list:
    out = []
    for row in mat:
        acc = field.zero
        for x, y in zip(row, v):
            if not field.is_zero(x) and not field.is_zero(y):
                acc = field.add(acc, field.mul(x, y))
        out.append(acc)
    return out


def invariant_subspace(nmat: list[list], smat: list[list], field) -> list[list]:
    """Largest U with N U contained in S U, for injective S.

    nmat and smat are w x n (images of the n basis vectors as columns).
    Returns a list of vectors (length n) spanning U, in canonical form.
    """
    n = len(nmat[0]) if nmat else 0
    u = [[field.one if i == j else field.zero for i in range(n)] for j in range(n)]
    while u:
        k = len(u)
        nu = [_matvec(nmat, vec, field) for vec in u]
        su = [_matvec(smat, vec, field) for vec in u]
        # rows of [NU | -SU]
        w = len(nmat)
        rows = [[nu[j][i] for j in range(k)] + [field.neg(su[j][i]) for j in range(k)] for i in range(w)]
        ker = nullspace(rows, 2 * k, field)
        xs = [vec[:k] for vec in ker]
        new = []
        for x in xs:
            combo = [field.zero] * n
            for coef, vec in zip(x, u):
                if not field.is_zero(coef):
                    combo = [field.add(c, field.mul(coef, e)) for c, e in zip(combo, vec)]
            new.append(combo)
        new = column_basis(new, field)
        if len(new) == k:
            return new
        u = new
    return []


def solve(lhs: list[list], rhs: list[list], field) -> list[list]:
    """Solve lhs @ X = rhs for X (lhs w x k of full column rank, consistent system)."""
    k = len(lhs[0])
    r = len(rhs[0])
    aug = [list(a) + list(b) for a, b in zip(lhs, rhs)]
    red, pivots = rref(aug, field)
    if pivots[:k] != list(range(k)) or any(p >= k for p in pivots[k:]) or len(pivots) != k:
        raise ArithmeticError("system is singular or inconsistent")
    return [red[i][k : k + r] for i in range(k)]


def charpoly(mat: list[list], field=RatField) -> list:
    """Coefficients (ascending) of det(x I - mat) by Faddeev-LeVerrier."""
    n = len(mat)
    coeffs = [field.zero] * (n + 1)
    coeffs[n] = field.one
    prev = [[field.zero] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{n-k+1} I
        mk = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = field.zero
                for t in range(n):
                    if not field.is_zero(mat[i][t]) and not field.is_zero(prev[t][j]):
                        acc = field.add(acc, field.mul(mat[i][t], prev[t][j]))
                if i == j:
                    acc = field.add(acc, coeffs[n - k + 1])
                row.append(acc)
            mk.append(row)
        trace = field.zero
        for i in range(n):
            for t in range(n):
                if not field.is_zero(mat[i][t]) and not field.is_zero(mk[t][i]):
                    trace = field.add(trace, field.mul(mat[i][t], mk[t][i]))
        coeffs[n - k] = field.neg(field.mul(trace, field.convert(Fraction(1, k))))
        prev = mk
    return coeffs
