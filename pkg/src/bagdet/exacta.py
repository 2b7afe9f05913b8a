"""Exact rational linear algebra over ``fractions.Fraction``.

Vectors are tuples of Fractions and matrices are tuples of row tuples.
Nothing in here touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

Vector = tuple
Matrix = tuple


class DimensionError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


def vec(values) -> Vector:
    return tuple(Fraction(v) for v in values)


def mat(rows) -> Matrix:
    rows = tuple(vec(r) for r in rows)
    if rows and len({len(r) for r in rows}) != 1:
        raise DimensionError("matrix rows have different lengths")
    return rows


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def dot(u: Sequence, v: Sequence) -> Fraction:
    if len(u) != len(v):
        raise DimensionError(f"dot product of lengths {len(u)} and {len(v)}")
    return sum((Fraction(a) * b for a, b in zip(u, v)), Fraction(0))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a and b and len(a[0]) != len(b):
        raise DimensionError("inner dimensions differ")
    cols = list(zip(*b)) if b else []
    return tuple(tuple(dot(row, col) for col in cols) for row in a)


def matvec(m: Matrix, v: Sequence) -> Vector:
    return tuple(dot(row, v) for row in m)


def transpose(m: Matrix) -> Matrix:
    return tuple(zip(*m))


def _rref(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form, pivoting on the first nonzero entry."""
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        lead = rows[r][c]
        rows[r] = [x / lead for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(m: Matrix) -> int:
    if not m:
        return 0
    return len(_rref([list(r) for r in m], len(m[0]))[1])


def determinant(m: Matrix) -> Fraction:
    n = len(m)
    if any(len(r) != n for r in m):
        raise DimensionError("determinant of a non-square matrix")
    rows = [list(map(Fraction, r)) for r in m]
    det = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            det = -det
        det *= rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                f = rows[i][c] / rows[c][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return det


def span_membership(basis: Sequence[Sequence], target: Sequence) -> Vector | None:
    """Coefficients ``a`` with ``sum a[i] * basis[i] == target``, or None.

    Free coefficients are set to zero, so the answer is deterministic.
    """
    target = vec(target)
    k = len(target)
    for b in basis:
        if len(b) != k:
            raise DimensionError(f"basis vector of length {len(b)}, expected {k}")
    n = len(basis)
    if n == 0:
        return () if all(x == 0 for x in target) else None
    # augmented system: columns are basis vectors
    rows = [[Fraction(basis[j][i]) for j in range(n)] + [target[i]] for i in range(k)]
    reduced, pivots = _rref(rows, n)
    for row in reduced:
        if all(x == 0 for x in row[:n]) and row[n] != 0:
            return None
    coeffs = [Fraction(0)] * n
    for r, c in enumerate(pivots):
        coeffs[c] = reduced[r][n]
    return tuple(coeffs)


def invert(m: Matrix) -> Matrix | None:
    n = len(m)
    if any(len(r) != n for r in m):
        raise DimensionError("only square matrices can be inverted")
    if n == 0:
        return ()
    rows = [list(map(Fraction, r)) + list(e) for r, e in zip(m, identity(n))]
    reduced, pivots = _rref(rows, n)
    if pivots != list(range(n)):
        return None
    return tuple(tuple(r[n:]) for r in reduced)


def nullspace(m: Matrix, ncols: int) -> list[Vector]:
    """Basis of ``{x : m x = 0}``, one vector per free column."""
    if not m:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    reduced, pivots = _rref([list(map(Fraction, r)) for r in m], ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for r, c in enumerate(pivots):
            x[c] = -reduced[r][f]
        basis.append(tuple(x))
    return basis


def integer_scale(v: Sequence) -> tuple[int, tuple[int, ...]]:
    """Smallest positive ``s`` with ``s * v`` integral, and that vector."""
    v = vec(v)
    scale = lcm(1, *(x.denominator for x in v))
    return scale, tuple(int(x * scale) for x in v)


def orthogonal_witness(basis: Sequence[Sequence], target: Sequence) -> tuple[int, ...]:
    """An integer vector orthogonal to every basis vector but not to ``target``."""
    target = vec(target)
    k = len(target)
    for b in basis:
        if len(b) != k:
            raise DimensionError("basis and target dimensions differ")
    for z in nullspace(mat(basis) if basis else (), k):
        if dot(z, target) != 0:
            return integer_scale(z)[1]
    raise PreconditionError("target lies in the span of the basis; no orthogonal witness exists")


def nonneg_preimage(m_inv: Matrix, u: Sequence) -> Vector | None:
    """``m_inv @ u`` if every entry is nonnegative (``u`` lies in the cone), else None."""
    if m_inv and len(m_inv[0]) != len(u):
        raise DimensionError("matrix and vector dimensions differ")
    alpha = matvec(m_inv, vec(u))
    return alpha if all(x >= 0 for x in alpha) else None


def hadamard(u: Sequence, v: Sequence) -> Vector:
    if len(u) != len(v):
        raise DimensionError("componentwise product of different lengths")
    return tuple(Fraction(a) * b for a, b in zip(u, v))


def vecpow(u: Sequence, v: Sequence):
    """``prod u[i] ** v[i]`` with ``0 ** 0 == 1``; exponents must be integers."""
    if len(u) != len(v):
        raise DimensionError("vecpow of different lengths")
    result = Fraction(1)
    for base, e in zip(u, v):
        e = Fraction(e)
        if e.denominator != 1:
            raise ValueError("vecpow needs integer exponents")
        if e == 0:
            continue
        result *= Fraction(base) ** int(e)
    return result


def scalar_pow_vector(t: Fraction, u: Sequence) -> Vector:
    """``(t ** u[0], ..., t ** u[k-1])`` for integer ``u``."""
    return tuple(Fraction(t) ** int(x) for x in u)


def to_json(x):
    """Vectors and matrices as nested lists of ``"num/den"`` strings (``"n"`` when integral)."""
    if isinstance(x, (tuple, list)):
        return [to_json(y) for y in x]
    return str(Fraction(x))


def from_json(x):
    if isinstance(x, list):
        return tuple(from_json(y) for y in x)
    return Fraction(x)
