"""Exact symbolic determinants and minors for small matrices.

Determinants use the signed permutation expansion, which is division-free and
exact on unexpanded symbolic entries; desk-scale sizes only.
"""

from __future__ import annotations

from itertools import combinations, permutations
from typing import Sequence

from .expr import Expr, ExprError, ZERO, add, mul, num, pow_int


def _rows(matrix) -> list:
    rows = [list(r) for r in matrix]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ExprError("matrix rows must be nonempty and of equal length")
    return rows


def _perm_sign(p: Sequence[int]) -> int:
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def det(matrix) -> Expr:
    """Determinant of a square matrix of expressions."""
    rows = _rows(matrix)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ExprError("determinant needs a square matrix")
    terms = []
    for p in permutations(range(n)):
        terms.append(mul(num(_perm_sign(p)), *(rows[i][p[i]] for i in range(n))))
    return add(*terms)


def maximal_minors(matrix) -> list:
    """All maximal square minors (row-major, then column-major order)."""
    rows = _rows(matrix)
    m, k = len(rows), len(rows[0])
    size = min(m, k)
    out = []
    for ri in combinations(range(m), size):
        for ci in combinations(range(k), size):
            out.append(det([[rows[i][j] for j in ci] for i in ri]))
    return out


def inverse(matrix) -> list:
    """Adjugate-over-determinant inverse; entries carry an exact det^-1 factor."""
    rows = _rows(matrix)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ExprError("inverse needs a square matrix")
    d = det(rows)
    if d == ZERO:
        raise ExprError("matrix is structurally singular")
    dinv = pow_int(d, -1)
    if n == 1:
        return [[dinv]]
    out = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [
                [rows[r][c] for c in range(n) if c != i] for r in range(n) if r != j
            ]
            sign = -1 if (i + j) % 2 else 1
            out[i][j] = mul(num(sign), det(sub), dinv)
    return out
