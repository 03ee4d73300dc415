"""Exact rational dense linear algebra for desk-scale matrices.

Everything here works on lists of :class:`fractions.Fraction` rows and is
meant for cross-checking floating-point rank/nullspace results and for the
exact LP pivoting path.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

FracMatrix = list[list[Fraction]]
FracVector = list[Fraction]

__all__ = ["to_fractions", "rref", "rank", "nullspace", "left_nullspace", "solve_linear", "mat_vec", "vec_mat"]


def to_fractions(rows: Sequence[Sequence]) -> FracMatrix:
    return [[Fraction(x) for x in row] for row in rows]


def rref(matrix: FracMatrix) -> tuple[FracMatrix, list[int]]:
    """Reduced row echelon form (copy) plus the list of pivot columns."""
    mat = [row[:] for row in matrix]
    n_rows = len(mat)
    n_cols = len(mat[0]) if n_rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        pivot_row = next((k for k in range(r, n_rows) if mat[k][c] != 0), None)
        if pivot_row is None:
            continue
        mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        inv = Fraction(1, 1) / mat[r][c]
        mat[r] = [x * inv for x in mat[r]]
        for k in range(n_rows):
            if k != r and mat[k][c] != 0:
                factor = mat[k][c]
                mat[k] = [a - factor * b for a, b in zip(mat[k], mat[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return mat, pivots


def rank(matrix: FracMatrix) -> int:
    if not matrix:
        return 0
    return len(rref(matrix)[1])


def nullspace(matrix: FracMatrix) -> list[FracVector]:
    """Basis of the right nullspace {x : Ax = 0}."""
    if not matrix:
        return []
    n_cols = len(matrix[0])
    reduced, pivots = rref(matrix)
    free_cols = [c for c in range(n_cols) if c not in pivots]
    basis: list[FracVector] = []
    for fc in free_cols:
        vec = [Fraction(0)] * n_cols
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -reduced[r][fc]
        basis.append(vec)
    return basis


def left_nullspace(matrix: FracMatrix) -> list[FracVector]:
    """Basis of {y : yA = 0}, i.e. the right nullspace of the transpose."""
    if not matrix:
        return []
    transposed = [[matrix[r][c] for r in range(len(matrix))] for c in range(len(matrix[0]))]
    return nullspace(transposed)


def solve_linear(matrix: FracMatrix, rhs: Sequence[Fraction]) -> FracVector:
    """Unique exact solution of Ax = b; raises when singular or inconsistent."""
    n_cols = len(matrix[0])
    augmented = [row[:] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    reduced, pivots = rref(augmented)
    if n_cols in pivots:
        raise ValueError("linear system is inconsistent")
    if len(pivots) != n_cols:
        raise ValueError("linear system is underdetermined")
    solution = [Fraction(0)] * n_cols
    for r, c in enumerate(pivots):
        solution[c] = reduced[r][-1]
    return solution


def mat_vec(matrix: FracMatrix, vec: Sequence[Fraction]) -> FracVector:
    return [sum((a * x for a, x in zip(row, vec)), Fraction(0)) for row in matrix]


def vec_mat(vec: Sequence[Fraction], matrix: FracMatrix) -> FracVector:
    if not matrix:
        return []
    n_cols = len(matrix[0])
    out = [Fraction(0)] * n_cols
    for coeff, row in zip(vec, matrix):
        if coeff == 0:
            continue
        for c in range(n_cols):
            out[c] += coeff * row[c]
    return out
