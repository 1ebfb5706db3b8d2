"""Exact rational and integer linear algebra helpers.

Everything in here operates on plain Python ints and ``fractions.Fraction``
so that polytope geometry (vertices, activity ties, lattice frames) is
bit-exact.  Sizes are tiny (n <= ~12 facet systems), so clarity wins over
asymptotics.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence


def frac(value) -> Fraction:
    """Coerce ints, strings like '1/2' or '0.5', and floats to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(str(value))


def vec_frac(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(frac(v) for v in values)


def dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((Fraction(x) * Fraction(y) for x, y in zip(a, b)), Fraction(0))


def solve_exact(rows: Sequence[Sequence], rhs: Sequence) -> tuple[Fraction, ...] | None:
    """Solve a square rational system by Gaussian elimination.

    Returns None when the matrix is singular.
    """
    n = len(rows)
    aug = [[Fraction(rows[i][j]) for j in range(n)] + [Fraction(rhs[i])] for i in range(n)]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if aug[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = aug[col][col]
        aug[col] = [v / inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [v - factor * w for v, w in zip(aug[r], aug[col])]
    return tuple(aug[i][n] for i in range(n))


def rank_exact(rows: Sequence[Sequence]) -> int:
    mat = [[Fraction(v) for v in row] for row in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    row = 0
    for col in range(ncols):
        pivot = None
        for r in range(row, len(mat)):
            if mat[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        mat[row], mat[pivot] = mat[pivot], mat[row]
        inv = mat[row][col]
        mat[row] = [v / inv for v in mat[row]]
        for r in range(len(mat)):
            if r != row and mat[r][col] != 0:
                factor = mat[r][col]
                mat[r] = [v - factor * w for v, w in zip(mat[r], mat[row])]
        row += 1
        rank += 1
        if row == len(mat):
            break
    return rank


def det_exact(rows: Sequence[Sequence]) -> Fraction:
    n = len(rows)
    mat = [[Fraction(v) for v in row] for row in rows]
    det = Fraction(1)
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if mat[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            mat[col], mat[pivot] = mat[pivot], mat[col]
            det = -det
        det *= mat[col][col]
        inv = mat[col][col]
        mat[col] = [v / inv for v in mat[col]]
        for r in range(col + 1, n):
            if mat[r][col] != 0:
                factor = mat[r][col]
                mat[r] = [v - factor * w for v, w in zip(mat[r], mat[col])]
    return det


def gcd_vec(values: Iterable[int]) -> int:
    g = 0
    for v in values:
        g = gcd(g, abs(int(v)))
    return g


def is_primitive(vec: Sequence[int]) -> bool:
    return gcd_vec(vec) == 1


def primitivize(vec: Sequence) -> tuple[tuple[int, ...], Fraction]:
    """Scale a nonzero rational vector to a primitive integer vector.

    Returns (primitive, scale) with scale > 0 and primitive = scale * vec.
    """
    fracs = [frac(v) for v in vec]
    if all(v == 0 for v in fracs):
        raise ValueError("cannot primitivize the zero vector")
    denom_lcm = 1
    for v in fracs:
        denom_lcm = denom_lcm * v.denominator // gcd(denom_lcm, v.denominator)
    ints = [int(v * denom_lcm) for v in fracs]
    g = gcd_vec(ints)
    scale = Fraction(denom_lcm, g)
    return tuple(i // g for i in ints), scale


def matmul_int(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> list[list[int]]:
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def invert_unimodular(mat: Sequence[Sequence[int]]) -> list[list[int]]:
    """Invert an integer matrix with determinant +-1; result is integral."""
    n = len(mat)
    inv_cols = []
    for j in range(n):
        rhs = [1 if i == j else 0 for i in range(n)]
        col = solve_exact(mat, rhs)
        if col is None:
            raise ValueError("matrix is singular")
        for v in col:
            if v.denominator != 1:
                raise ValueError("matrix is not unimodular")
        inv_cols.append([int(v) for v in col])
    return [[inv_cols[j][i] for j in range(n)] for i in range(n)]


class SaturationError(ValueError):
    """The integer rows do not span a direct summand of Z^n."""


def unimodular_completion(rows: Sequence[Sequence[int]], n: int) -> list[list[int]]:
    """Complete j independent primitive integer rows to a det +-1 matrix.

    The returned n x n matrix U has the given rows as its LAST j rows; its
    first n-j rows complete them to a basis of Z^n.  Uses fraction-free
    column reduction (Hermite-style): find unimodular V with rows @ V =
    [L | 0], L lower triangular.  The rows span a saturated sublattice iff
    |det L| = 1, in which case the last n-j rows of V^-1 complete the basis.
    """
    j = len(rows)
    work = [[int(v) for v in row] for row in rows]
    V = [[1 if a == b else 0 for b in range(n)] for a in range(n)]

    def col_swap(a, b):
        for r in range(j):
            work[r][a], work[r][b] = work[r][b], work[r][a]
        for r in range(n):
            V[r][a], V[r][b] = V[r][b], V[r][a]

    def col_axpy(dst, src, q):
        # column_dst -= q * column_src
        for r in range(j):
            work[r][dst] -= q * work[r][src]
        for r in range(n):
            V[r][dst] -= q * V[r][src]

    for i in range(j):
        while True:
            nonzero = [k for k in range(i, n) if work[i][k] != 0]
            if not nonzero:
                raise ValueError("rows are linearly dependent")
            piv = min(nonzero, key=lambda k: abs(work[i][k]))
            done = True
            for k in nonzero:
                if k == piv:
                    continue
                q = work[i][k] // work[i][piv]
                col_axpy(k, piv, q)
                if work[i][k] != 0:
                    done = False
            if done:
                if piv != i:
                    col_swap(piv, i)
                break

    det_l = 1
    for i in range(j):
        det_l *= work[i][i]
    if abs(det_l) != 1:
        raise SaturationError(
            f"sublattice has index {abs(det_l)} in its saturation; "
            "no unimodular completion exists")

    W = invert_unimodular(V)  # rows of W form a Z-basis adapted to the span
    U = [list(W[r]) for r in range(j, n)] + [[int(v) for v in row] for row in rows]
    d = det_exact(U)
    if abs(d) != 1:
        raise AssertionError("completion lost unimodularity")  # pragma: no cover
    return U
