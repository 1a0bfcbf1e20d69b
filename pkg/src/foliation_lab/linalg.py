"""Small dense linear algebra over Q(i) (exact) and C (numpy).

Matrices are lists of rows.  Exact routines use fraction-based Gauss-Jordan
elimination; the sizes met here (a few hundred columns at most) do not call
for anything cleverer.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .scalars import EXACT, GaussianRational, coerce


class SingularMatrixError(ValueError):
    pass


def as_exact(rows: Sequence[Sequence]) -> list[list[GaussianRational]]:
    return [[GaussianRational.coerce(v) for v in row] for row in rows]


def rref(rows: Sequence[Sequence]) -> tuple[list[list[GaussianRational]], list[int]]:
    """Reduced row echelon form and pivot columns of an exact matrix."""
    m = [list(r) for r in as_exact(rows)]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c]), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = GaussianRational(1) / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[list[GaussianRational]]:
    """Basis of the right kernel; one vector per free column with that entry 1."""
    if not rows:
        if ncols is None:
            raise ValueError("ncols required for an empty matrix")
        return [[GaussianRational(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for fcol in free:
        v = [GaussianRational(0)] * ncols
        v[fcol] = GaussianRational(1)
        for i, pc in enumerate(pivots):
            v[pc] = -red[i][fcol]
        basis.append(v)
    return basis


def rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    return len(rref(rows)[1])


def solve(rows: Sequence[Sequence], rhs: Sequence) -> list[GaussianRational]:
    """One exact solution of ``A v = b`` (free variables set to zero)."""
    aug = [list(r) + [b] for r, b in zip(as_exact(rows), as_exact([rhs])[0])]
    ncols = len(rows[0])
    red, pivots = rref(aug)
    if ncols in pivots:
        raise SingularMatrixError("inconsistent linear system")
    v = [GaussianRational(0)] * ncols
    for i, pc in enumerate(pivots):
        v[pc] = red[i][ncols]
    return v


def inverse(rows: Sequence[Sequence], mode: str = EXACT):
    """Inverse of a square matrix, exact (nested lists) or float (ndarray)."""
    n = len(rows)
    if mode != EXACT:
        a = np.asarray([[complex(v) for v in r] for r in rows], dtype=complex)
        if n and abs(np.linalg.det(a)) < 1e-300:
            raise SingularMatrixError("matrix is singular")
        return np.linalg.inv(a) if n else a
    aug = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(as_exact(rows))]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return [row[n:] for row in red]


def matmul(a, b):
    return [[sum((x * y for x, y in zip(row, col)), coerce(0, EXACT)) for col in zip(*b)] for row in a]


def identity(n: int):
    return [[GaussianRational(int(i == j)) for j in range(n)] for i in range(n)]


def integer_rank(vectors: Sequence[Sequence[int]]) -> int:
    """Rank over Q of a list of integer vectors."""
    return rank([list(v) for v in vectors]) if vectors else 0
