"""Dense coefficient vectors for truncated series, used by the float ODE paths.

The sparse :class:`~foliation_lab.series.TruncatedSeries` is convenient for
algebra but too slow inside a Runge-Kutta right-hand side.  ``JetSpace``
fixes a monomial basis (degrees ``min_degree..cap``) and precomputes the
multiplication as a sparse scatter so that a jet product is two numpy
gathers and one sparse mat-vec.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .scalars import FLOAT
from .series import TruncatedSeries, monomials_up_to


class JetSpace:
    def __init__(self, nvars: int, cap: int, min_degree: int = 1):
        self.nvars = nvars
        self.cap = cap
        self.min_degree = min_degree
        self.monos = monomials_up_to(nvars, cap, start=min_degree)
        self.index = {k: i for i, k in enumerate(self.monos)}
        self.size = len(self.monos)
        degs = [sum(k) for k in self.monos]
        left, right, target = [], [], []
        for i, ka in enumerate(self.monos):
            for j, kb in enumerate(self.monos):
                if degs[i] + degs[j] <= cap:
                    k = tuple(a + b for a, b in zip(ka, kb))
                    t = self.index.get(k)
                    if t is not None:
                        left.append(i)
                        right.append(j)
                        target.append(t)
        self._left = np.asarray(left, dtype=np.intp)
        self._right = np.asarray(right, dtype=np.intp)
        self._scatter = sparse.csr_matrix(
            (np.ones(len(target)), (np.asarray(target, dtype=np.intp), np.arange(len(target)))),
            shape=(self.size, len(target)),
        )

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self._scatter @ (a[self._left] * b[self._right])

    def from_series(self, s: TruncatedSeries) -> np.ndarray:
        if s.nvars != self.nvars:
            raise ValueError("series has the wrong number of variables")
        v = np.zeros(self.size, dtype=complex)
        for k, c in s.terms.items():
            i = self.index.get(k)
            if i is None:
                if sum(k) < self.min_degree:
                    raise ValueError(f"term {k} below the jet space's minimal degree")
                continue
            v[i] = complex(c)
        return v

    def to_series(self, v: np.ndarray, cap: int | None = None) -> TruncatedSeries:
        return TruncatedSeries(
            self.nvars,
            self.cap if cap is None else cap,
            {k: complex(c) for k, c in zip(self.monos, v) if c != 0},
            FLOAT,
        )

    def variable(self, j: int) -> np.ndarray:
        v = np.zeros(self.size, dtype=complex)
        v[self.index[tuple(int(i == j) for i in range(self.nvars))]] = 1.0
        return v


class PolynomialEvaluator:
    """Evaluates fixed polynomials on dense jets, sharing monomial powers.

    ``polys`` is a list of ``{exponent: coefficient}`` maps over ``nsub``
    substituted jets; monomials of total degree 0 are not allowed.
    """

    def __init__(self, space: JetSpace, polys: Sequence[dict]):
        self.space = space
        self.polys = [[(tuple(k), complex(c)) for k, c in p.items()] for p in polys]
        for p in self.polys:
            for k, _ in p:
                if sum(k) == 0:
                    raise ValueError("constant terms cannot be evaluated on jets")

    def __call__(self, subs: Sequence[np.ndarray]) -> list[np.ndarray]:
        memo: dict[tuple, np.ndarray] = {}
        n = len(subs)

        def mono(k):
            got = memo.get(k)
            if got is not None:
                return got
            i = next(i for i, e in enumerate(k) if e)
            prev = k[:i] + (k[i] - 1,) + k[i + 1:]
            got = subs[i] if sum(prev) == 0 else self.space.mul(mono(prev), subs[i])
            memo[k] = got
            return got

        out = []
        for p in self.polys:
            acc = np.zeros(self.space.size, dtype=complex)
            for k, c in p:
                if len(k) != n:
                    raise ValueError("exponent length does not match substitutions")
                acc = acc + c * mono(k)
            out.append(acc)
        return out


def integrate_jets(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_end: float = 1.0,
    rtol: float = 1e-13,
    atol: float = 1e-15,
) -> np.ndarray:
    """Integrate a coefficient ODE over ``[0, t_end]`` with an 8th-order embedded RK pair."""
    sol = solve_ivp(rhs, (0.0, t_end), y0.astype(complex), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"jet integration failed: {sol.message}")
    return sol.y[:, -1]
