"""Independent reference computations for the tests.

Everything here goes through sympy's sparse polynomial rings over QQ and
shares no code with the package beyond converting inputs and outputs.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import sympy
from sympy import QQ
from sympy.polys.rings import ring

from foliation_lab.scalars import GaussianRational
from foliation_lab.series import TruncatedSeries
from foliation_lab.vectorfields import FormalDiffeo, VectorField


def make_ring(n: int):
    R, *xs = ring(",".join(f"x{i + 1}" for i in range(n)), QQ)
    return R, xs


def _qq(c):
    c = GaussianRational.coerce(c)
    assert not c.im, "oracle handles real rational coefficients only"
    return QQ(int(c.re.numerator), int(c.re.denominator))


def to_ring(f: TruncatedSeries, R):
    return R({k: _qq(c) for k, c in f.terms.items()})


def from_ring(p, n: int, cap: int) -> TruncatedSeries:
    terms = {tuple(k): Fraction(int(c.numerator), int(c.denominator)) for k, c in p.terms()}
    return TruncatedSeries(n, cap, terms)


def trunc(p, cap: int):
    R = p.ring
    return R({k: c for k, c in p.terms() if sum(k) <= cap})


def homogeneous(p, d: int):
    R = p.ring
    return R({k: c for k, c in p.terms() if sum(k) == d})


def compose(p, subs, cap: int):
    """``p(subs)`` truncated, by explicit monomial expansion."""
    R = p.ring
    out = R.zero
    for k, c in p.terms():
        term = R(c)
        for s, e in zip(subs, k):
            for _ in range(e):
                term = trunc(term * s, cap)
        out += term
    return trunc(out, cap)


def solve_conjugacy(X: VectorField, N: VectorField) -> FormalDiffeo:
    """``phi = id + ...`` with ``D phi . X = N o phi`` solved degree by degree.

    Both fields must share a diagonal linear part.  At each degree the
    unknown part of the equation is ``(k.lambda - lambda_j) c_{j,k}``; the
    rest is computed from the lower-degree solution.
    """
    n, cap = X.nvars, X.cap
    R, xs = make_ring(n)
    Xr = [to_ring(c, R) for c in X]
    Nr = [to_ring(c, R) for c in N]
    lam = [Xr[j].coeff(xs[j]) for j in range(n)]
    phi = list(xs)
    for d in range(2, cap + 1):
        # residual with the current (degree < d) phi
        residual = []
        for j in range(n):
            lhs = R.zero
            for i in range(n):
                lhs += trunc(phi[j].diff(xs[i]) * Xr[i], cap)
            rhs = compose(Nr[j], phi, cap)
            residual.append(homogeneous(lhs - rhs, d))
        for j in range(n):
            corr = {}
            for k, c in residual[j].terms():
                den = sum(a * b for a, b in zip(k, lam)) - lam[j]
                if den == 0:
                    raise ArithmeticError(f"no conjugacy: resonant residual {k} in component {j}")
                corr[k] = -c / den
            phi[j] = phi[j] + R(corr)
    return FormalDiffeo([from_ring(p, n, cap) for p in phi])


def check_conjugacy(X: VectorField, N: VectorField, phi: FormalDiffeo) -> bool:
    """``D phi . X - N o phi = 0`` at the cap, evaluated in the sympy ring."""
    n, cap = X.nvars, X.cap
    R, xs = make_ring(n)
    Xr = [to_ring(c, R) for c in X]
    Nr = [to_ring(c, R) for c in N]
    ph = [to_ring(c, R) for c in phi]
    for j in range(n):
        lhs = R.zero
        for i in range(n):
            lhs += trunc(ph[j].diff(xs[i]) * Xr[i], cap)
        if trunc(lhs - compose(Nr[j], ph, cap), cap) != 0:
            return False
    return True


def jacobian_minors(functions, n: int) -> dict:
    """``{(i, j, ...): minor}`` of the Jacobian, via sympy matrices."""
    syms = sympy.symbols(f"x1:{n + 1}")
    exprs = [sum(sympy.Rational(str(c.re)) * sympy.Mul(*[s ** e for s, e in zip(syms, k)])
                 for k, c in f.terms.items()) for f in functions]
    J = sympy.Matrix([[sympy.diff(e, s) for s in syms] for e in exprs])
    q = len(functions)
    out = {}
    for idx in itertools.combinations(range(n), q):
        m = sympy.expand(J[:, list(idx)].det())
        if m != 0:
            out[idx] = sympy.Poly(m, *syms)
    return out, syms


def subset_directions(n: int) -> list[tuple[int, ...]]:
    """Indicator vectors ``1_S`` of the nonempty subsets ``S`` of ``{1..n}``."""
    return [tuple(int(i in S) for i in range(n))
            for r in range(1, n + 1) for S in itertools.combinations(range(n), r)]
