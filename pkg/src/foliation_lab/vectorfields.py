"""Formal vector fields, formal diffeomorphisms and the operators between them.

Conventions
-----------
* ``lie_bracket(X, Y)`` has components ``X(Y_j) - Y(X_j)``.
* ``pushforward(phi, X)`` is ``(Dphi . X) o phi^-1``.  For ``phi = exp(Y)``
  this equals ``X - [Y,X] + 1/2 [Y,[Y,X]] - ...``; the removal step of the
  normal form therefore pushes forward by ``exp(-Y)``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import linalg
from .jets import JetSpace, PolynomialEvaluator, integrate_jets
from .scalars import EXACT, FLOAT, ModeError, coerce
from .series import DimensionError, TruncatedSeries, sum_series, unit_vector


class SingularityError(ValueError):
    """Vector field component has a nonzero constant term."""


class NonInvertibleError(ValueError):
    """Diffeomorphism jet with singular linear part."""


def _check_components(components: Sequence[TruncatedSeries]) -> tuple[int, int, str]:
    if not components:
        raise ValueError("need at least one component")
    first = components[0]
    for c in components:
        if not isinstance(c, TruncatedSeries):
            raise TypeError("components must be TruncatedSeries")
        first._check(c)
    if first.nvars != len(components):
        raise DimensionError(f"{len(components)} components for {first.nvars} variables")
    return first.nvars, first.cap, first.mode


def _matrix_of_linear_terms(components: Sequence[TruncatedSeries], mode: str):
    n = len(components)
    rows = [[comp.coefficient(unit_vector(n, j)) for j in range(n)] for comp in components]
    if mode == FLOAT:
        return np.asarray([[complex(v) for v in r] for r in rows], dtype=complex)
    return rows


class VectorField:
    """``X = sum_j h_j d/dx_j`` with all ``h_j`` sharing nvars, cap and mode."""

    __slots__ = ("components", "allow_regular")

    def __init__(self, components: Sequence[TruncatedSeries], allow_regular: bool = False):
        _check_components(components)
        comps = tuple(components)
        if not allow_regular:
            for j, c in enumerate(comps):
                if c.constant_term():
                    raise SingularityError(f"component {j} does not vanish at the origin")
        self.components = comps
        self.allow_regular = allow_regular

    @property
    def nvars(self) -> int:
        return self.components[0].nvars

    @property
    def cap(self) -> int:
        return self.components[0].cap

    @property
    def mode(self) -> str:
        return self.components[0].mode

    @classmethod
    def zero(cls, nvars: int, cap: int, mode: str = EXACT) -> "VectorField":
        return cls([TruncatedSeries.zero(nvars, cap, mode) for _ in range(nvars)])

    @classmethod
    def diagonal(cls, lambdas: Sequence, cap: int, mode: str = EXACT) -> "VectorField":
        """``sum_j lambda_j x_j d/dx_j``."""
        n = len(lambdas)
        return cls([TruncatedSeries.variable(j, n, cap, mode).scale(lam) for j, lam in enumerate(lambdas)])

    @classmethod
    def from_terms(cls, nvars: int, cap: int, terms: dict, mode: str = EXACT) -> "VectorField":
        """Build from ``{component index: {exponent: coefficient}}``."""
        return cls([TruncatedSeries(nvars, cap, terms.get(j, {}), mode) for j in range(nvars)])

    def _check(self, other: "VectorField"):
        self.components[0]._check(other.components[0])

    def __getitem__(self, j: int) -> TruncatedSeries:
        return self.components[j]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.components == other.components

    __hash__ = None

    def _new(self, comps) -> "VectorField":
        return VectorField(comps, allow_regular=self.allow_regular)

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField([a + b for a, b in zip(self, other)], self.allow_regular or other.allow_regular)

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField([a - b for a, b in zip(self, other)], self.allow_regular or other.allow_regular)

    def __neg__(self) -> "VectorField":
        return self._new([-a for a in self])

    def scale(self, factor) -> "VectorField":
        return self._new([a.scale(factor) for a in self])

    def times(self, g: TruncatedSeries) -> "VectorField":
        """Multiply every component by the function ``g``."""
        return self._new([a * g for a in self])

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self)

    def max_abs(self) -> float:
        return max(c.max_abs() for c in self)

    def to_float(self) -> "VectorField":
        return VectorField([c.to_float() for c in self], self.allow_regular)

    def truncate(self, d: int) -> "VectorField":
        return self._new([c.truncate(d) for c in self])

    def filter(self, predicate) -> "VectorField":
        """Keep the terms ``x^k d/dx_j`` with ``predicate(j, k)`` true."""
        return self._new([c.filter(lambda k, j=j: predicate(j, k)) for j, c in enumerate(self)])

    def terms(self):
        """Iterate ``(j, k, coefficient)`` in canonical order."""
        for j, c in enumerate(self):
            for k, v in c.items():
                yield j, k, v

    def nonlinear_part(self) -> "VectorField":
        return self.filter(lambda j, k: sum(k) >= 2)

    def linear_part(self):
        return linear_part(self)

    def apply(self, f: TruncatedSeries) -> TruncatedSeries:
        return apply_derivation(self, f)

    def evaluate(self, point) -> np.ndarray:
        return np.asarray([c.evaluate(point) for c in self], dtype=complex)

    def to_json(self) -> dict:
        return {"kind": "vector_field", "components": [c.to_json() for c in self]}

    @classmethod
    def from_json(cls, data: dict, allow_regular: bool = False) -> "VectorField":
        if data.get("kind", "vector_field") != "vector_field":
            raise ValueError(f"expected kind 'vector_field', got {data.get('kind')!r}")
        return cls([TruncatedSeries.from_json(c) for c in data["components"]], allow_regular)

    def __repr__(self):
        body = " + ".join(f"({c}) d/dx{j + 1}" for j, c in enumerate(self) if not c.is_zero())
        return f"VectorField({body or '0'})"


def apply_derivation(X: VectorField, f: TruncatedSeries) -> TruncatedSeries:
    """``X(f) = sum_j h_j df/dx_j`` at the cap."""
    X.components[0]._check(f)
    acc = TruncatedSeries.zero(f.nvars, f.cap, f.mode)
    for j, h in enumerate(X):
        if h.is_zero():
            continue
        d = f.diff(j)
        if not d.is_zero():
            acc = acc + h * d
    return acc


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]`` with components ``X(Y_j) - Y(X_j)``."""
    X._check(Y)
    comps = [apply_derivation(X, yj) - apply_derivation(Y, xj) for xj, yj in zip(X, Y)]
    return VectorField(comps, allow_regular=X.allow_regular or Y.allow_regular)


def linear_part(X) -> list | np.ndarray:
    """Matrix of degree-1 coefficients; entry ``[i][j]`` is the ``x_j`` coefficient of component ``i``.

    Exact mode returns nested lists of :class:`GaussianRational`, float mode
    a complex ndarray.
    """
    return _matrix_of_linear_terms(X.components, X.components[0].mode)


def is_diagonal(matrix) -> bool:
    n = len(matrix)
    return all(not matrix[i][j] for i in range(n) for j in range(n) if i != j)


class FormalDiffeo:
    """Jet of a diffeomorphism fixing the origin with invertible linear part."""

    __slots__ = ("components", "linear_part")

    def __init__(self, components: Sequence[TruncatedSeries], check: bool = True):
        _check_components(components)
        comps = tuple(components)
        for j, c in enumerate(comps):
            if c.constant_term():
                raise SingularityError(f"component {j} does not fix the origin")
        self.components = comps
        self.linear_part = _matrix_of_linear_terms(comps, comps[0].mode)
        if check:
            if self.mode == EXACT:
                if linalg.rank(self.linear_part) < self.nvars:
                    raise NonInvertibleError("linear part is singular")
            elif abs(np.linalg.det(self.linear_part)) < 1e-14:
                raise NonInvertibleError("linear part is numerically singular")

    @property
    def nvars(self) -> int:
        return self.components[0].nvars

    @property
    def cap(self) -> int:
        return self.components[0].cap

    @property
    def mode(self) -> str:
        return self.components[0].mode

    @classmethod
    def identity(cls, nvars: int, cap: int, mode: str = EXACT) -> "FormalDiffeo":
        return cls(TruncatedSeries.variables(nvars, cap, mode), check=False)

    @classmethod
    def linear(cls, matrix, cap: int, mode: str = EXACT) -> "FormalDiffeo":
        n = len(matrix)
        xs = TruncatedSeries.variables(n, cap, mode)
        comps = [sum_series((xs[j].scale(matrix[i][j]) for j in range(n)), xs[0]) for i in range(n)]
        return cls(comps)

    def __getitem__(self, j):
        return self.components[j]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __eq__(self, other):
        if not isinstance(other, FormalDiffeo):
            return NotImplemented
        return self.components == other.components

    __hash__ = None

    def __call__(self, f: TruncatedSeries) -> TruncatedSeries:
        """``f o phi``."""
        return f.compose(self.components)

    def compose(self, other: "FormalDiffeo") -> "FormalDiffeo":
        """``self o other``."""
        return compose_diffeo(self, other)

    def inverse(self) -> "FormalDiffeo":
        return invert_diffeo(self)

    def power(self, m: int) -> "FormalDiffeo":
        if m < 0:
            return self.inverse().power(-m)
        result = FormalDiffeo.identity(self.nvars, self.cap, self.mode)
        for _ in range(m):
            result = compose_diffeo(self, result)
        return result

    def is_identity(self, atol: float = 0.0) -> bool:
        ident = FormalDiffeo.identity(self.nvars, self.cap, self.mode)
        if self.mode == EXACT:
            return self == ident
        return all(a.allclose(b, atol) for a, b in zip(self, ident))

    def allclose(self, other: "FormalDiffeo", atol: float = 1e-10) -> bool:
        return all(a.allclose(b, atol) for a, b in zip(self, other))

    def max_deviation(self, other: "FormalDiffeo") -> float:
        return max((a - b).max_abs() for a, b in zip(self.to_float(), other.to_float()))

    def to_float(self) -> "FormalDiffeo":
        if self.mode == FLOAT:
            return self
        return FormalDiffeo([c.to_float() for c in self], check=False)

    def evaluate(self, point) -> np.ndarray:
        return np.asarray([c.evaluate(point) for c in self], dtype=complex)

    def nonlinear_part(self) -> list[TruncatedSeries]:
        return [c.filter(lambda k: sum(k) >= 2) for c in self]

    def to_json(self) -> dict:
        return {"kind": "formal_diffeo", "components": [c.to_json() for c in self]}

    @classmethod
    def from_json(cls, data: dict) -> "FormalDiffeo":
        if data.get("kind", "formal_diffeo") != "formal_diffeo":
            raise ValueError(f"expected kind 'formal_diffeo', got {data.get('kind')!r}")
        return cls([TruncatedSeries.from_json(c) for c in data["components"]])

    def __repr__(self):
        return "FormalDiffeo(" + ", ".join(str(c) for c in self) + ")"


def compose_diffeo(phi: FormalDiffeo, psi: FormalDiffeo) -> FormalDiffeo:
    """``phi o psi`` at the cap."""
    phi.components[0]._check(psi.components[0])
    return FormalDiffeo([c.compose(psi.components) for c in phi], check=False)


def invert_diffeo(phi: FormalDiffeo) -> FormalDiffeo:
    """Compositional inverse, solved degree by degree.

    Writing ``phi = L + N`` with ``N`` of order >= 2, the inverse satisfies
    ``psi = L^-1 (id - N o psi)``; each fixed-point sweep fixes one more degree.
    """
    n, cap, mode = phi.nvars, phi.cap, phi.mode
    try:
        linv = linalg.inverse(phi.linear_part, mode)
    except linalg.SingularMatrixError as exc:
        raise NonInvertibleError(str(exc)) from exc
    xs = TruncatedSeries.variables(n, cap, mode)

    def apply_linv(vec):
        return [sum_series((vec[j].scale(linv[i][j]) for j in range(n)), xs[0]) for i in range(n)]

    nonlin = phi.nonlinear_part()
    psi = apply_linv(xs)
    if all(c.is_zero() for c in nonlin):
        return FormalDiffeo(psi, check=False)
    for _ in range(cap):
        nxt = apply_linv([x - c.compose(psi) for x, c in zip(xs, nonlin)])
        if nxt == psi:
            break
        psi = nxt
    return FormalDiffeo(psi, check=False)


def _has_zero_linear_part(Y: VectorField) -> bool:
    return all(sum(k) != 1 for c in Y for k in c.terms)


def exp_formal(Y: VectorField, t=1) -> FormalDiffeo:
    """Time-``t`` flow of ``Y`` as a jet.

    With vanishing linear part the Lie series ``x_j + t Y(x_j) + t^2/2 Y(Y(x_j)) + ...``
    terminates at the cap and is summed exactly.  Otherwise (float mode only)
    the coefficient ODE ``d/ds phi = t Y(phi)`` is integrated numerically.
    """
    n, cap, mode = Y.nvars, Y.cap, Y.mode
    if _has_zero_linear_part(Y):
        t = coerce(t, mode)
        comps = []
        for j in range(n):
            term = TruncatedSeries.variable(j, n, cap, mode)
            acc = term
            m = 0
            while True:
                m += 1
                term = apply_derivation(Y, term).scale(t / coerce(m, mode))
                if term.is_zero():
                    break
                acc = acc + term
            comps.append(acc)
        return FormalDiffeo(comps, check=False)
    if mode == EXACT:
        raise ModeError("exp_formal of a field with nonzero linear part needs float mode")
    return _flow_numeric(Y, complex(t))


def _flow_numeric(Y: VectorField, t: complex) -> FormalDiffeo:
    n, cap = Y.nvars, Y.cap
    space = JetSpace(n, cap)
    ev = PolynomialEvaluator(space, [dict(c.terms) for c in Y])
    size = space.size

    def rhs(_s, state):
        subs = [state[i * size:(i + 1) * size] for i in range(n)]
        return t * np.concatenate(ev(subs))

    y0 = np.concatenate([space.variable(j) for j in range(n)])
    yend = integrate_jets(rhs, y0)
    return FormalDiffeo([space.to_series(yend[i * size:(i + 1) * size]) for i in range(n)], check=False)


def pushforward(phi: FormalDiffeo, X: VectorField) -> VectorField:
    """``phi_* X = (Dphi . X) o phi^-1`` via the chain rule."""
    phi.components[0]._check(X.components[0])
    n = X.nvars
    pushed = []
    for i in range(n):
        acc = TruncatedSeries.zero(n, X.cap, X.mode)
        for j in range(n):
            d = phi[i].diff(j)
            if not d.is_zero() and not X[j].is_zero():
                acc = acc + d * X[j]
        pushed.append(acc)
    inv = invert_diffeo(phi)
    return VectorField([c.compose(inv.components) for c in pushed], allow_regular=X.allow_regular)


def pushforward_exp(Y: VectorField, X: VectorField, t=1) -> VectorField:
    """``exp(tY)_* X = sum_m (-t)^m/m! ad_Y^m X``; requires ``Y`` with zero linear part."""
    if not _has_zero_linear_part(Y):
        raise ValueError("series form needs a generator with vanishing linear part")
    t = coerce(t, X.mode)
    acc, term, m = X, X, 0
    while True:
        m += 1
        term = lie_bracket(Y, term).scale(-t / coerce(m, X.mode))
        if term.is_zero():
            break
        acc = acc + term
    return acc


def lie_series_pullback(Y: VectorField, X: VectorField) -> VectorField:
    """``X + [Y,X] + 1/2 [Y,[Y,X]] + ...``, i.e. ``exp(-Y)_* X``."""
    return pushforward_exp(Y, X, t=-1)


__all__ = [
    "VectorField",
    "FormalDiffeo",
    "SingularityError",
    "NonInvertibleError",
    "apply_derivation",
    "lie_bracket",
    "linear_part",
    "is_diagonal",
    "exp_formal",
    "pushforward",
    "pushforward_exp",
    "lie_series_pullback",
    "compose_diffeo",
    "invert_diffeo",
]
