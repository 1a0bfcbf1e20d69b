"""Normal forms: Jordan splitting, homological solves and the type-(r,s) reduction.

Fields handled by :func:`reduce_type` have the shape

    X = sum_{j<n} (lambda_j x_j + f_j) d/dx_j + lambda_n x_n d/dx_n

and are "of type (r, s)" when every monomial of every ``f_j`` has
``x_n``-exponent ``>= r`` and transverse degree ``>= s``.  Each reduction
step removes one slice of ``f`` with a generator ``Y`` solving
``[Y, X_0] = -slice`` and replaces ``X`` by ``exp(-Y)_* X``.

All routines here run in exact mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .resonance import Spectrum, SpectrumError, as_spectrum
from .scalars import EXACT, FLOAT, GaussianRational, coerce
from .series import TruncatedSeries, degree_key, unit_vector
from .vectorfields import (
    FormalDiffeo,
    VectorField,
    compose_diffeo,
    exp_formal,
    is_diagonal,
    lie_series_pullback,
    linear_part,
    pushforward,
)


class ResonanceObstruction(ArithmeticError):
    """A term targeted for removal is resonant (zero homological denominator)."""

    def __init__(self, terms: Sequence[tuple[int, tuple[int, ...]]], message: str | None = None):
        self.terms = [(j, tuple(k)) for j, k in terms]
        listed = ", ".join(f"x^{k} d/dx{j + 1}" for j, k in self.terms)
        super().__init__(message or f"resonant terms cannot be removed: {listed}")

    @property
    def multidegrees(self) -> list[tuple[int, ...]]:
        return [k for _, k in self.terms]


class ShapeError(ValueError):
    """Field does not have the shape an operation requires."""


class UnsupportedError(ValueError):
    """Input outside what the algorithm handles (e.g. nilpotent linear part)."""


# --------------------------------------------------------------------------
# Jordan decomposition of the linear part
# --------------------------------------------------------------------------


def _char_poly_exact(mat) -> list[GaussianRational]:
    """Coefficients ``c_0..c_n`` of ``det(t I - A)`` by Faddeev-LeVerrier."""
    n = len(mat)
    a = linalg.as_exact(mat)
    coeffs = [GaussianRational(0)] * (n + 1)
    coeffs[n] = GaussianRational(1)
    m = [[GaussianRational(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{n-k+1} I
        m = linalg.matmul(a, m)
        for i in range(n):
            m[i][i] = m[i][i] + coeffs[n - k + 1]
        am = linalg.matmul(a, m)
        tr = sum((am[i][i] for i in range(n)), GaussianRational(0))
        coeffs[n - k] = -tr / k
    return coeffs


def _poly_eval(coeffs, t):
    acc = GaussianRational(0)
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def _rational_root_candidates(coeffs) -> list[GaussianRational]:
    import math
    from fractions import Fraction

    if any(c.im for c in coeffs):
        return []
    fr = [Fraction(int(c.re.numerator), int(c.re.denominator)) for c in coeffs]
    den = math.lcm(*(f.denominator for f in fr))
    ints = [int(f * den) for f in fr]
    while ints and ints[0] == 0:
        ints = ints[1:]
    cands = {Fraction(0)}
    if not ints:
        return [GaussianRational(0)]
    lead, const = abs(ints[-1]), abs(ints[0])

    def divisors(v):
        return [d for d in range(1, v + 1) if v % d == 0] if v else [1]

    for p in divisors(const):
        for q in divisors(lead):
            cands.add(Fraction(p, q))
            cands.add(Fraction(-p, q))
    return [GaussianRational(f) for f in sorted(cands)]


def eigenvalues_exact(mat, declared: Sequence | None = None) -> list[tuple[GaussianRational, int]]:
    """Eigenvalues with algebraic multiplicities, required to lie in Q(i).

    Candidates are the ``declared`` values, the diagonal entries and the
    rational roots of the characteristic polynomial; if their multiplicities
    do not add up to ``n`` the spectrum is not exactly representable.
    """
    n = len(mat)
    coeffs = _char_poly_exact(mat)
    cands: list[GaussianRational] = []
    for v in list(declared or []) + [mat[i][i] for i in range(n)] + _rational_root_candidates(coeffs):
        v = GaussianRational.coerce(v)
        if v not in cands:
            cands.append(v)
    found = []
    for lam in cands:
        mult, c = 0, list(coeffs)
        while len(c) > 1 and not _poly_eval(c, lam):
            # synthetic division by (t - lam)
            out = [GaussianRational(0)] * (len(c) - 1)
            carry = GaussianRational(0)
            for i in range(len(c) - 1, 0, -1):
                carry = c[i] + carry * lam
                out[i - 1] = carry
            c = out
            mult += 1
        if mult:
            found.append((lam, mult))
            coeffs = c
    if sum(m for _, m in found) != n:
        raise UnsupportedError("eigenvalues are not exactly representable; use float mode")
    return found


def jordan_split(mat, mode: str = EXACT, declared: Sequence | None = None, tol: float = 1e-9):
    """``L = S + N`` with ``S`` semisimple, ``N`` nilpotent and ``SN = NS``."""
    n = len(mat)
    if mode == FLOAT:
        a = np.asarray([[complex(v) for v in r] for r in mat], dtype=complex)
        vals = np.linalg.eigvals(a)
        clusters: list[list[complex]] = []
        for v in vals:
            for cl in clusters:
                if abs(cl[0] - v) < tol * max(1.0, abs(v)) ** 1 + 1e-6:
                    cl.append(v)
                    break
            else:
                clusters.append([v])
        basis, lams = [], []
        for cl in clusters:
            lam = complex(np.mean(cl))
            m = len(cl)
            power = np.linalg.matrix_power(a - lam * np.eye(n), m)
            _, sv, vh = np.linalg.svd(power)
            vecs = vh[n - m:].conj().T
            basis.append(vecs)
            lams.extend([lam] * m)
        b = np.hstack(basis)
        s = b @ np.diag(lams) @ np.linalg.inv(b)
        return s, a - s
    a = linalg.as_exact(mat)
    eig = eigenvalues_exact(a, declared)
    cols, diag = [], []
    for lam, mult in eig:
        shifted = [[a[i][j] - (lam if i == j else 0) for j in range(n)] for i in range(n)]
        power = linalg.identity(n)
        for _ in range(mult):
            power = linalg.matmul(power, shifted)
        ker = linalg.nullspace(power)
        if len(ker) != mult:
            raise UnsupportedError("generalized eigenspace has unexpected dimension")
        cols.extend(ker)
        diag.extend([lam] * mult)
    b = [[cols[j][i] for j in range(n)] for i in range(n)]
    binv = linalg.inverse(b)
    d = [[diag[i] if i == j else GaussianRational(0) for j in range(n)] for i in range(n)]
    s = linalg.matmul(linalg.matmul(b, d), binv)
    nil = [[a[i][j] - s[i][j] for j in range(n)] for i in range(n)]
    return s, nil


# --------------------------------------------------------------------------
# type (r, s) bookkeeping
# --------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class TypeRS:
    r: int
    s: int

    def __post_init__(self):
        if self.r < 1 or self.s < 1:
            raise ValueError("type indices must be >= 1")

    def __str__(self):
        return f"({self.r},{self.s})"


@dataclass(frozen=True)
class ReductionShape:
    lambdas: tuple  # exact diagonal entries
    spectrum: Spectrum
    corrections: VectorField  # f_j d/dx_j, j < n


def _spectrum_of_values(values) -> Spectrum:
    vals = [GaussianRational.coerce(v) for v in values]
    pivot = next((v for v in vals if v), None)
    if pivot is None:
        return Spectrum(tuple(0 for _ in vals))
    ratios = [v / pivot for v in vals]
    if any(r.im for r in ratios):
        raise SpectrumError("eigenvalues are not a common complex multiple of integers")
    spec = Spectrum.from_values(ratios)
    # orient so that the spectrum is a positive multiple of the real part when real
    if not pivot.im and pivot.re < 0:
        spec = spec.negated()
    return spec


def split_reduction_shape(X: VectorField) -> ReductionShape:
    """Decompose a field of the reduction shape; raises :class:`ShapeError` otherwise."""
    n = X.nvars
    if X.mode != EXACT:
        raise ShapeError("normal-form routines work in exact mode")
    lin = linear_part(X)
    if not is_diagonal(lin):
        raise ShapeError("linear part is not diagonal")
    lams = tuple(lin[i][i] for i in range(n))
    xn = TruncatedSeries.variable(n - 1, n, X.cap, X.mode)
    if X[n - 1] != xn.scale(lams[-1]):
        raise ShapeError("last component is not exactly lambda_n * x_n")
    corr = []
    for j in range(n - 1):
        f = X[j] - TruncatedSeries.variable(j, n, X.cap, X.mode).scale(lams[j])
        corr.append(f)
    corr.append(TruncatedSeries.zero(n, X.cap, X.mode))
    spec = _spectrum_of_values(lams)
    return ReductionShape(lams, spec, VectorField(corr))


def field_type(X: VectorField) -> tuple[int, int] | None:
    """Largest ``(r, s)`` (componentwise minima) with ``X`` of type ``(r, s)``; ``None`` if no corrections."""
    split = split_reduction_shape(X)
    rs = [(k[-1], sum(k[:-1])) for _, k, _ in split.corrections.terms()]
    if not rs:
        return None
    return min(r for r, _ in rs), min(s for _, s in rs)


def is_of_type(X: VectorField, r: int, s: int) -> bool:
    try:
        split = split_reduction_shape(X)
    except ShapeError:
        return False
    return all(k[-1] >= r and sum(k[:-1]) >= s for _, k, _ in split.corrections.terms())


def _solve_slice(
    X: VectorField, in_slice: Callable[[int, tuple], bool]
) -> tuple[VectorField, list[dict]]:
    split = split_reduction_shape(X)
    n, cap = X.nvars, X.cap
    lams = split.lambdas
    terms: dict[int, dict] = {}
    obstructed = []
    record = []
    for j, k, a in split.corrections.terms():
        if not in_slice(j, k):
            continue
        den = lams[j] - sum((lams[i] * k[i] for i in range(n)), GaussianRational(0))
        if not den:
            obstructed.append((j, k))
            continue
        if abs(den) < 1 - 1e-12 and split.spectrum.scale == 1 and not any(v.im for v in lams):
            raise AssertionError(f"homological denominator {den} below 1 for integer spectrum")
        terms.setdefault(j, {})[k] = -a / den
        record.append({"component": j, "k": list(k), "denominator": str(den)})
    if obstructed:
        raise ResonanceObstruction(obstructed)
    Y = VectorField([TruncatedSeries(n, cap, terms.get(j, {}), EXACT) for j in range(n)])
    return Y, record


def solve_homological(X: VectorField, r: int) -> VectorField:
    """Generator ``Y`` with ``[Y, X_0] = -(x_n^r slice of the corrections)``.

    Coefficients are ``b = -a / (lambda_j - k.lambda)`` where ``k`` already
    carries the ``x_n^r`` factor.
    """
    return _solve_slice(X, lambda j, k: k[-1] == r)[0]


def solve_homological_transverse(X: VectorField, s: int, r_min: int = 1) -> VectorField:
    """As :func:`solve_homological` for the slice of transverse degree ``s``."""
    return _solve_slice(X, lambda j, k: sum(k[:-1]) == s and k[-1] >= r_min)[0]


# --------------------------------------------------------------------------
# certificates and drivers
# --------------------------------------------------------------------------


@dataclass
class ConjugationCertificate:
    """``normal = transform_* original`` with the discrepancy kept as ``residual``."""

    original: VectorField
    normal: VectorField
    transform: FormalDiffeo
    residual: VectorField
    steps: list[dict] = field(default_factory=list)
    unit_factor: TruncatedSeries | None = None
    factorization_checked: bool = False

    @property
    def residual_zero(self) -> bool:
        if self.residual.mode == EXACT:
            return self.residual.is_zero()
        return self.residual.max_abs() <= 1e-12

    def to_json(self) -> dict:
        out = {
            "original": self.original.to_json(),
            "normal": self.normal.to_json(),
            "transform": self.transform.to_json(),
            "residual": self.residual.to_json(),
            "residual_zero": self.residual_zero,
            "steps": self.steps,
        }
        if self.factorization_checked:
            out["unit_factor"] = None if self.unit_factor is None else self.unit_factor.to_json()
        return out


def _certify(original, normal, transform, steps) -> ConjugationCertificate:
    residual = pushforward(transform, original) - normal
    return ConjugationCertificate(original, normal, transform, residual, steps)


def reduce_type(X: VectorField, target: TypeRS | tuple[int, int]) -> ConjugationCertificate:
    """Conjugate ``X`` to type ``target`` by tangent-to-identity changes of coordinates.

    First ``r`` is advanced to ``target.r`` (removing the ``x_n^r`` slice each
    time), then ``s`` to ``target.s``.  Requires the reduction shape with
    corrections of type at least ``(1, 2)``.
    """
    if not isinstance(target, TypeRS):
        target = TypeRS(*target)
    n, cap = X.nvars, X.cap
    if target.r + target.s > cap + 1:
        raise ValueError(f"cap {cap} is too small for target type {target}")
    split_reduction_shape(X)
    if not is_of_type(X, 1, 2):
        raise ShapeError("input must already be of type (1,2)")
    current = X
    transform = FormalDiffeo.identity(n, cap, EXACT)
    steps: list[dict] = []
    r, s = 1, 2
    while True:
        ft = field_type(current)
        if ft is not None:
            r, s = max(r, ft[0]), max(s, ft[1])
        if r >= target.r:
            break
        Y, rec = _solve_slice(current, lambda j, k, r=r: k[-1] == r)
        current, transform = _apply_step(current, transform, Y)
        steps.append({"stage": f"({r},{s})->({r + 1},{s})", "generator_terms": len(rec)})
        if not is_of_type(current, r + 1, s):
            raise AssertionError("reduction step did not raise the type")
        r += 1
    r = max(r, target.r)
    while s < target.s:
        ft = field_type(current)
        if ft is not None and ft[1] > s:
            s = min(ft[1], target.s)
            continue
        if ft is None:
            s = target.s
            break
        Y, rec = _solve_slice(current, lambda j, k, s=s: sum(k[:-1]) == s)
        current, transform = _apply_step(current, transform, Y)
        steps.append({"stage": f"({r},{s})->({r},{s + 1})", "generator_terms": len(rec)})
        if not is_of_type(current, r, s + 1):
            raise AssertionError("reduction step did not raise the type")
        s += 1
    return _certify(X, current, transform, steps)


def _apply_step(current: VectorField, transform: FormalDiffeo, Y: VectorField):
    if Y.is_zero():
        return current, transform
    step = exp_formal(-Y)
    return lie_series_pullback(Y, current), compose_diffeo(step, transform)


def _diagonalize(X: VectorField):
    """Linear change making the linear part diagonal; errors on nilpotent parts."""
    lin = linear_part(X)
    if is_diagonal(lin):
        return X, FormalDiffeo.identity(X.nvars, X.cap, X.mode)
    s, nil = jordan_split(lin, EXACT)
    if any(v for row in nil for v in row):
        raise UnsupportedError("linear part has a nilpotent component; nilpotent normal forms are not supported")
    n = X.nvars
    eig = eigenvalues_exact(lin)
    cols = []
    for lam, _ in eig:
        shifted = [[lin[i][j] - (lam if i == j else 0) for j in range(n)] for i in range(n)]
        cols.extend(linalg.nullspace(shifted))
    p = [[cols[j][i] for j in range(n)] for i in range(n)]  # columns are eigenvectors
    # new coordinates y = P^-1 x diagonalize the field
    pinv = linalg.inverse(p)
    change = FormalDiffeo.linear(pinv, X.cap, EXACT)
    return pushforward(change, X), change


def unit_factorization(normal: VectorField, spectrum_values: Sequence) -> TruncatedSeries | None:
    """``g`` with ``normal = (1 + g) X_0`` and ``g`` built from invariant monomials, else ``None``."""
    n, cap = normal.nvars, normal.cap
    lams = [GaussianRational.coerce(v) for v in spectrum_values]
    x0 = VectorField.diagonal(lams, cap, EXACT)
    j = next((i for i, v in enumerate(lams) if v), None)
    if j is None:
        return None
    comp = normal[j]
    quotient = {}
    for k, c in comp.terms.items():
        if k[j] == 0:
            return None
        kk = k[:j] + (k[j] - 1,) + k[j + 1:]
        quotient[kk] = c / lams[j]
    one_plus_g = TruncatedSeries(n, cap, quotient, EXACT)
    g = one_plus_g - 1
    if normal != x0.times(one_plus_g):
        # the quotient loses one degree at the cap; compare below it
        if normal.truncate(cap - 1) != x0.times(one_plus_g).truncate(cap - 1):
            return None
        if (normal - x0.times(one_plus_g)).truncate(cap).filter(lambda k: sum(k) < cap):
            return None
    spec = _spectrum_of_values(lams)
    if any(spec.dot(k) != 0 for k in g.terms):
        return None
    return g.truncate(cap - 1)


def poincare_dulac(X: VectorField, cap: int | None = None) -> ConjugationCertificate:
    """Remove every non-resonant term degree by degree up to the cap.

    The surviving terms ``x^k d/dx_j`` all satisfy ``k.lambda = lambda_j``.
    The certificate also reports ``normal = (1 + g) X_0`` when the resonant
    part factors that way.
    """
    if X.mode != EXACT:
        raise ValueError("poincare_dulac works in exact mode")
    if cap is not None and cap != X.cap:
        X = VectorField([c.with_cap(cap) for c in X])
    n, cap = X.nvars, X.cap
    original = X
    current, transform = _diagonalize(X)
    lin = linear_part(current)
    lams = [lin[i][i] for i in range(n)]
    _spectrum_of_values(lams)
    steps = []
    for d in range(2, cap + 1):
        terms: dict[int, dict] = {}
        kept = 0
        for j, k, a in current.terms():
            if sum(k) != d:
                continue
            den = lams[j] - sum((lams[i] * k[i] for i in range(n)), GaussianRational(0))
            if not den:
                kept += 1
                continue
            terms.setdefault(j, {})[k] = -a / den
        Y = VectorField([TruncatedSeries(n, cap, terms.get(j, {}), EXACT) for j in range(n)])
        current, transform = _apply_step(current, transform, Y)
        steps.append({"stage": f"degree {d}", "generator_terms": sum(len(t) for t in terms.values()), "resonant_kept": kept})
    cert = _certify(original, current, transform, steps)
    cert.factorization_checked = True
    cert.unit_factor = unit_factorization(current, lams)
    return cert


def surviving_terms_resonant(normal: VectorField) -> bool:
    """Every term of the field satisfies ``k.lambda = lambda_j`` for its diagonal linear part."""
    lin = linear_part(normal)
    n = normal.nvars
    lams = [lin[i][i] for i in range(n)]
    for j, k, _ in normal.terms():
        if sum(k) < 2:
            continue
        if lams[j] != sum((lams[i] * k[i] for i in range(n)), GaussianRational(0)):
            return False
    return True


__all__ = [
    "ResonanceObstruction",
    "ShapeError",
    "UnsupportedError",
    "TypeRS",
    "ConjugationCertificate",
    "jordan_split",
    "eigenvalues_exact",
    "split_reduction_shape",
    "field_type",
    "is_of_type",
    "solve_homological",
    "solve_homological_transverse",
    "reduce_type",
    "poincare_dulac",
    "unit_factorization",
    "surviving_terms_resonant",
    "unit_vector",
    "degree_key",
    "as_spectrum",
    "coerce",
]
