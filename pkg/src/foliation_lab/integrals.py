"""Polynomial first integrals: kernel solves, independence, divisibility and
linearizing coordinates recovered from integrals."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .resonance import as_spectrum, classify_spectrum, rj_sj
from .scalars import EXACT, FLOAT, coerce
from .series import ExteriorForm, TruncatedSeries, monomials_up_to, wedge
from .vectorfields import FormalDiffeo, VectorField, apply_derivation, linear_part, pushforward

PROVENANCES = ("kernel-solve", "holonomy-invariant", "monomial", "transported")


@dataclass
class IndependenceVerdict:
    independent: bool
    form: ExteriorForm
    witness_indices: tuple[int, ...] | None = None
    witness: TruncatedSeries | None = None

    def to_json(self) -> dict:
        out = {"independent": self.independent}
        if self.witness is not None:
            out["witness"] = {
                "dx": [i + 1 for i in self.witness_indices],
                "coefficient": str(self.witness),
                "series": self.witness.to_json(),
            }
        return out


def independence_test(functions: Sequence[TruncatedSeries], polynomial: bool = False) -> IndependenceVerdict:
    """``dF_1 ^ ... ^ dF_q`` nonzero at the cap, with its lowest-degree coefficient as witness.

    With ``polynomial=True`` the inputs are taken as exact polynomials and the
    wedge is formed at a cap that holds it untruncated (its coefficients
    have degree ``sum(deg F_j - 1)``, which can exceed the working cap).
    """
    if not functions:
        raise ValueError("need at least one function")
    n = functions[0].nvars
    if len(functions) > n:
        raise ValueError(f"{len(functions)} functions in {n} variables are never independent")
    if polynomial:
        big = max(functions[0].cap, sum(f.degree() for f in functions))
        functions = [f.with_cap(big) for f in functions]
    form = wedge(functions)
    wit = form.lowest_witness()
    if wit is None:
        return IndependenceVerdict(False, form)
    idx, coeff = wit
    return IndependenceVerdict(True, form, tuple(idx), coeff)


@dataclass
class FirstIntegralSet:
    integrals: list[TruncatedSeries]
    provenance: list[str]
    independence: IndependenceVerdict | None = None

    def __post_init__(self):
        if len(self.provenance) != len(self.integrals):
            raise ValueError("one provenance tag per integral")
        for p in self.provenance:
            if p not in PROVENANCES:
                raise ValueError(f"unknown provenance {p!r}")

    def __len__(self):
        return len(self.integrals)

    def __iter__(self):
        return iter(self.integrals)

    def __getitem__(self, j):
        return self.integrals[j]

    def check_independence(self) -> IndependenceVerdict:
        # monomial integrals are exact polynomials, so their wedge need not be truncated
        exact = all(p == "monomial" for p in self.provenance)
        self.independence = independence_test(self.integrals, polynomial=exact) if self.integrals else None
        return self.independence

    def annihilated_by(self, X: VectorField, atol: float = 1e-10) -> bool:
        for f in self.integrals:
            d = apply_derivation(X, f.with_cap(X.cap) if f.cap != X.cap else f)
            if X.mode == EXACT and f.mode == EXACT:
                if not d.is_zero():
                    return False
            elif d.max_abs() > atol:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "integrals": [{"series": f.to_json(), "text": str(f), "provenance": p}
                          for f, p in zip(self.integrals, self.provenance)],
            "independence": None if self.independence is None else self.independence.to_json(),
        }


def first_integral_kernel(X: VectorField, degree: int) -> list[TruncatedSeries]:
    """Basis of ``{f : X(f) = 0 mod degree + 1}`` among polynomials of degree ``<= degree``
    without constant term.

    Exact mode returns an echelon basis: each element is one monomial with
    coefficient 1 plus terms of later monomials only, ordered by that leading
    monomial.  Float mode uses an SVD null space.
    """
    if degree > X.cap:
        raise ValueError("degree exceeds the cap")
    n, mode = X.nvars, X.mode
    Xd = VectorField([c.with_cap(degree) for c in X], allow_regular=True)
    monos = monomials_up_to(n, degree, start=1)
    index = {k: i for i, k in enumerate(monos)}
    cols = []
    for k in monos:
        img = apply_derivation(Xd, TruncatedSeries.monomial(k, 1, degree, mode).with_cap(degree))
        cols.append(img)
    rows_keys = sorted({k for c in cols for k in c.terms}, key=lambda k: index[k])
    if not rows_keys:
        basis_vecs = [[int(i == j) for i in range(len(monos))] for j in range(len(monos))]
    elif mode == EXACT:
        # columns reversed so that each basis element is a low monomial plus higher corrections
        mat = [[c.coefficient(r) for c in reversed(cols)] for r in rows_keys]
        basis_vecs = [v[::-1] for v in linalg.nullspace(mat)]
        basis_vecs.reverse()
    else:
        mat = np.asarray([[complex(c.coefficient(r)) for c in cols] for r in rows_keys], dtype=complex)
        _, sv, vh = np.linalg.svd(mat)
        tol = 1e-10 * max(1.0, sv[0] if len(sv) else 1.0)
        rank = int(np.sum(sv > tol))
        basis_vecs = [row.conj() for row in vh[rank:]]
    out = []
    for v in basis_vecs:
        terms = {monos[i]: c for i, c in enumerate(v) if (c != 0 if mode == EXACT else abs(c) > 1e-14)}
        out.append(TruncatedSeries(n, degree, terms, mode))
    if mode == EXACT:
        # leading monomial = lowest degree, x1 before x2 before ...
        out.sort(key=lambda f: min((sum(k), tuple(-e for e in k)) for k in f.terms))
    return out


def monomial_integrals(lam, cap: int, mode: str = EXACT) -> FirstIntegralSet:
    """``x_j^{r_j} x_n^{s_j}`` for each transverse ``j`` of a normal-form spectrum."""
    spec = as_spectrum(lam)
    out = []
    for j in range(spec.n - 1):
        r, s = rj_sj(spec, j)
        k = [0] * spec.n
        k[j], k[-1] = r, s
        out.append(TruncatedSeries.monomial(k, 1, cap, mode))
    return FirstIntegralSet(out, ["monomial"] * len(out))


def transported_integrals(lam, transform: FormalDiffeo, exponents=None) -> FirstIntegralSet:
    """``g o T`` where ``T`` conjugates a field to a unit multiple of its linear model.

    ``exponents`` lists the monomials ``g`` to transport (members of the
    semigroup ``k . lambda = 0``); by default ``x_j^{r_j} x_n^{s_j}``.
    """
    if exponents is None:
        base = list(monomial_integrals(lam, transform.cap, transform.mode))
    else:
        spec = as_spectrum(lam)
        if any(spec.dot(k) for k in exponents):
            raise ValueError("exponents must satisfy k . lambda = 0")
        base = [TruncatedSeries.monomial(k, 1, transform.cap, transform.mode) for k in exponents]
    return FirstIntegralSet([transform(g) for g in base], ["transported"] * len(base))


def greedy_independent(candidates: Sequence[TruncatedSeries], q: int) -> list[int]:
    """Indices of a maximal (up to ``q``) prefix-greedy independent subset."""
    chosen: list[int] = []
    for i, f in enumerate(candidates):
        trial = [candidates[j] for j in chosen] + [f]
        if independence_test(trial).independent:
            chosen.append(i)
            if len(chosen) == q:
                break
    return chosen


def form_vanishes_on_line(form: ExteriorForm, direction: Sequence, params=(1, 2, -3)) -> bool:
    """Every coefficient of ``form`` vanishes at ``t * direction`` for the sample ``t`` (exact)."""
    for t in params:
        pt = [t * v for v in direction]
        for _, c in form.items():
            if c.evaluate_exact(pt):
                return False
    return True


def singular_directions(form: ExteriorForm, bound: int = 2) -> list[tuple[int, ...]]:
    """Primitive integer directions with entries in ``[-bound, bound]`` on which ``form`` vanishes.

    Directions are normalised so that the first nonzero entry is positive.
    """
    out = []
    for v in itertools.product(range(-bound, bound + 1), repeat=form.nvars):
        if not any(v) or math.gcd(*v) != 1:
            continue
        if next(x for x in v if x) < 0:
            continue
        if form_vanishes_on_line(form, v):
            out.append(v)
    return out


def nonsingular_fraction(form: ExteriorForm, points: np.ndarray, atol: float = 1e-12) -> float:
    """Fraction of ``points`` where some coefficient of ``form`` is nonzero."""
    hits = 0
    for p in points:
        if any(abs(c.evaluate(p)) > atol for _, c in form.items()):
            hits += 1
    return hits / len(points)


# --------------------------------------------------------------------------
# divisibility
# --------------------------------------------------------------------------


def _lex_lead(poly: dict):
    k = max(poly)
    return k, poly[k]


def _divide_once(f: dict, g: dict) -> dict | None:
    """Exact quotient ``f / g`` of polynomials (lex order), or ``None`` if ``g`` does not divide ``f``."""
    f = dict(f)
    gk, gc = _lex_lead(g)
    quot: dict = {}
    while f:
        fk, fc = _lex_lead(f)
        if any(a < b for a, b in zip(fk, gk)):
            return None
        qk = tuple(a - b for a, b in zip(fk, gk))
        qc = fc / gc
        quot[qk] = qc
        for k, c in g.items():
            t = tuple(a + b for a, b in zip(k, qk))
            v = f.get(t, 0) - qc * c
            if v:
                f[t] = v
            else:
                f.pop(t, None)
    return quot


def vanishing_order(f: TruncatedSeries, g: TruncatedSeries) -> float:
    """Largest ``m`` with ``g^m | f`` as polynomials; ``inf`` for ``f = 0``."""
    if f.mode != EXACT or g.mode != EXACT:
        raise ValueError("vanishing_order works in exact mode")
    if all(sum(k) == 0 for k in g.terms):
        raise ValueError("g must be non-constant")
    if f.is_zero():
        return math.inf
    cur = dict(f.terms)
    gt = dict(g.terms)
    m = 0
    while True:
        q = _divide_once(cur, gt)
        if q is None:
            return m
        cur = q
        m += 1


# --------------------------------------------------------------------------
# linearizing coordinates from integrals
# --------------------------------------------------------------------------


class ReconstructionError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class Reconstruction:
    transform: FormalDiffeo
    valid_degree: int
    linearized: bool
    unit_factor: TruncatedSeries | None
    defect: VectorField | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "transform": self.transform.to_json(),
            "valid_degree": self.valid_degree,
            "linearized": self.linearized,
            "unit_factor": None if self.unit_factor is None else str(self.unit_factor),
        }


def _root_of(q: TruncatedSeries, j: int, r: int, upto: int) -> TruncatedSeries:
    """``f = x_j + h.o.t.`` with ``f^r = q`` through degree ``upto`` (solved degree by degree)."""
    n, mode = q.nvars, q.mode
    xj = TruncatedSeries.variable(j, n, upto + r - 1, mode)
    lead = q.homogeneous(r)
    if lead != (xj ** r).homogeneous(r):
        raise ReconstructionError(f"leading part of integral {j + 1} is not x_{j + 1}^{r}", witness=str(lead))
    f = xj
    rr = coerce(r, mode)
    for d in range(2, upto + 1):
        target = q.homogeneous(r - 1 + d) - (f ** r).homogeneous(r - 1 + d)
        if target.is_zero() if mode == EXACT else target.max_abs() < 1e-14:
            continue
        new = {}
        for k, c in target.terms.items():
            if k[j] < r - 1:
                raise ReconstructionError(
                    f"root extraction obstructed for integral {j + 1} at degree {d}", witness=list(k))
            kk = k[:j] + (k[j] - (r - 1),) + k[j + 1:]
            new[kk] = c / rr
        f = f + TruncatedSeries(n, f.cap, new, mode)
    return f


def reconstruct_coordinates(X: VectorField, integrals, lam=None) -> Reconstruction:
    """Coordinates ``(f_1, ..., f_{n-1}, x_n)`` with ``F_j = f_j^{r_j} x_n^{s_j}``.

    ``lam`` defaults to the diagonal of the linear part of ``X`` (sign-flipped
    to the normal-form profile when needed).  The verdict checks that the
    pushforward of ``X`` equals ``(1 + g) sum lambda_j y_j d/dy_j`` through the
    degree where the roots are determined.
    """
    F = list(integrals)
    n, cap, mode = X.nvars, X.cap, X.mode
    lin = linear_part(X)
    diag = [lin[i][i] for i in range(n)]
    if lam is None:
        cls = classify_spectrum([complex(v).real for v in diag] if mode == FLOAT else diag)
        if not cls.isolated_separatrix or cls.separatrix_axis != n - 1:
            raise ReconstructionError("spectrum does not have the normal-form profile with the separatrix last")
        spec = cls.oriented()
    else:
        spec = as_spectrum(lam)
    if len(F) != n - 1:
        raise ReconstructionError(f"need {n - 1} integrals, got {len(F)}")
    roots = []
    valid = cap
    for j, Fj in enumerate(F):
        r, s = rj_sj(spec, j)
        quot = {}
        for k, c in Fj.terms.items():
            if k[-1] < s:
                raise ReconstructionError(f"integral {j + 1} is not divisible by x_n^{s}", witness=list(k))
            quot[k[:-1] + (k[-1] - s,)] = c
        q = TruncatedSeries(n, cap - s, quot, mode)
        upto = cap - s - r + 1
        if upto < 1:
            raise ReconstructionError(f"cap {cap} too small for integral {j + 1}")
        roots.append(_root_of(q, j, r, upto).truncate(upto))
        valid = min(valid, upto)
    comps = [f.with_cap(cap).truncate(valid) for f in roots]
    comps.append(TruncatedSeries.variable(n - 1, n, cap, mode))
    phi = FormalDiffeo(comps)
    pushed = pushforward(phi, X).truncate(valid)
    # the pushed field should be (1 + g) times the model; read g off the last component
    base = coerce(diag[-1], mode)
    last = pushed[n - 1]
    quot = {}
    ok = True
    for k, c in last.terms.items():
        if k[-1] < 1:
            ok = False
            break
        quot[k[:-1] + (k[-1] - 1,)] = c / base
    unit = None
    defect = None
    if ok:
        unit = TruncatedSeries(n, cap, quot, mode).truncate(valid - 1)
        model = [TruncatedSeries.variable(i, n, cap, mode).scale(coerce(diag[i], mode)) for i in range(n)]
        expected = VectorField([(m * unit).truncate(valid) for m in model])
        defect = (pushed - expected).truncate(valid)
        ok = defect.is_zero() if mode == EXACT else defect.max_abs() <= 1e-9
    g = None if unit is None else unit - 1
    return Reconstruction(phi, valid, bool(ok), g, defect)


__all__ = [
    "IndependenceVerdict",
    "FirstIntegralSet",
    "Reconstruction",
    "ReconstructionError",
    "independence_test",
    "first_integral_kernel",
    "monomial_integrals",
    "transported_integrals",
    "greedy_independent",
    "vanishing_order",
    "form_vanishes_on_line",
    "singular_directions",
    "nonsingular_fraction",
    "reconstruct_coordinates",
]
