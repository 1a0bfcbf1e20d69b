"""Holonomy around the isolated separatrix and the invariants it produces.

For a field ``X`` with ``X(x_n) = lambda_n x_n`` the loop ``x_n = c0 e^{2 pi i t}``
is traced by the flow of ``(2 pi i / lambda_n) X`` for ``t`` in ``[0, 1]``; the
return map on the transversal ``{x_n = c0}`` is the holonomy ``Theta``.  Its
jet is obtained by integrating the transverse jet ODE, where ``x_n(t)`` is an
explicit scalar.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .jets import JetSpace, integrate_jets
from .resonance import Spectrum, SpectrumError, as_spectrum, holonomy_order, rj_sj
from .scalars import EXACT, FLOAT, GaussianRational
from .series import TruncatedSeries
from .vectorfields import FormalDiffeo, VectorField, compose_diffeo, linear_part

TOL = 1e-10


class HolonomyError(ValueError):
    """Field does not satisfy the holonomy preconditions."""


class OrderNotCertified(ValueError):
    pass


def _separatrix_spectrum(X: VectorField) -> tuple[list[complex], Spectrum]:
    n = X.nvars
    lin = linear_part(X)
    lams = [lin[i][i] for i in range(n)]
    if any(lin[i][j] != 0 for i in range(n) for j in range(n) if i != j):
        raise HolonomyError("linear part is not diagonal")
    xn = TruncatedSeries.variable(n - 1, n, X.cap, X.mode).scale(lams[-1])
    if X.mode == EXACT:
        ok = X[n - 1] == xn
    else:
        ok = X[n - 1].allclose(xn, 1e-14)
    if not ok:
        raise HolonomyError("X(x_n) is not lambda_n * x_n")
    ln = complex(lams[-1])
    if ln.imag or ln.real <= 0 or not float(ln.real).is_integer():
        raise HolonomyError(f"lambda_n must be a positive integer, got {lams[-1]}")
    return [complex(v) for v in lams], as_spectrum([complex(v) for v in lams])


def holonomy_map(X: VectorField, c0: complex, cap: int | None = None, rtol: float = 1e-13) -> FormalDiffeo:
    """Jet at ``cap`` of the return map on ``{x_n = c0}`` in the transverse variables."""
    n = X.nvars
    if n < 2:
        raise HolonomyError("need at least one transverse variable")
    cap = X.cap if cap is None else cap
    c0 = complex(c0)
    if abs(c0) == 0:
        raise HolonomyError("c0 must be nonzero")
    lams, _ = _separatrix_spectrum(X)
    ln = lams[-1].real
    m = n - 1
    space = JetSpace(m, cap)
    size = space.size
    omega = 2j * math.pi / ln
    # per component: list of (transverse exponent, x_n exponent, coefficient)
    comps = []
    for j in range(m):
        comps.append([(k[:-1], k[-1], complex(c)) for k, c in X[j].terms.items()])
    for j, terms in enumerate(comps):
        for kp, kn, _ in terms:
            if sum(kp) == 0:
                raise HolonomyError(f"component {j} has a term not vanishing on the separatrix")

    def rhs(t, state):
        xs = [state[i * size:(i + 1) * size] for i in range(m)]
        xn = c0 * cmath.exp(2j * math.pi * t)
        memo: dict = {}

        def mono(k):
            got = memo.get(k)
            if got is None:
                i = next(i for i, e in enumerate(k) if e)
                prev = k[:i] + (k[i] - 1,) + k[i + 1:]
                got = xs[i] if sum(prev) == 0 else space.mul(mono(prev), xs[i])
                memo[k] = got
            return got

        out = []
        for j in range(m):
            acc = np.zeros(size, dtype=complex)
            for kp, kn, c in comps[j]:
                acc = acc + (c * xn ** kn) * mono(kp)
            out.append(omega * acc)
        return np.concatenate(out)

    y0 = np.concatenate([space.variable(j) for j in range(m)])
    yend = integrate_jets(rhs, y0, rtol=rtol)
    theta = FormalDiffeo([space.to_series(yend[i * size:(i + 1) * size]) for i in range(m)], check=False)
    expected = np.diag([cmath.exp(2j * math.pi * lams[j].real / ln) for j in range(m)])
    if np.max(np.abs(np.asarray(theta.linear_part) - expected)) > TOL:
        raise HolonomyError("computed linear part deviates from the expected phases")
    return theta


@dataclass
class OrderResult:
    order: int | None
    max_order: int
    tangency_order: int | None = None  # of Theta^{lambda_n} with id; None when identity at cap
    deviation: float = 0.0  # smallest |theta^m - id| seen

    @property
    def certified(self) -> bool:
        return self.order is not None

    def to_json(self) -> dict:
        return {
            "order": self.order if self.order is not None else f"not certified <= {self.max_order}",
            "certified": self.certified,
            "tangency_order": self.tangency_order,
            "deviation": self.deviation,
        }


def _tangency_order(phi: FormalDiffeo, atol: float) -> int | None:
    """Lowest degree at which ``phi - id`` has a coefficient above ``atol``."""
    ident = FormalDiffeo.identity(phi.nvars, phi.cap, phi.mode)
    degs = []
    for a, b in zip(phi, ident):
        for k, c in (a - b).terms.items():
            if abs(complex(c)) > atol:
                degs.append(sum(k))
    return min(degs) if degs else None


def order_of(theta: FormalDiffeo, max_order: int, lambda_n: int | None = None, atol: float = TOL) -> OrderResult:
    """Smallest ``m <= max_order`` with ``theta^m = id`` at the cap."""
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    power = theta
    found = None
    best = math.inf
    for m in range(1, max_order + 1):
        dev = power.max_deviation(FormalDiffeo.identity(theta.nvars, theta.cap, theta.mode))
        best = min(best, dev)
        if dev <= atol:
            found = m
            break
        power = compose_diffeo(theta, power)
    tang = None
    if lambda_n is not None:
        tang = _tangency_order(theta.power(lambda_n), atol)
    return OrderResult(found, max_order, tang, best)


def linearize_finite(theta: FormalDiffeo, m: int, atol: float = 1e-8) -> FormalDiffeo:
    """Averaging ``G = (1/m) sum_{j<m} L^-j o theta^j`` with ``L = D_0 theta``.

    ``G`` is tangent to the identity and ``G o theta = L o G``.
    """
    ident = FormalDiffeo.identity(theta.nvars, theta.cap, theta.mode)
    if theta.power(m).max_deviation(ident) > atol:
        raise OrderNotCertified(f"theta^{m} is not the identity at cap")
    lin = FormalDiffeo.linear(theta.linear_part, theta.cap, theta.mode)
    lin_inv = lin.inverse()
    acc = [TruncatedSeries.zero(theta.nvars, theta.cap, theta.mode) for _ in range(theta.nvars)]
    power, back = ident, ident
    for _ in range(m):
        term = compose_diffeo(back, power)
        acc = [a + t for a, t in zip(acc, term)]
        power = compose_diffeo(theta, power)
        back = compose_diffeo(lin_inv, back)
    scale = 1.0 / m if theta.mode == FLOAT else GaussianRational(Fraction(1, m))
    return FormalDiffeo([a.scale(scale) for a in acc], check=False)


def conjugacy_defect(G: FormalDiffeo, theta: FormalDiffeo) -> float:
    """``max |G o theta - D_0 theta o G|`` over coefficients."""
    lin = FormalDiffeo.linear(theta.linear_part, theta.cap, theta.mode)
    return compose_diffeo(G, theta).max_deviation(compose_diffeo(lin, G))


# --------------------------------------------------------------------------


def phase_fraction(lam_j: int, lam_n: int) -> Fraction:
    """``p/q`` in ``[0, 1)`` with ``e^{2 pi i lam_j / lam_n} = e^{2 pi i p/q}``."""
    f = Fraction(lam_j, lam_n)
    return f - math.floor(f)


@dataclass
class HolonomyGroup:
    generator: FormalDiffeo
    order: int | None
    max_order: int
    spectrum: Spectrum | None = None
    elements: list[FormalDiffeo] = field(default_factory=list)

    @classmethod
    def from_generator(cls, theta: FormalDiffeo, max_order: int, spectrum=None, atol: float = TOL) -> "HolonomyGroup":
        res = order_of(theta, max_order, atol=atol)
        elems = []
        if res.certified:
            p = FormalDiffeo.identity(theta.nvars, theta.cap, theta.mode)
            for _ in range(res.order):
                elems.append(p)
                p = compose_diffeo(theta, p)
        spec = as_spectrum(spectrum) if spectrum is not None else None
        return cls(theta, res.order, max_order, spec, elems)

    @classmethod
    def linear_model(cls, lam, cap: int) -> "HolonomyGroup":
        spec = as_spectrum(lam)
        ln = spec.lam[-1]
        diag = [[cmath.exp(2j * math.pi * spec.lam[i] / ln) if i == j else 0 for j in range(spec.n - 1)]
                for i in range(spec.n - 1)]
        return cls.from_generator(FormalDiffeo.linear(diag, cap, FLOAT), holonomy_order(spec), spec)

    @property
    def certified(self) -> bool:
        return self.order is not None

    def phases(self) -> list[dict]:
        if self.spectrum is None:
            lin = np.asarray(self.generator.linear_part, dtype=complex)
            return [{"value": [float(v.real), float(v.imag)]} for v in np.diag(lin)]
        out = []
        ln = self.spectrum.lam[-1]
        for lj in self.spectrum.lam[:-1]:
            f = phase_fraction(lj, ln)
            v = cmath.exp(2j * math.pi * float(f))
            out.append({"p": f.numerator, "q": f.denominator, "value": [v.real, v.imag]})
        return out

    def to_json(self) -> dict:
        return {
            "order": self.order if self.order is not None else f"not certified <= {self.max_order}",
            "certified": self.certified,
            "phases": self.phases(),
            "generator": self.generator.to_json(),
        }


# --------------------------------------------------------------------------
# invariant polynomials
# --------------------------------------------------------------------------


@dataclass
class InvariantSeed:
    series: TruncatedSeries
    index: int
    r: int
    s: int
    provenance: str = "holonomy-invariant"

    def to_json(self) -> dict:
        return {"j": self.index, "r": self.r, "s": self.s, "provenance": self.provenance,
                "series": self.series.to_json()}


def invariant_polynomials_average(G: FormalDiffeo, lam, c0: complex) -> list[InvariantSeed]:
    """Transversal invariants ``c0^{s_j} (x_j^{r_j} o G)``."""
    spec = as_spectrum(lam)
    if not spec.is_normal_profile():
        raise SpectrumError(f"spectrum {spec.lam} does not have the profile lambda_1..lambda_(n-1) < 0 < lambda_n")
    if G.nvars != spec.n - 1:
        raise ValueError("G must act on the transverse variables")
    out = []
    for j in range(spec.n - 1):
        r, s = rj_sj(spec, j)
        xj = TruncatedSeries.variable(j, G.nvars, G.cap, G.mode)
        seed = G(xj ** r).scale(complex(c0) ** s if G.mode == FLOAT else GaussianRational.coerce(c0) ** s)
        out.append(InvariantSeed(seed, j, r, s))
    return out


def is_invariant(f: TruncatedSeries, h: FormalDiffeo, atol: float = TOL) -> bool:
    return f.compose(h.components).allclose(f, atol)


def _linear_rows(group: HolonomyGroup) -> list[np.ndarray]:
    return [np.asarray(g.linear_part, dtype=complex) for g in group.elements]


def separating(forms: Sequence[Sequence], group: HolonomyGroup, tol: float = 1e-9) -> bool:
    """Every choice of rows ``L_j . g_j`` (``g_j`` in the linearized group) is nonsingular."""
    mats = _linear_rows(group)
    q = len(forms)
    rows = [[np.asarray(L, dtype=complex) @ g for g in mats] for L in forms]
    for choice in itertools.product(range(len(mats)), repeat=q):
        m = np.vstack([rows[j][c] for j, c in enumerate(choice)])
        if abs(np.linalg.det(m)) < tol:
            return False
    return True


def choose_linear_forms(group: HolonomyGroup, seed: int = 0, bound: int = 5, max_tries: int = 200) -> list[list[int]]:
    """Random integer forms satisfying :func:`separating`; deterministic for a seed."""
    q = group.generator.nvars
    if separating(np.eye(q), group):
        return [[int(i == j) for j in range(q)] for i in range(q)]
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        forms = rng.integers(-bound, bound + 1, size=(q, q))
        if separating(forms, group):
            return forms.tolist()
    raise RuntimeError("no separating linear forms found")


def invariant_polynomials_product(group: HolonomyGroup, forms=None, seed: int = 0) -> tuple[list[TruncatedSeries], list]:
    """``F_j = prod_{h in H} (L_j o h)`` for each linear form ``L_j``.

    Returns the polynomials and the forms used.  The working cap is raised to
    ``|H|`` when needed so the products are not truncated.
    """
    if not group.certified:
        raise OrderNotCertified("product construction needs a finite group")
    q = group.generator.nvars
    if forms is None:
        forms = choose_linear_forms(group, seed)
    cap = max(group.generator.cap, len(group.elements))
    mode = group.generator.mode
    elems = [FormalDiffeo([c.with_cap(cap) for c in h], check=False) for h in group.elements]
    xs = TruncatedSeries.variables(q, cap, mode)
    out = []
    for L in forms:
        lin = TruncatedSeries.zero(q, cap, mode)
        for x, a in zip(xs, L):
            lin = lin + x.scale(a)
        prod = TruncatedSeries.constant(1, q, cap, mode)
        for h in elems:
            prod = prod * h(lin)
        if prod.max_abs() == 0 if mode == FLOAT else prod.is_zero():
            raise ValueError(f"degenerate linear form {list(L)}: product vanishes")
        out.append(prod)
    return out, [list(L) for L in forms]


def zero_locus_check(polys: Sequence[TruncatedSeries], radius: float = 1.0, samples: int = 10_000,
                     seed: int = 0, thresh: float = 1e-8, origin_guard: float = 1e-3) -> dict:
    """Statistical check that the polynomials have no common zero away from 0.

    Grid points plus uniform random samples in the polydisc; a sample counts
    as a common zero if every ``|F_j| <= thresh`` while its norm exceeds
    ``origin_guard``.
    """
    q = polys[0].nvars
    rng = np.random.default_rng(seed)
    grid_side = max(2, int(round((samples // 2) ** (1.0 / (2 * q)))))
    axis = np.linspace(-radius, radius, grid_side)
    grid = []
    for parts in itertools.product(axis, repeat=2 * q):
        grid.append([complex(parts[2 * i], parts[2 * i + 1]) for i in range(q)])
    pts = np.asarray(grid, dtype=complex)[: samples // 2]
    rnd = rng.uniform(-radius, radius, size=(samples - len(pts), q)) + 1j * rng.uniform(
        -radius, radius, size=(samples - len(pts), q))
    pts = np.vstack([pts, rnd])
    vals = np.asarray([[p.evaluate(x) for p in polys] for x in pts])
    norms = np.linalg.norm(pts, axis=1)
    small = np.all(np.abs(vals) <= thresh, axis=1) & (norms > origin_guard)
    return {
        "statistical": True,
        "samples": int(len(pts)),
        "common_zeros_found": int(small.sum()),
        "threshold": thresh,
        "origin_guard": origin_guard,
        "passed": bool(not small.any()),
    }


__all__ = [
    "HolonomyError",
    "OrderNotCertified",
    "OrderResult",
    "HolonomyGroup",
    "InvariantSeed",
    "holonomy_map",
    "order_of",
    "linearize_finite",
    "conjugacy_defect",
    "phase_fraction",
    "invariant_polynomials_average",
    "invariant_polynomials_product",
    "choose_linear_forms",
    "separating",
    "is_invariant",
    "zero_locus_check",
]
