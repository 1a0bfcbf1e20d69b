"""Integer eigenvalue diagnostics: the semigroup of invariant monomials and resonances."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

from .linalg import integer_rank
from .scalars import GaussianRational
from .series import Multidegree, degree_key


class SpectrumError(ValueError):
    """Eigenvalues are not a complex multiple of an integer vector, or violate a sign profile."""


def _to_fraction(v) -> Fraction:
    if isinstance(v, GaussianRational):
        if v.im:
            raise SpectrumError(f"non-real eigenvalue {v}")
        return Fraction(int(v.re.numerator), int(v.re.denominator))
    if isinstance(v, bool):
        raise SpectrumError("boolean is not an eigenvalue")
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float):
        if not v.is_integer():
            raise SpectrumError(f"float eigenvalue {v!r} is not an integer; pass a Fraction instead")
        return Fraction(int(v))
    if isinstance(v, complex):
        if v.imag or not v.real.is_integer():
            raise SpectrumError(f"eigenvalue {v!r} is not an integer")
        return Fraction(int(v.real))
    raise SpectrumError(f"cannot read eigenvalue {v!r}")


@dataclass(frozen=True)
class Spectrum:
    """Integer eigenvalue vector with ``gcd(|lambda_j|) = 1``.

    ``scale`` records the positive factor removed during normalisation, so
    that ``original = scale * lambda``.
    """

    lam: tuple[int, ...]
    scale: Fraction = Fraction(1)

    @classmethod
    def from_values(cls, values: Sequence) -> "Spectrum":
        fr = [_to_fraction(v) for v in values]
        if not fr:
            raise SpectrumError("empty spectrum")
        den = math.lcm(*(f.denominator for f in fr))
        ints = [int(f * den) for f in fr]
        g = math.gcd(*ints)
        if g == 0:
            return cls(tuple(ints), Fraction(1))
        return cls(tuple(i // g for i in ints), Fraction(g, den))

    @classmethod
    def from_complex(cls, values: Sequence[complex], tol: float = 1e-9, max_den: int = 1000) -> "Spectrum":
        """Recover an integer direction from complex eigenvalues ``c * (integers)``."""
        vals = [complex(v) for v in values]
        pivot = max(vals, key=abs)
        if abs(pivot) < tol:
            return cls(tuple(0 for _ in vals), Fraction(1))
        ratios = []
        for v in vals:
            r = v / pivot
            if abs(r.imag) > tol:
                raise SpectrumError("eigenvalues are not real multiples of one another")
            fr = Fraction(r.real).limit_denominator(max_den)
            if abs(float(fr) - r.real) > tol:
                raise SpectrumError(f"eigenvalue ratio {r.real!r} is not rational (denominator <= {max_den})")
            ratios.append(fr)
        spec = cls.from_values(ratios)
        if (pivot.real < 0 if abs(pivot.real) > tol else pivot.imag < 0):
            spec = cls(tuple(-x for x in spec.lam), spec.scale)
        return spec

    def __len__(self):
        return len(self.lam)

    def __getitem__(self, j):
        return self.lam[j]

    def __iter__(self):
        return iter(self.lam)

    @property
    def n(self) -> int:
        return len(self.lam)

    @property
    def sign_profile(self) -> dict:
        return {
            "negative": sum(1 for v in self.lam if v < 0),
            "zero": sum(1 for v in self.lam if v == 0),
            "positive": sum(1 for v in self.lam if v > 0),
        }

    def negated(self) -> "Spectrum":
        return Spectrum(tuple(-v for v in self.lam), self.scale)

    def dot(self, k: Sequence[int]) -> int:
        return sum(a * b for a, b in zip(k, self.lam))

    def is_normal_profile(self) -> bool:
        """``lambda_1..lambda_{n-1} < 0 < lambda_n``."""
        return all(v < 0 for v in self.lam[:-1]) and self.lam[-1] > 0

    def to_json(self) -> list[int]:
        return list(self.lam)


def as_spectrum(lam) -> Spectrum:
    return lam if isinstance(lam, Spectrum) else Spectrum.from_values(lam)


def _exponents_up_to(n: int, bound: int):
    """All ``k`` in ``N^n`` with ``1 <= |k| <= bound`` in canonical order."""
    for d in range(1, bound + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            k = [0] * n
            for i in combo:
                k[i] += 1
            yield tuple(k)


def _members(spec: Spectrum, bound: int, value: int = 0) -> list[tuple[int, ...]]:
    out = [k for k in _exponents_up_to(spec.n, bound) if spec.dot(k) == value]
    out.sort(key=degree_key)
    return out


@dataclass(frozen=True)
class ResonanceLattice:
    spectrum: Spectrum
    generators: tuple[Multidegree, ...]
    search_bound: int
    rank: int
    complete_under_bound: bool
    members_enumerated: int = field(default=0, compare=False)

    def to_json(self) -> dict:
        return {
            "lambda": self.spectrum.to_json(),
            "generators": [list(g) for g in self.generators],
            "rank": self.rank,
            "complete_under_bound": self.complete_under_bound,
            "search_bound": self.search_bound,
        }


def _decomposes(k, gens: Sequence[tuple[int, ...]]) -> bool:
    """Whether ``k`` is a non-negative integer combination of ``gens`` (exhaustive)."""
    if not any(k):
        return True
    for g in gens:
        if all(a >= b for a, b in zip(k, g)):
            if _decomposes(tuple(a - b for a, b in zip(k, g)), gens):
                return True
    return False


def resonance_lattice(lam, bound: int) -> ResonanceLattice:
    """Minimal generators of ``M_lambda = {k >= 0 : k . lambda = 0}`` up to total degree ``bound``.

    A member is a generator iff no other nonzero member lies componentwise
    below it (the difference would again be a member).  The completeness flag
    is heuristic: every enumerated member decomposes and ``bound`` is at least
    twice the largest generator degree.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    spec = as_spectrum(lam)
    members = _members(spec, bound, 0)
    gens: list[tuple[int, ...]] = []
    for k in members:
        if not any(all(a >= b for a, b in zip(k, g)) for g in gens):
            gens.append(k)
    gens.sort(key=degree_key)
    all_decompose = all(_decomposes(k, gens) for k in members)
    max_deg = max((sum(g) for g in gens), default=0)
    complete = all_decompose and bound >= 2 * max_deg
    return ResonanceLattice(
        spectrum=spec,
        generators=tuple(Multidegree(g) for g in gens),
        search_bound=bound,
        rank=integer_rank(gens),
        complete_under_bound=complete,
        members_enumerated=len(members),
    )


def resonant_monomials(lam, j: int, degree: int) -> list[Multidegree]:
    """Exponents ``k`` with ``|k| <= degree`` and ``k . lambda = lambda_j`` (``j`` 0-based).

    These are the monomials ``x^k d/dx_j`` that no normalising change of
    coordinates can remove.
    """
    spec = as_spectrum(lam)
    if not 0 <= j < spec.n:
        raise IndexError(f"component index {j} out of range")
    return [Multidegree(k) for k in _members(spec, degree, spec.lam[j])]


def invariant_monomials(lam, degree: int) -> list[Multidegree]:
    """Members ``k`` of ``M_lambda`` with ``1 <= |k| <= degree``; ``x^k`` is a first integral of ``X_0``."""
    return [Multidegree(k) for k in _members(as_spectrum(lam), degree, 0)]


def is_resonant(lam, j: int, k: Sequence[int]) -> bool:
    spec = as_spectrum(lam)
    return spec.dot(k) == spec.lam[j]


def homological_denominator(lam, j: int, k: Sequence[int]) -> int:
    """``lambda_j - k . lambda``: the eigenvalue of ``[ . , X_0]`` on ``x^k d/dx_j``."""
    spec = as_spectrum(lam)
    return spec.lam[j] - spec.dot(k)


def rj_sj(lam, j: int) -> tuple[int, int]:
    """``(lambda_n / g, -lambda_j / g)`` with ``g = gcd(lambda_j, lambda_n)``; ``j`` is 0-based."""
    spec = as_spectrum(lam)
    n = spec.n
    if not 0 <= j < n - 1:
        raise IndexError(f"j must index a transverse variable, got {j}")
    lj, ln = spec.lam[j], spec.lam[-1]
    if not (lj < 0 < ln):
        raise SpectrumError(f"need lambda_j < 0 < lambda_n, got {lj}, {ln}")
    g = math.gcd(lj, ln)
    return ln // g, -lj // g


def integral_exponents(lam) -> list[Multidegree]:
    """Exponents ``r_j e_j + s_j e_n`` of the monomial first integrals of the linear model."""
    spec = as_spectrum(lam)
    out = []
    for j in range(spec.n - 1):
        r, s = rj_sj(spec, j)
        k = [0] * spec.n
        k[j], k[-1] = r, s
        out.append(Multidegree(k))
    return out


def holonomy_order(lam) -> int:
    """``lcm_j lambda_n / gcd(lambda_j, lambda_n)``: order of the linear holonomy."""
    spec = as_spectrum(lam)
    ln = spec.lam[-1]
    return math.lcm(*(abs(ln) // math.gcd(lj, ln) for lj in spec.lam[:-1])) if spec.n > 1 else 1


@dataclass(frozen=True)
class SpectrumClassification:
    spectrum: Spectrum
    zero_eigenvalue: bool
    negatives: int
    positives: int
    matches_normal_profile: bool
    sign_flip: bool
    isolated_separatrix: bool
    separatrix_axis: int | None

    def oriented(self) -> Spectrum:
        """Spectrum with the sign convention ``lambda_1..lambda_{n-1} < 0 < lambda_n`` applied."""
        return self.spectrum.negated() if self.sign_flip else self.spectrum

    def to_json(self) -> dict:
        return {
            "lambda": self.spectrum.to_json(),
            "zero_eigenvalue": self.zero_eigenvalue,
            "negatives": self.negatives,
            "positives": self.positives,
            "matches_normal_form_profile": self.matches_normal_profile,
            "sign_flip": self.sign_flip,
            "isolated_separatrix": self.isolated_separatrix,
            "separatrix_axis": self.separatrix_axis,
        }


def classify_spectrum(lam) -> SpectrumClassification:
    """Sign profile of the linear model.

    The linear model has an isolated separatrix exactly when one eigenvalue
    has a sign different from all the others (``r`` in ``{1, n-1}``); after
    the flip ``X -> -X`` when needed, the odd one out is positive and its axis
    is the separatrix.  ``matches_normal_profile`` means the profile is the normal-form
    one up to that sign flip and a permutation putting ``separatrix_axis`` last.
    """
    spec = as_spectrum(lam)
    n = spec.n
    neg = sum(1 for v in spec.lam if v < 0)
    pos = sum(1 for v in spec.lam if v > 0)
    zero = neg + pos < n
    flip = False
    axis = None
    isolated = False
    if not zero and n >= 2:
        if neg == n - 1:
            axis = next(i for i, v in enumerate(spec.lam) if v > 0)
            isolated = True
        elif neg == 1:
            flip = True
            axis = next(i for i, v in enumerate(spec.lam) if v < 0)
            isolated = True
    matches = isolated
    return SpectrumClassification(spec, zero, neg, pos, matches, flip, isolated, axis)
