"""Sparse truncated multivariate power series over C.

A :class:`TruncatedSeries` lives in ``C[[x_1..x_n]] / m^(cap+1)``: every
stored multidegree has total degree ``<= cap`` and no stored coefficient is
zero.  Variables are indexed from 0.  The cap is structural: combining two
series with different caps, variable counts or scalar modes raises
:class:`DimensionError` instead of re-truncating silently.
"""
from __future__ import annotations

import itertools
from functools import reduce
from operator import add
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

from .scalars import (
    EXACT,
    FLOAT,
    GaussianRational,
    ModeError,
    coerce,
    from_json_parts,
    to_json_parts,
)


class DimensionError(ValueError):
    """Operands disagree on variable count, truncation cap or scalar mode."""


class CompositionError(ValueError):
    """Substituted map has a nonzero constant term."""


class Multidegree(tuple):
    """Exponent vector ``(k_1, ..., k_n)`` ordered by total degree, then lexicographically."""

    __slots__ = ()

    def __new__(cls, exponents: Iterable[int]):
        exps = tuple(int(e) for e in exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        return super().__new__(cls, exps)

    @property
    def total(self) -> int:
        return sum(self)

    def __lt__(self, other):
        return (sum(self), tuple(self)) < (sum(other), tuple(other))

    def __le__(self, other):
        return (sum(self), tuple(self)) <= (sum(other), tuple(other))

    def __gt__(self, other):
        return (sum(self), tuple(self)) > (sum(other), tuple(other))

    def __ge__(self, other):
        return (sum(self), tuple(self)) >= (sum(other), tuple(other))

    def __repr__(self):
        return f"Multidegree({tuple(self)})"


def degree_key(k: Sequence[int]):
    """Canonical sort key: total degree, then lexicographic."""
    return (sum(k), tuple(k))


def unit_vector(n: int, j: int) -> tuple[int, ...]:
    return tuple(1 if i == j else 0 for i in range(n))


def monomials_of_degree(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent vectors of total ``degree`` in canonical order."""
    if nvars == 0:
        return [()] if degree == 0 else []
    out = []
    for bars in itertools.combinations(range(degree + nvars - 1), nvars - 1):
        prev, k = -1, []
        for b in bars:
            k.append(b - prev - 1)
            prev = b
        k.append(degree + nvars - 2 - prev)
        out.append(tuple(k))
    out.sort()
    return out


def monomials_up_to(nvars: int, degree: int, start: int = 0) -> list[tuple[int, ...]]:
    out = []
    for d in range(start, degree + 1):
        out.extend(monomials_of_degree(nvars, d))
    return out


class TruncatedSeries:
    """Power series in ``nvars`` variables truncated above total degree ``cap``.

    ``terms`` maps exponent tuples to scalars of ``mode`` (``"exact"`` or
    ``"float"``).  Instances are treated as immutable.
    """

    __slots__ = ("nvars", "cap", "mode", "_terms")

    def __init__(self, nvars: int, cap: int, terms: Mapping | None = None, mode: str = EXACT):
        if nvars < 0 or cap < 0:
            raise ValueError("nvars and cap must be non-negative")
        if mode not in (EXACT, FLOAT):
            raise ValueError(f"unknown mode {mode!r}")
        self.nvars = nvars
        self.cap = cap
        self.mode = mode
        clean = {}
        for k, c in (terms or {}).items():
            k = tuple(int(e) for e in k)
            if len(k) != nvars:
                raise DimensionError(f"multidegree {k} has wrong length for nvars={nvars}")
            if any(e < 0 for e in k):
                raise ValueError(f"negative exponent in {k}")
            if sum(k) > cap:
                continue
            c = coerce(c, mode)
            if c:
                clean[k] = clean[k] + c if k in clean else c
                if not clean[k]:
                    del clean[k]
        self._terms = clean

    @classmethod
    def _raw(cls, nvars, cap, mode, terms: dict) -> "TruncatedSeries":
        # terms already normalized: tuple keys within cap, nonzero scalars of mode
        obj = object.__new__(cls)
        obj.nvars = nvars
        obj.cap = cap
        obj.mode = mode
        obj._terms = terms
        return obj

    # constructors -------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int, cap: int, mode: str = EXACT) -> "TruncatedSeries":
        return cls._raw(nvars, cap, mode, {})

    @classmethod
    def constant(cls, value, nvars: int, cap: int, mode: str = EXACT) -> "TruncatedSeries":
        return cls(nvars, cap, {(0,) * nvars: value}, mode)

    @classmethod
    def variable(cls, j: int, nvars: int, cap: int, mode: str = EXACT) -> "TruncatedSeries":
        if not 0 <= j < nvars:
            raise IndexError(f"variable index {j} out of range for nvars={nvars}")
        return cls(nvars, cap, {unit_vector(nvars, j): 1}, mode)

    @classmethod
    def monomial(cls, k: Sequence[int], coeff=1, cap: int = 0, mode: str = EXACT) -> "TruncatedSeries":
        return cls(len(k), cap, {tuple(k): coeff}, mode)

    @classmethod
    def variables(cls, nvars: int, cap: int, mode: str = EXACT) -> list["TruncatedSeries"]:
        return [cls.variable(j, nvars, cap, mode) for j in range(nvars)]

    # mapping view -------------------------------------------------------

    @property
    def terms(self) -> Mapping[tuple, object]:
        return MappingProxyType(self._terms)

    def items(self) -> list[tuple[tuple, object]]:
        """Terms in canonical (degree, lex) order."""
        return sorted(self._terms.items(), key=lambda kv: degree_key(kv[0]))

    def coefficient(self, k: Sequence[int]):
        c = self._terms.get(tuple(k))
        if c is None:
            return GaussianRational(0) if self.mode == EXACT else 0j
        return c

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple]:
        return iter(sorted(self._terms, key=degree_key))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def degree(self) -> int:
        """Largest total degree present (-1 for the zero series)."""
        return max((sum(k) for k in self._terms), default=-1)

    def order(self) -> int | None:
        """Smallest total degree present (``None`` for zero)."""
        return min((sum(k) for k in self._terms), default=None)

    def constant_term(self):
        return self.coefficient((0,) * self.nvars)

    # structural ---------------------------------------------------------

    def _check(self, other: "TruncatedSeries"):
        if not isinstance(other, TruncatedSeries):
            raise TypeError(f"expected TruncatedSeries, got {type(other).__name__}")
        if self.nvars != other.nvars:
            raise DimensionError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
        if self.cap != other.cap:
            raise DimensionError(f"cap mismatch: {self.cap} vs {other.cap}")
        if self.mode != other.mode:
            raise ModeError(f"mode mismatch: {self.mode} vs {other.mode}")

    def same_shape(self, other: "TruncatedSeries") -> bool:
        return (self.nvars, self.cap, self.mode) == (other.nvars, other.cap, other.mode)

    def _like(self, terms: dict) -> "TruncatedSeries":
        return TruncatedSeries._raw(self.nvars, self.cap, self.mode, terms)

    def homogeneous(self, d: int) -> "TruncatedSeries":
        return self._like({k: c for k, c in self._terms.items() if sum(k) == d})

    def truncate(self, d: int) -> "TruncatedSeries":
        """Drop terms of total degree above ``d``; the cap is unchanged."""
        return self._like({k: c for k, c in self._terms.items() if sum(k) <= d})

    def filter(self, predicate) -> "TruncatedSeries":
        return self._like({k: c for k, c in self._terms.items() if predicate(k)})

    def with_cap(self, cap: int) -> "TruncatedSeries":
        """Explicit change of cap (truncating when lowering it)."""
        return TruncatedSeries._raw(
            self.nvars, cap, self.mode, {k: c for k, c in self._terms.items() if sum(k) <= cap}
        )

    def to_float(self) -> "TruncatedSeries":
        if self.mode == FLOAT:
            return self
        return TruncatedSeries._raw(
            self.nvars, self.cap, FLOAT, {k: complex(c) for k, c in self._terms.items()}
        )

    def embed(self, nvars: int, positions: Sequence[int]) -> "TruncatedSeries":
        """Re-index into ``nvars`` variables, variable i going to ``positions[i]``."""
        terms = {}
        for k, c in self._terms.items():
            new = [0] * nvars
            for i, e in enumerate(k):
                new[positions[i]] += e
            terms[tuple(new)] = c
        return TruncatedSeries._raw(nvars, self.cap, self.mode, terms)

    # arithmetic ---------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.same_shape(other) and self._terms == other._terms

    __hash__ = None

    def __neg__(self):
        return self._like({k: -c for k, c in self._terms.items()})

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self + TruncatedSeries.constant(other, self.nvars, self.cap, self.mode)
        self._check(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            if k in terms:
                s = terms[k] + c
                if s:
                    terms[k] = s
                else:
                    del terms[k]
            else:
                terms[k] = c
        return self._like(terms)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self + (-coerce(other, self.mode))
        self._check(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            if k in terms:
                s = terms[k] - c
                if s:
                    terms[k] = s
                else:
                    del terms[k]
            else:
                terms[k] = -c
        return self._like(terms)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> "TruncatedSeries":
        factor = coerce(factor, self.mode)
        if not factor:
            return self._like({})
        return self._like({k: c * factor for k, c in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            if isinstance(other, (float, complex)) and self.mode == EXACT:
                raise ModeError("float scalar times exact series")
            return self.scale(other)
        self._check(other)
        return self._like(_mul_terms(self._terms, other._terms, self.cap))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.reciprocal()
        return self.scale(coerce(1, self.mode) / coerce(other, self.mode))

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            return NotImplemented
        result = TruncatedSeries.constant(1, self.nvars, self.cap, self.mode)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def reciprocal(self) -> "TruncatedSeries":
        """Inverse of a unit (nonzero constant term) at the cap."""
        c0 = self.constant_term()
        if not c0:
            raise ZeroDivisionError("series without constant term is not invertible")
        inv0 = coerce(1, self.mode) / c0
        # u = c0 (1 + w) with w in m; 1/u = inv0 * sum (-w)^j
        w = (self.scale(inv0) - 1)
        result = TruncatedSeries.constant(1, self.nvars, self.cap, self.mode)
        power = result
        for _ in range(self.cap):
            power = power * (-w)
            if power.is_zero():
                break
            result = result + power
        return result.scale(inv0)

    # calculus -----------------------------------------------------------

    def diff(self, j: int) -> "TruncatedSeries":
        """Partial derivative with respect to variable ``j`` (0-based)."""
        if not 0 <= j < self.nvars:
            raise IndexError(f"variable index {j} out of range for nvars={self.nvars}")
        terms = {}
        for k, c in self._terms.items():
            e = k[j]
            if e:
                kk = k[:j] + (e - 1,) + k[j + 1:]
                terms[kk] = c * e
        return self._like(terms)

    def gradient(self) -> list["TruncatedSeries"]:
        return [self.diff(j) for j in range(self.nvars)]

    def compose(self, maps: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        """Substitute ``maps[i]`` for variable ``i``.

        Every map component must have zero constant term and share cap and mode
        with ``self``; the result lives in the maps' variables.
        """
        if len(maps) != self.nvars:
            raise DimensionError(f"need {self.nvars} substitution components, got {len(maps)}")
        if self.nvars == 0:
            return self
        first = maps[0]
        for m in maps:
            first._check(m)
            if m.cap != self.cap or m.mode != self.mode:
                raise DimensionError("composition operands differ in cap or mode")
            if m.constant_term():
                raise CompositionError("substituted component has a nonzero constant term")
        out_nvars, cap = first.nvars, self.cap
        memo: dict[tuple, dict] = {(0,) * self.nvars: {(0,) * out_nvars: coerce(1, self.mode)}}
        comps = [m._terms for m in maps]

        def mono(k):
            got = memo.get(k)
            if got is None:
                i = next(i for i, e in enumerate(k) if e)
                prev = k[:i] + (k[i] - 1,) + k[i + 1:]
                got = _mul_terms(mono(prev), comps[i], cap)
                memo[k] = got
            return got

        acc: dict = {}
        for k in sorted(self._terms, key=degree_key):
            c = self._terms[k]
            for kk, v in mono(k).items():
                s = acc.get(kk)
                s = v * c if s is None else s + v * c
                if s:
                    acc[kk] = s
                else:
                    acc.pop(kk, None)
        return TruncatedSeries._raw(out_nvars, cap, self.mode, acc)

    def evaluate(self, point: Sequence) -> complex:
        """Numerical value of the (polynomial) jet at ``point``."""
        if len(point) != self.nvars:
            raise DimensionError("point has wrong dimension")
        pt = [complex(p) for p in point]
        total = 0j
        for k, c in self._terms.items():
            v = complex(c)
            for p, e in zip(pt, k):
                if e:
                    v *= p ** e
            total += v
        return total

    def evaluate_exact(self, point: Sequence):
        """Exact value at a point with Gaussian-rational coordinates."""
        if self.mode != EXACT:
            raise ModeError("exact evaluation of a float series")
        pt = [GaussianRational.coerce(p) for p in point]
        total = GaussianRational(0)
        for k, c in self._terms.items():
            v = c
            for p, e in zip(pt, k):
                if e:
                    v = v * p ** e
            total = total + v
        return total

    # comparisons for float mode ------------------------------------------

    def max_abs(self) -> float:
        return max((abs(complex(c)) for c in self._terms.values()), default=0.0)

    def allclose(self, other: "TruncatedSeries", atol: float = 1e-10) -> bool:
        if self.nvars != other.nvars or self.cap != other.cap:
            raise DimensionError("shape mismatch")
        keys = set(self._terms) | set(other._terms)
        a, b = self._terms, other._terms
        return all(abs(complex(a.get(k, 0)) - complex(b.get(k, 0))) <= atol for k in keys)

    def chop(self, atol: float) -> "TruncatedSeries":
        """Float mode: drop coefficients with modulus below ``atol``."""
        return self._like({k: c for k, c in self._terms.items() if abs(complex(c)) > atol})

    # serialization ------------------------------------------------------

    def to_json(self) -> dict:
        terms = []
        for k, c in self.items():
            re, im = to_json_parts(c, self.mode)
            terms.append({"k": list(k), "re": re, "im": im})
        return {"nvars": self.nvars, "cap": self.cap, "mode": self.mode, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping, mode: str | None = None) -> "TruncatedSeries":
        nvars, cap = int(data["nvars"]), int(data["cap"])
        terms = data.get("terms", [])
        if mode is None:
            mode = data.get("mode")
        if mode is None:
            numeric = any(isinstance(t.get("re"), float) or isinstance(t.get("im"), float) for t in terms)
            mode = FLOAT if numeric else EXACT
        out = {}
        for t in terms:
            k = tuple(int(e) for e in t["k"])
            c = from_json_parts(t.get("re", 0), t.get("im", 0), mode)
            if k in out:
                out[k] = out[k] + c
            else:
                out[k] = c
        return cls(nvars, cap, out, mode)

    # display ------------------------------------------------------------

    def __repr__(self):
        return f"TruncatedSeries(nvars={self.nvars}, cap={self.cap}, mode={self.mode!r}, {self})"

    def __str__(self):
        return format_series(self)


def _mul_terms(a: dict, b: dict, cap: int) -> dict:
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    bl = sorted(((sum(k), k, c) for k, c in b.items()), key=lambda t: t[0])
    out: dict = {}
    get = out.get
    for ka, ca in a.items():
        room = cap - sum(ka)
        if room < 0:
            continue
        for db, kb, cb in bl:
            if db > room:
                break
            k = tuple(map(add, ka, kb))
            v = ca * cb
            s = get(k)
            out[k] = v if s is None else s + v
    return {k: c for k, c in out.items() if c}


def format_series(f: TruncatedSeries, names: Sequence[str] | None = None) -> str:
    if f.is_zero():
        return "0"
    if names is None:
        names = [f"x{i + 1}" for i in range(f.nvars)]
    parts = []
    for k, c in f.items():
        mono = "*".join(
            (names[i] if e == 1 else f"{names[i]}^{e}") for i, e in enumerate(k) if e
        )
        cs = str(c) if f.mode == EXACT else repr(complex(c))
        if not mono:
            parts.append(cs)
        elif cs == "1":
            parts.append(mono)
        elif cs == "-1":
            parts.append("-" + mono)
        else:
            parts.append(f"{cs}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")


def series_arith(a: TruncatedSeries, b: TruncatedSeries, op: str) -> TruncatedSeries:
    """Dispatch ``add``/``sub``/``mul`` on two series of identical shape."""
    a._check(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def partial_derivative(f: TruncatedSeries, j: int) -> TruncatedSeries:
    return f.diff(j)


def series_compose(f: TruncatedSeries, maps: Sequence[TruncatedSeries]) -> TruncatedSeries:
    return f.compose(maps)


def sum_series(items: Iterable[TruncatedSeries], like: TruncatedSeries) -> TruncatedSeries:
    return reduce(lambda x, y: x + y, items, TruncatedSeries.zero(like.nvars, like.cap, like.mode))


# exterior forms ------------------------------------------------------------


class ExteriorForm:
    """q-form ``sum_I c_I dx_I`` over strictly increasing index tuples ``I``."""

    def __init__(self, degree: int, nvars: int, cap: int, mode: str, coeffs: Mapping | None = None):
        self.degree = degree
        self.nvars = nvars
        self.cap = cap
        self.mode = mode
        clean = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != degree or any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError(f"index tuple {idx} is not strictly increasing of length {degree}")
            if any(not 0 <= i < nvars for i in idx):
                raise IndexError(f"index tuple {idx} out of range")
            if not isinstance(c, TruncatedSeries) or (c.nvars, c.cap, c.mode) != (nvars, cap, mode):
                raise DimensionError("form coefficient has the wrong shape")
            if not c.is_zero():
                clean[idx] = c
        self._coeffs = clean

    @property
    def coeffs(self) -> Mapping[tuple, TruncatedSeries]:
        return MappingProxyType(self._coeffs)

    def coefficient(self, idx: Sequence[int]) -> TruncatedSeries:
        return self._coeffs.get(tuple(idx), TruncatedSeries.zero(self.nvars, self.cap, self.mode))

    def is_zero(self) -> bool:
        return not self._coeffs

    def items(self):
        return sorted(self._coeffs.items())

    def __eq__(self, other):
        if not isinstance(other, ExteriorForm):
            return NotImplemented
        return (self.degree, self.nvars, self.cap, self.mode) == (
            other.degree, other.nvars, other.cap, other.mode
        ) and self._coeffs == other._coeffs

    def __neg__(self):
        return ExteriorForm(self.degree, self.nvars, self.cap, self.mode, {i: -c for i, c in self._coeffs.items()})

    def lowest_witness(self):
        """``(index tuple, lowest-degree homogeneous part)`` of the lowest-order coefficient.

        Ties in order are broken by index tuple.  ``None`` for the zero form.
        """
        best = None
        for idx, c in self._coeffs.items():
            key = (c.order(), idx)
            if best is None or key < best[0]:
                best = (key, idx, c.homogeneous(c.order()))
        if best is None:
            return None
        return best[1], best[2]

    def evaluate(self, point) -> dict:
        return {idx: c.evaluate(point) for idx, c in self._coeffs.items()}

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "nvars": self.nvars,
            "coeffs": [{"indices": list(idx), "series": c.to_json()} for idx, c in self.items()],
        }

    def __repr__(self):
        body = " + ".join(f"({c}) d{'^d'.join(f'x{i + 1}' for i in idx)}" for idx, c in self.items())
        return f"ExteriorForm(degree={self.degree}, {body or '0'})"


def _perm_sign(perm: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def wedge(functions: Sequence[TruncatedSeries]) -> ExteriorForm:
    """``df_1 ^ ... ^ df_q`` with coefficients given by q x q minors of the Jacobian."""
    q = len(functions)
    if q == 0:
        raise ValueError("need at least one function")
    f0 = functions[0]
    for f in functions[1:]:
        f0._check(f)
    n = f0.nvars
    if q > n:
        raise DimensionError(f"cannot wedge {q} differentials in {n} variables")
    jac = [f.gradient() for f in functions]
    perms = [(p, _perm_sign(p)) for p in itertools.permutations(range(q))]
    coeffs = {}
    for idx in itertools.combinations(range(n), q):
        total = TruncatedSeries.zero(n, f0.cap, f0.mode)
        for p, sign in perms:
            term = jac[0][idx[p[0]]]
            for a in range(1, q):
                if term.is_zero():
                    break
                term = term * jac[a][idx[p[a]]]
            if term.is_zero():
                continue
            total = total + term if sign > 0 else total - term
        coeffs[idx] = total
    return ExteriorForm(q, n, f0.cap, f0.mode, coeffs)
