"""Complex scalars in two modes: exact Gaussian rationals and IEEE floats.

Exact values are :class:`GaussianRational` (a pair of ``gmpy2.mpq``); float
values are plain Python ``complex``.  Series carry the mode as a flag and
refuse to mix, so the scalar layer only needs coercion helpers.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)


class ModeError(TypeError):
    """Raised when exact and floating values are combined."""


def _q(x) -> mpq:
    if isinstance(x, float):
        raise ModeError(f"float {x!r} cannot enter exact arithmetic")
    if isinstance(x, str):
        return mpq(x.strip())
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


class GaussianRational:
    """Element of Q(i), stored as ``re + i*im`` with ``mpq`` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_ZERO_Q) else _q(re)
        self.im = im if type(im) is type(_ZERO_Q) else _q(im)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            raise ModeError(f"complex float {x!r} cannot enter exact arithmetic")
        if isinstance(x, (int, Rational, str)) or type(x) is type(_ZERO_Q):
            return cls(x, 0)
        raise ModeError(f"cannot coerce {type(x).__name__} to an exact scalar")

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Rational)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __add__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational(a * c, _ZERO_Q)
        return GaussianRational(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        c, d = other.re, other.im
        if not d:
            if not c:
                raise ZeroDivisionError("division by exact zero")
            return GaussianRational(self.re / c, self.im / c)
        den = c * c + d * d
        a, b = self.re, self.im
        return GaussianRational((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return (GaussianRational(1) / self) ** (-e)
        out, base = GaussianRational(1), self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __abs__(self):
        return abs(complex(self))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return f"GaussianRational({self.re})"
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*I"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}*I)"


_ZERO_Q = mpq(0)


def _lift(x):
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Rational)) or type(x) is type(_ZERO_Q):
        return GaussianRational(x, 0)
    if isinstance(x, (float, complex)):
        raise ModeError("exact and float scalars cannot be mixed")
    return NotImplemented


ZERO = GaussianRational(0)
ONE = GaussianRational(1)


def coerce(x, mode: str):
    """Convert ``x`` to the scalar type of ``mode``.

    Exact coercion accepts ints, fractions and ``"p/q"`` strings; float values
    are rejected rather than rationalised.  Float coercion accepts anything
    ``complex()`` understands, including exact scalars.
    """
    if mode == EXACT:
        return GaussianRational.coerce(x)
    if mode == FLOAT:
        if isinstance(x, GaussianRational):
            return complex(x)
        if isinstance(x, str):
            return complex(float(Fraction(x)))
        return complex(x)
    raise ValueError(f"unknown scalar mode {mode!r}")


def zero(mode: str):
    return ZERO if mode == EXACT else 0j


def one(mode: str):
    return ONE if mode == EXACT else 1 + 0j


def mode_of(x) -> str:
    if isinstance(x, GaussianRational):
        return EXACT
    if isinstance(x, (float, complex)):
        return FLOAT
    if isinstance(x, (int, Rational)):
        return EXACT
    raise ModeError(f"no scalar mode for {type(x).__name__}")


def to_json_parts(x, mode: str):
    """(re, im) for JSON: ``"p/q"`` strings in exact mode, numbers otherwise."""
    if mode == EXACT:
        return str(x.re), str(x.im)
    return float(x.real), float(x.imag)


def from_json_parts(re, im, mode: str):
    if mode == EXACT:
        if isinstance(re, float) or isinstance(im, float):
            raise ModeError("exact series terms must be integers or 'p/q' strings")
        return GaussianRational(_q(re), _q(im))
    return complex(float(Fraction(re)) if isinstance(re, str) else float(re),
                   float(Fraction(im)) if isinstance(im, str) else float(im))
