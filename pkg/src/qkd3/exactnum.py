"""Exact amplitudes of the form p + q*sqrt(3)*i with rational p, q.

Every state used by the qutrit protocols has integer components or
cube-root-of-unity phases, and both live in this ring, so overlaps and
probabilities stay exact rationals until :func:`to_float` is called.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Rational = Fraction

_Scalar = Union[int, Fraction]


@dataclass(frozen=True)
class ExactAmp:
    """``re + im3 * sqrt(3) * i``."""

    re: Fraction = Fraction(0)
    im3: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        # Fraction is already canonical (gcd 1, positive denominator); coerce ints.
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im3", Fraction(self.im3))

    @classmethod
    def coerce(cls, value: "ExactAmp | _Scalar") -> "ExactAmp":
        if isinstance(value, ExactAmp):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(Fraction(value))
        raise TypeError(f"cannot convert {type(value).__name__} to ExactAmp")

    def __add__(self, other: "ExactAmp | _Scalar") -> "ExactAmp":
        o = ExactAmp.coerce(other)
        return ExactAmp(self.re + o.re, self.im3 + o.im3)

    __radd__ = __add__

    def __sub__(self, other: "ExactAmp | _Scalar") -> "ExactAmp":
        o = ExactAmp.coerce(other)
        return ExactAmp(self.re - o.re, self.im3 - o.im3)

    def __rsub__(self, other: _Scalar) -> "ExactAmp":
        return ExactAmp.coerce(other) - self

    def __neg__(self) -> "ExactAmp":
        return ExactAmp(-self.re, -self.im3)

    def __mul__(self, other: "ExactAmp | _Scalar") -> "ExactAmp":
        return amp_mul(self, ExactAmp.coerce(other))

    __rmul__ = __mul__

    def conj(self) -> "ExactAmp":
        return ExactAmp(self.re, -self.im3)

    def norm_sq(self) -> Fraction:
        return amp_norm_sq(self)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im3 == 0

    def __complex__(self) -> complex:
        return complex(to_float(self.re), to_float(self.im3) * 3**0.5)

    def __repr__(self) -> str:
        return f"ExactAmp({self.re}, {self.im3})"


def amp_mul(a: ExactAmp, b: ExactAmp) -> ExactAmp:
    # (p + q s)(r + t s) with s = sqrt(3) i, s^2 = -3
    return ExactAmp(a.re * b.re - 3 * a.im3 * b.im3, a.re * b.im3 + a.im3 * b.re)


def amp_norm_sq(a: ExactAmp) -> Fraction:
    return a.re * a.re + 3 * a.im3 * a.im3


def to_float(r: Fraction) -> float:
    """Convert an exact rational to the nearest double.

    This is the only place where exact values cross into floating point.
    """
    return float(r)


ZERO = ExactAmp(0)
ONE = ExactAmp(1)
#: e^{2 pi i / 3}
OMEGA = ExactAmp(Fraction(-1, 2), Fraction(1, 2))
#: e^{-2 pi i / 3}
OMEGA2 = ExactAmp(Fraction(-1, 2), Fraction(-1, 2))


@dataclass(frozen=True)
class GaussAmp:
    """``re + im * i`` with rational parts.

    The imaginary unit is not in the sqrt(-3) ring, so qubit states with
    phase +-i (the third unbiased qubit basis) use this type instead.
    """

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, value: "GaussAmp | _Scalar") -> "GaussAmp":
        if isinstance(value, GaussAmp):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(Fraction(value))
        raise TypeError(f"cannot convert {type(value).__name__} to GaussAmp")

    def __add__(self, other: "GaussAmp | _Scalar") -> "GaussAmp":
        o = GaussAmp.coerce(other)
        return GaussAmp(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other: "GaussAmp | _Scalar") -> "GaussAmp":
        o = GaussAmp.coerce(other)
        return GaussAmp(self.re - o.re, self.im - o.im)

    def __neg__(self) -> "GaussAmp":
        return GaussAmp(-self.re, -self.im)

    def __mul__(self, other: "GaussAmp | _Scalar") -> "GaussAmp":
        o = GaussAmp.coerce(other)
        return GaussAmp(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self) -> "GaussAmp":
        return GaussAmp(self.re, -self.im)

    def norm_sq(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self) -> complex:
        return complex(to_float(self.re), to_float(self.im))

    def __repr__(self) -> str:
        return f"GaussAmp({self.re}, {self.im})"


Amp = Union[ExactAmp, GaussAmp]

I = GaussAmp(0, 1)


def inner(u: tuple[Amp, ...], v: tuple[Amp, ...]) -> Amp:
    """Hermitian inner product <u, v>, conjugate-linear in ``u``."""
    if len(u) != len(v):
        raise ValueError("dimension mismatch")
    total = u[0].conj() * v[0]
    for a, b in zip(u[1:], v[1:]):
        total = total + a.conj() * b
    return total
