"""Exact coefficients: rationals, extended to Gaussian rationals where needed.

Rationals are ``gmpy2.mpq``.  A value with nonzero imaginary part is a
:class:`GaussianRational`; arithmetic collapses back to ``mpq`` whenever the
imaginary part cancels, so purely real computations never pay for the
complex wrapper.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

from gmpy2 import mpq

__all__ = [
    "Coefficient",
    "GaussianRational",
    "I",
    "as_coefficient",
    "coefficient_to_str",
    "conjugate",
    "is_real",
    "real_imag",
]

_ZERO = mpq(0)


class GaussianRational:
    """``re + im*i`` with rational parts and ``im != 0``.

    Do not construct directly; use :func:`gaussian` which normalises a zero
    imaginary part back to a plain rational.
    """

    __slots__ = ("re", "im")

    def __init__(self, re: mpq, im: mpq) -> None:
        self.re = re
        self.im = im

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, GaussianRational):
            return gaussian(self.re + other.re, self.im + other.im)
        other = _rational(other)
        if other is None:
            return NotImplemented
        return GaussianRational(self.re + other, self.im)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GaussianRational):
            return gaussian(self.re - other.re, self.im - other.im)
        other = _rational(other)
        if other is None:
            return NotImplemented
        return GaussianRational(self.re - other, self.im)

    def __rsub__(self, other):
        other = _rational(other)
        if other is None:
            return NotImplemented
        return GaussianRational(other - self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, GaussianRational):
            return gaussian(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        other = _rational(other)
        if other is None:
            return NotImplemented
        if other == 0:
            return _ZERO
        return GaussianRational(self.re * other, self.im * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GaussianRational):
            norm = other.re * other.re + other.im * other.im
            return gaussian(
                (self.re * other.re + self.im * other.im) / norm,
                (self.im * other.re - self.re * other.im) / norm,
            )
        other = _rational(other)
        if other is None:
            return NotImplemented
        return GaussianRational(self.re / other, self.im / other)

    def __rtruediv__(self, other):
        other = _rational(other)
        if other is None:
            return NotImplemented
        norm = self.re * self.re + self.im * self.im
        return gaussian(other * self.re / norm, -other * self.im / norm)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return 1 / (self ** (-exponent))
        result: Coefficient = mpq(1)
        base: Coefficient = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    # comparison -------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        return False

    def __ne__(self, other) -> bool:
        return not self.__eq__(other)

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __bool__(self) -> bool:
        return True

    def __repr__(self) -> str:
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self) -> str:
        return coefficient_to_str(self)


Coefficient = Union[mpq, GaussianRational]

I = GaussianRational(mpq(0), mpq(1))


def _rational(value) -> mpq | None:
    if isinstance(value, (int, Fraction)) or type(value).__name__ == "mpq":
        return mpq(value)
    if type(value).__name__ == "mpz":
        return mpq(value)
    return None


def gaussian(re, im) -> Coefficient:
    """Normalised constructor: returns ``mpq`` when ``im == 0``."""
    if im == 0:
        return mpq(re)
    return GaussianRational(mpq(re), mpq(im))


def as_coefficient(value) -> Coefficient:
    """Convert ints, Fractions, ``'p/q'`` strings or coefficients."""
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, str):
        return mpq(Fraction(value))
    if isinstance(value, complex):
        raise TypeError("floating complex values are not exact coefficients")
    if isinstance(value, float):
        raise TypeError("floating-point values are not exact coefficients")
    rational = _rational(value)
    if rational is None:
        raise TypeError(f"cannot use {value!r} as an exact coefficient")
    return rational


def is_real(value: Coefficient) -> bool:
    return not isinstance(value, GaussianRational)


def real_imag(value: Coefficient) -> tuple[mpq, mpq]:
    if isinstance(value, GaussianRational):
        return value.re, value.im
    return mpq(value), _ZERO


def conjugate(value: Coefficient) -> Coefficient:
    if isinstance(value, GaussianRational):
        return GaussianRational(value.re, -value.im)
    return value


def _rational_str(value: mpq) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def coefficient_to_str(value: Coefficient) -> str:
    """Render in the expression-language syntax (``I`` is the unit)."""
    re, im = real_imag(value)
    if im == 0:
        return _rational_str(re)
    imag = "I" if im == 1 else ("-I" if im == -1 else f"{_rational_str(im)}*I")
    if re == 0:
        return imag
    if imag.startswith("-"):
        return f"({_rational_str(re)} - {imag[1:]})"
    return f"({_rational_str(re)} + {imag})"
