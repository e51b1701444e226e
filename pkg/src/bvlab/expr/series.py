"""Truncated formal power series in hbar with polynomial coefficients."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping

from .coefficients import as_coefficient
from .polynomial import Polynomial, poly_sum

__all__ = ["DEFAULT_HBAR_ORDER", "HbarSeries", "NegativeHbarDetected"]

DEFAULT_HBAR_ORDER = 6


class NegativeHbarDetected(ArithmeticError):
    """A product that must be a power series carried a negative hbar power."""


class HbarSeries:
    """``sum_k hbar^k * coefficients[k]``, truncated above ``order``.

    ``order=None`` means no truncation.  Negative powers are representable
    so that intermediate quantities such as ``(i/hbar)^n`` products can be
    formed; :meth:`check_nonnegative` guards results that must not have them.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Mapping[int, Polynomial] | None = None, order: int | None = DEFAULT_HBAR_ORDER):
        self.order = order
        self.coeffs: dict[int, Polynomial] = {}
        if coeffs:
            for k, p in coeffs.items():
                if order is not None and k > order:
                    continue
                p = Polynomial.coerce(p)
                if p:
                    self.coeffs[k] = p

    # constructors ------------------------------------------------------
    @classmethod
    def classical(cls, p, order: int | None = DEFAULT_HBAR_ORDER) -> "HbarSeries":
        return cls({0: Polynomial.coerce(p)}, order)

    @classmethod
    def monomial(cls, p, power: int, order: int | None = DEFAULT_HBAR_ORDER) -> "HbarSeries":
        return cls({power: Polynomial.coerce(p)}, order)

    # queries -----------------------------------------------------------
    def __getitem__(self, k: int) -> Polynomial:
        return self.coeffs.get(k, Polynomial())

    def coefficient(self, k: int) -> Polynomial:
        return self[k]

    @property
    def coefficients(self) -> list[Polynomial]:
        """Dense list for powers ``0..order`` (or up to the top power)."""
        top = self.order if self.order is not None else max(self.coeffs, default=0)
        return [self[k] for k in range(0, top + 1)]

    def powers(self) -> list[int]:
        return sorted(self.coeffs)

    def min_power(self) -> int | None:
        return min(self.coeffs, default=None)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def is_classical(self) -> bool:
        return all(k == 0 for k in self.coeffs)

    def classical_part(self) -> Polynomial:
        return self[0]

    def check_nonnegative(self, what: str = "series") -> "HbarSeries":
        low = self.min_power()
        if low is not None and low < 0:
            raise NegativeHbarDetected(f"{what} has a term of order hbar^{low}: {self[low]}")
        return self

    def grading(self):
        return poly_sum(self.coeffs.values()).grading()

    # arithmetic --------------------------------------------------------
    def _order_with(self, other: "HbarSeries") -> int | None:
        if self.order is None:
            return other.order
        if other.order is None:
            return self.order
        return min(self.order, other.order)

    def _coerce(self, other) -> "HbarSeries":
        if isinstance(other, HbarSeries):
            return other
        return HbarSeries.classical(Polynomial.coerce(other), self.order)

    def __add__(self, other) -> "HbarSeries":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        keys = set(self.coeffs) | set(other.coeffs)
        return HbarSeries({k: self[k] + other[k] for k in keys}, self._order_with(other))

    __radd__ = __add__

    def __neg__(self) -> "HbarSeries":
        return HbarSeries({k: -p for k, p in self.coeffs.items()}, self.order)

    def __sub__(self, other) -> "HbarSeries":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "HbarSeries":
        return self._coerce(other) - self

    def scale(self, factor) -> "HbarSeries":
        c = as_coefficient(factor)
        return HbarSeries({k: p.scale(c) for k, p in self.coeffs.items()}, self.order)

    def shift(self, n: int) -> "HbarSeries":
        """Multiply by ``hbar^n`` (``n`` may be negative)."""
        return HbarSeries({k + n: p for k, p in self.coeffs.items()}, self.order)

    def __mul__(self, other) -> "HbarSeries":
        if isinstance(other, (HbarSeries, Polynomial)):
            other = self._coerce(other)
            order = self._order_with(other)
            buckets: dict[int, list[Polynomial]] = {}
            for i, p in self.coeffs.items():
                for j, q in other.coeffs.items():
                    if order is not None and i + j > order:
                        continue
                    buckets.setdefault(i + j, []).append(p * q)
            return HbarSeries({k: poly_sum(v) for k, v in buckets.items()}, order)
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __rmul__(self, other) -> "HbarSeries":
        if isinstance(other, Polynomial):
            return self._coerce(other) * self
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def map(self, fn: Callable[[Polynomial], Polynomial]) -> "HbarSeries":
        """Apply an hbar-independent linear map to every coefficient."""
        return HbarSeries({k: fn(p) for k, p in self.coeffs.items()}, self.order)

    def truncate(self, order: int | None) -> "HbarSeries":
        return HbarSeries(self.coeffs, order)

    def with_order(self, order: int | None) -> "HbarSeries":
        return self.truncate(order)

    # equality ----------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, HbarSeries):
            try:
                other = self._coerce(other)
            except TypeError:
                return NotImplemented
        order = self._order_with(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(self[k] == other[k] for k in keys if order is None or k <= order)

    def __ne__(self, other) -> bool:
        res = self.__eq__(other)
        return res if res is NotImplemented else not res

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        if not self.coeffs:
            return "HbarSeries(0)"
        body = " + ".join(f"hbar^{k}*({self.coeffs[k]})" for k in sorted(self.coeffs))
        return f"HbarSeries({body}; order={self.order})"


def series_sum(items: Iterable[HbarSeries], order: int | None = DEFAULT_HBAR_ORDER) -> HbarSeries:
    buckets: dict[int, list[Polynomial]] = {}
    for s in items:
        for k, p in s.coeffs.items():
            buckets.setdefault(k, []).append(p)
    return HbarSeries({k: poly_sum(v) for k, v in buckets.items()}, order)
