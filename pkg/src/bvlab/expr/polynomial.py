"""Sparse polynomials in a Grassmann-graded commutative algebra.

A monomial is a non-decreasing tuple of variable ids.  Even variables may
repeat; an odd variable appears at most once.  The canonical order is the
order of declaration, and every term is stored with the sign obtained by
bringing its factors into that order.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from typing import Union

from gmpy2 import mpq

from .coefficients import Coefficient, GaussianRational, as_coefficient, coefficient_to_str
from .variables import GradedVariable, registry

__all__ = [
    "MIXED",
    "Mixed",
    "MixedGrading",
    "Monomial",
    "Polynomial",
    "canonical_monomial",
    "deriv_left",
    "deriv_right",
    "grading",
    "monomial_factors",
    "mul",
    "poly_sum",
    "substitute",
]

Monomial = tuple  # tuple[int, ...], sorted var ids

_ONE = mpq(1)
_PARITY = registry.parity


class Mixed:
    """Marker for polynomials whose terms disagree on some grading."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Mixed"


MIXED = Mixed()


class MixedGrading(ValueError):
    """An operation that needs a homogeneous input received a mixed one."""


# ---------------------------------------------------------------------------
# monomial level


_MUL_CACHE: dict = {}
_MUL_CACHE_LIMIT = 1 << 20


def _mono_mul(a: tuple, b: tuple):
    """Product of canonical monomials: ``(monomial, sign)`` or ``None``."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    key = (a, b)
    hit = _MUL_CACHE.get(key)
    if hit is not None:
        return hit if hit != 0 else None
    result = _mono_mul_raw(a, b)
    if len(_MUL_CACHE) > _MUL_CACHE_LIMIT:
        _MUL_CACHE.clear()
    _MUL_CACHE[key] = result if result is not None else 0
    return result


def _mono_mul_raw(a: tuple, b: tuple):
    odd = _PARITY
    last = a[-1]
    first = b[0]
    if last < first or (last == first and not odd[last]):
        return a + b, 1
    odd_left = 0
    for x in a:
        odd_left += odd[x]
    out = []
    sign = 0
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x = a[i]
        y = b[j]
        if x < y:
            out.append(x)
            odd_left -= odd[x]
            i += 1
        elif y < x:
            out.append(y)
            if odd[y]:
                sign ^= odd_left & 1
            j += 1
        else:
            if odd[x]:
                return None
            out.append(x)
            i += 1
    if i < la:
        out.extend(a[i:])
    elif j < lb:
        out.extend(b[j:])
    return tuple(out), (-1 if sign else 1)


def canonical_monomial(seq: Iterable) -> tuple[tuple, int] | None:
    """Sort an ordered product of variables (ids or :class:`GradedVariable`).

    Returns ``(monomial, sign)`` or ``None`` when an odd variable repeats.
    The sign counts transpositions of odd factors in a stable sort.
    """
    ids = [v.order_key if isinstance(v, GradedVariable) else int(v) for v in seq]
    odd = _PARITY
    sign = 0
    # insertion sort keeps the sign bookkeeping obvious; monomials are short
    for k in range(1, len(ids)):
        x = ids[k]
        m = k - 1
        while m >= 0 and ids[m] > x:
            if odd[x] and odd[ids[m]]:
                sign ^= 1
            ids[m + 1] = ids[m]
            m -= 1
        ids[m + 1] = x
    for k in range(1, len(ids)):
        if ids[k] == ids[k - 1] and odd[ids[k]]:
            return None
    return tuple(ids), (-1 if sign else 1)


def monomial_factors(mono: tuple) -> list[tuple[GradedVariable, int]]:
    """``[(variable, exponent), ...]`` in canonical order."""
    out: list[tuple[GradedVariable, int]] = []
    for vid in mono:
        if out and out[-1][0].order_key == vid:
            out[-1] = (out[-1][0], out[-1][1] + 1)
        else:
            out.append((registry.by_id[vid], 1))
    return out


def _mono_grading(mono: tuple) -> tuple[int, int, int]:
    p = g = a = 0
    parity, ghost, af = registry.parity, registry.ghost, registry.antifield
    for v in mono:
        p += parity[v]
        g += ghost[v]
        a += af[v]
    return (p & 1, g, a)


def _mono_parity(mono: tuple) -> int:
    odd = _PARITY
    p = 0
    for v in mono:
        p += odd[v]
    return p & 1


# ---------------------------------------------------------------------------
# polynomial


def _vid(v) -> int:
    return v.order_key if isinstance(v, GradedVariable) else int(v)


class Polynomial:
    """Immutable sparse polynomial ``{monomial: coefficient}``."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping | None = None, *, _trusted: bool = False) -> None:
        if terms is None:
            self.terms: dict = {}
        elif _trusted:
            self.terms = terms  # type: ignore[assignment]
        else:
            self.terms = {m: as_coefficient(c) for m, c in terms.items() if c}
        self._hash = None

    # constructors ------------------------------------------------------
    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial()

    @staticmethod
    def one() -> "Polynomial":
        return Polynomial({(): _ONE}, _trusted=True)

    @staticmethod
    def constant(value) -> "Polynomial":
        c = as_coefficient(value)
        return Polynomial({(): c} if c else {}, _trusted=True)

    @staticmethod
    def var(v, coefficient=1) -> "Polynomial":
        c = as_coefficient(coefficient)
        return Polynomial({(_vid(v),): c} if c else {}, _trusted=True)

    @staticmethod
    def product(vars_: Iterable, coefficient=1) -> "Polynomial":
        """Ordered product of variables, canonicalised with its sign."""
        res = canonical_monomial(vars_)
        c = as_coefficient(coefficient)
        if res is None or not c:
            return Polynomial()
        mono, sign = res
        return Polynomial({mono: c if sign > 0 else -c}, _trusted=True)

    @staticmethod
    def coerce(value) -> "Polynomial":
        if isinstance(value, Polynomial):
            return value
        if isinstance(value, GradedVariable):
            return Polynomial.var(value)
        return Polynomial.constant(value)

    # basic queries -----------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self) -> int:
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def sorted_items(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def constant_term(self) -> Coefficient:
        return self.terms.get((), mpq(0))

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def variables(self) -> set[int]:
        out: set[int] = set()
        for m in self.terms:
            out.update(m)
        return out

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=-1)

    def degree_in(self, ids: Iterable) -> int:
        s = {_vid(v) for v in ids}
        return max((sum(1 for x in m if x in s) for m in self.terms), default=-1)

    # arithmetic --------------------------------------------------------
    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            try:
                other = Polynomial.coerce(other)
            except TypeError:
                return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        if len(other.terms) > len(self.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        for m, c in small.items():
            prev = out.get(m)
            if prev is None:
                out[m] = c
            else:
                s = prev + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Polynomial(out, _trusted=True)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            try:
                other = Polynomial.coerce(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return Polynomial.coerce(other) - self

    def scale(self, factor) -> "Polynomial":
        c = as_coefficient(factor)
        if not c:
            return Polynomial()
        if c == 1:
            return self
        out = {}
        for m, v in self.terms.items():
            p = v * c
            if p:
                out[m] = p
        return Polynomial(out, _trusted=True)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return mul(self, other)
        if isinstance(other, GradedVariable):
            return mul(self, Polynomial.var(other))
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __rmul__(self, other) -> "Polynomial":
        if isinstance(other, GradedVariable):
            return mul(Polynomial.var(other), self)
        try:
            # scalars are even and central
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __truediv__(self, other) -> "Polynomial":
        c = as_coefficient(other)
        return self.scale(1 / c)

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = Polynomial.one()
        base = self
        while n:
            if n & 1:
                result = mul(result, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return result

    # equality ----------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.terms == other.terms
        try:
            other = Polynomial.coerce(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __ne__(self, other) -> bool:
        res = self.__eq__(other)
        return res if res is NotImplemented else not res

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # gradings ----------------------------------------------------------
    def grading(self):
        """Common ``(parity, ghost, antifield)`` of all terms, or ``MIXED``.

        The zero polynomial has every grading; ``(0, 0, 0)`` is returned."""
        common = None
        for m in self.terms:
            g = _mono_grading(m)
            if common is None:
                common = g
            elif g != common:
                return MIXED
        return common if common is not None else (0, 0, 0)

    def parity(self) -> int:
        p = None
        for m in self.terms:
            q = _mono_parity(m)
            if p is None:
                p = q
            elif p != q:
                raise MixedGrading("polynomial has terms of both parities")
        return p or 0

    def homogeneous_grading(self) -> tuple[int, int, int]:
        g = self.grading()
        if g is MIXED:
            raise MixedGrading(f"mixed grading: {self}")
        return g

    def split_parity(self) -> tuple["Polynomial", "Polynomial"]:
        even, odd = {}, {}
        for m, c in self.terms.items():
            (odd if _mono_parity(m) else even)[m] = c
        return Polynomial(even, _trusted=True), Polynomial(odd, _trusted=True)

    # term filters -------------------------------------------------------
    def filter(self, keep: Callable[[tuple], bool]) -> "Polynomial":
        return Polynomial({m: c for m, c in self.terms.items() if keep(m)}, _trusted=True)

    def part_of_degree(self, ids: Iterable, degree: int) -> "Polynomial":
        s = {_vid(v) for v in ids}
        return self.filter(lambda m: sum(1 for x in m if x in s) == degree)

    def truncate_in(self, ids: Iterable, max_degree: int) -> "Polynomial":
        """Drop terms of total degree > ``max_degree`` in the given variables
        (used for coupling-order truncation)."""
        s = {_vid(v) for v in ids}
        return self.filter(lambda m: sum(1 for x in m if x in s) <= max_degree)

    def map_coefficients(self, fn: Callable) -> "Polynomial":
        out = {}
        for m, c in self.terms.items():
            v = fn(c)
            if v:
                out[m] = v
        return Polynomial(out, _trusted=True)

    # calculus -----------------------------------------------------------
    def deriv_left(self, v) -> "Polynomial":
        return deriv_left(self, v)

    def deriv_right(self, v) -> "Polynomial":
        return deriv_right(self, v)

    def substitute(self, mapping: Mapping) -> "Polynomial":
        return substitute(self, mapping)

    # printing -----------------------------------------------------------
    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts: list[str] = []
        for mono, c in self.sorted_items():
            body = _mono_text(mono)
            if isinstance(c, GaussianRational):
                negative = c.re == 0 and c.im < 0
                cs = coefficient_to_str(-c if negative else c)
            else:
                negative = c < 0
                cs = coefficient_to_str(-c if negative else c)
            if body and cs == "1":
                term = body
            elif body:
                term = f"{cs}*{body}"
            else:
                term = cs
            if not parts:
                parts.append(("-" + term) if negative else term)
            else:
                parts.append((" - " if negative else " + ") + term)
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"Polynomial({self.to_text()})"


def _mono_text(mono: tuple) -> str:
    pieces = []
    for var, e in monomial_factors(mono):
        pieces.append(var.text if e == 1 else f"{var.text}^{e}")
    return "*".join(pieces)


def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    """Graded-commutative product with Koszul signs."""
    if not p.terms or not q.terms:
        return Polynomial()
    out: dict = {}
    mm = _mono_mul
    get = out.get
    for ma, ca in p.terms.items():
        for mb, cb in q.terms.items():
            r = mm(ma, mb)
            if r is None:
                continue
            mono, sign = r
            c = ca * cb
            if sign < 0:
                c = -c
            prev = get(mono)
            if prev is None:
                out[mono] = c
            else:
                s = prev + c
                if s:
                    out[mono] = s
                else:
                    del out[mono]
    return Polynomial(out, _trusted=True)


def _derivative(p: Polynomial, v, right: bool) -> Polynomial:
    vid = _vid(v)
    odd = _PARITY
    v_odd = odd[vid]
    out: dict = {}
    for mono, c in p.terms.items():
        try:
            pos = mono.index(vid)
        except ValueError:
            continue
        if v_odd:
            if right:
                n_odd = sum(odd[x] for x in mono[pos + 1 :])
            else:
                n_odd = sum(odd[x] for x in mono[:pos])
            coeff = -c if n_odd & 1 else c
        else:
            mult = 1
            k = pos + 1
            while k < len(mono) and mono[k] == vid:
                mult += 1
                k += 1
            coeff = c * mult
        rest = mono[:pos] + mono[pos + 1 :]
        prev = out.get(rest)
        if prev is None:
            out[rest] = coeff
        else:
            s = prev + coeff
            if s:
                out[rest] = s
            else:
                del out[rest]
    return Polynomial(out, _trusted=True)


def deriv_left(p: Polynomial, v) -> Polynomial:
    """Left derivative: move ``v`` to the front, then strip it."""
    return _derivative(p, v, right=False)


def deriv_right(p: Polynomial, v) -> Polynomial:
    """Right derivative: move ``v`` to the back, then strip it."""
    return _derivative(p, v, right=True)


def grading(p: Polynomial):
    return p.grading()


def substitute(p: Polynomial, mapping: Mapping) -> Polynomial:
    """Replace variables by polynomials, evaluating each ordered monomial.

    Keys may be ids or variables.  Unmapped variables are kept."""
    table = {_vid(k): Polynomial.coerce(v) for k, v in mapping.items()}
    if not table:
        return p
    cache: dict = {}
    pieces: list[Polynomial] = []
    for mono, c in p.terms.items():
        if not any(x in table for x in mono):
            pieces.append(Polynomial({mono: c}, _trusted=True))
            continue
        term = cache.get(mono)
        if term is None:
            term = Polynomial.one()
            untouched: list[int] = []
            for x in mono:
                img = table.get(x)
                if img is None:
                    untouched.append(x)
                    continue
                if untouched:
                    term = mul(term, Polynomial({tuple(untouched): _ONE}, _trusted=True))
                    untouched = []
                term = mul(term, img)
                if not term:
                    break
            if untouched and term:
                term = mul(term, Polynomial({tuple(untouched): _ONE}, _trusted=True))
            cache[mono] = term
        pieces.append(term.scale(c))
    return poly_sum(pieces)


def poly_sum(polys: Iterable[Polynomial]) -> Polynomial:
    """Sum many polynomials with a single accumulator."""
    out: dict = {}
    get = out.get
    for q in polys:
        for m, c in q.terms.items():
            prev = get(m)
            if prev is None:
                out[m] = c
            else:
                s = prev + c
                if s:
                    out[m] = s
                else:
                    del out[m]
    return Polynomial(out, _trusted=True)


PolyLike = Union[Polynomial, GradedVariable, int]
