"""Densities, local functionals, total and variational derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..expr.polynomial import Polynomial, canonical_monomial, deriv_left, deriv_right, poly_sum
from ..expr.variables import GradedVariable, registry
from .jets import JetOverflow, JetSpace, has_jets, shift

__all__ = [
    "Density",
    "LocalFunctional",
    "ZeroReport",
    "base_fields",
    "euler_lagrange",
    "is_zero_functional",
    "total_derivative",
]


@dataclass(frozen=True, eq=False)
class Density:
    poly: Polynomial
    space: JetSpace = field(default_factory=JetSpace)

    def __post_init__(self) -> None:
        object.__setattr__(self, "poly", Polynomial.coerce(self.poly))

    def _wrap(self, poly: Polynomial) -> "Density":
        return Density(poly, self.space)

    def __add__(self, other) -> "Density":
        return self._wrap(self.poly + _poly_of(other))

    def __sub__(self, other) -> "Density":
        return self._wrap(self.poly - _poly_of(other))

    def __neg__(self) -> "Density":
        return self._wrap(-self.poly)

    def __mul__(self, other) -> "Density":
        if isinstance(other, (Density, Polynomial, GradedVariable)):
            return self._wrap(self.poly * _poly_of(other))
        return self._wrap(self.poly.scale(other))

    def __rmul__(self, other) -> "Density":
        if isinstance(other, (Polynomial, GradedVariable)):
            return self._wrap(_poly_of(other) * self.poly)
        return self._wrap(self.poly.scale(other))

    def __eq__(self, other) -> bool:
        return self.poly == _poly_of(other)

    def __hash__(self) -> int:
        return hash(self.poly)

    def grading(self):
        return self.poly.grading()

    def max_jet_order(self) -> int:
        return max((len(registry.by_id[v].derivs) for v in self.poly.variables()), default=0)

    def __str__(self) -> str:
        return str(self.poly)

    def __repr__(self) -> str:
        return f"Density({self.poly})"


def _poly_of(x) -> Polynomial:
    if isinstance(x, (Density, LocalFunctional)):
        return x.poly
    return Polynomial.coerce(x)


@dataclass(frozen=True, eq=False)
class LocalFunctional:
    """``∫ density``; equality is modulo total derivatives (see
    :meth:`equivalent`), so ``==`` compares representatives only."""

    density: Density

    @classmethod
    def of(cls, poly, space: JetSpace | None = None) -> "LocalFunctional":
        return cls(Density(Polynomial.coerce(poly), space or JetSpace()))

    @property
    def poly(self) -> Polynomial:
        return self.density.poly

    @property
    def space(self) -> JetSpace:
        return self.density.space

    def _wrap(self, poly: Polynomial) -> "LocalFunctional":
        return LocalFunctional(Density(poly, self.space))

    def __add__(self, other) -> "LocalFunctional":
        return self._wrap(self.poly + _poly_of(other))

    __radd__ = __add__

    def __sub__(self, other) -> "LocalFunctional":
        return self._wrap(self.poly - _poly_of(other))

    def __neg__(self) -> "LocalFunctional":
        return self._wrap(-self.poly)

    def __mul__(self, scalar) -> "LocalFunctional":
        return self._wrap(self.poly.scale(scalar))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return self.poly == _poly_of(other)

    def __hash__(self) -> int:
        return hash(self.poly)

    def grading(self):
        return self.poly.grading()

    def equivalent(self, other) -> bool:
        return is_zero_functional(self - other).is_zero

    def __str__(self) -> str:
        return f"int({self.poly})"

    def __repr__(self) -> str:
        return f"LocalFunctional({self.poly})"


# ---------------------------------------------------------------------------

_DMONO: dict = {}


def _total_derivative_mono(mono: tuple, mu: int) -> list[tuple[tuple, int]]:
    key = (mono, mu)
    hit = _DMONO.get(key)
    if hit is not None:
        return hit
    out: dict[tuple, int] = {}
    n = len(mono)
    i = 0
    while i < n:
        x = mono[i]
        mult = 1
        while i + mult < n and mono[i + mult] == x:
            mult += 1
        y = shift(x, mu)
        if y is not None:
            res = canonical_monomial(mono[:i] + (y,) + mono[i + 1 :])
            if res is not None:
                m, sign = res
                out[m] = out.get(m, 0) + sign * mult
        i += mult
    result = [(m, c) for m, c in out.items() if c]
    _DMONO[key] = result
    return result


def total_derivative_poly(p: Polynomial, mu: int) -> Polynomial:
    """``D_mu`` on a bare polynomial, with no jet-order check."""
    out: dict = {}
    for mono, c in p.terms.items():
        for m, k in _total_derivative_mono(mono, mu):
            v = c * k
            prev = out.get(m)
            if prev is None:
                out[m] = v
            else:
                s = prev + v
                if s:
                    out[m] = s
                else:
                    del out[m]
    return Polynomial(out, _trusted=True)


def total_derivative(den, mu: int, *, check: bool = True):
    """Chain-rule total derivative ``D_mu``.

    Accepts a :class:`Density` or :class:`LocalFunctional`'s density.  Raises
    :class:`JetOverflow` when a coordinate of top jet order would be
    differentiated again."""
    if isinstance(den, LocalFunctional):
        den = den.density
    if not isinstance(den, Density):
        den = Density(Polynomial.coerce(den))
    if not 0 <= mu < den.space.dim:
        raise ValueError(f"direction {mu} outside 0..{den.space.dim - 1}")
    if check:
        for vid in den.poly.variables():
            v = registry.by_id[vid]
            if has_jets(v) and len(v.derivs) >= den.space.jet_order:
                raise JetOverflow(f"D_{mu} {v.text} exceeds jet order {den.space.jet_order}")
    return Density(total_derivative_poly(den.poly, mu), den.space)


def _root_id(vid: int) -> int:
    v = registry.by_id[vid]
    return v.base.order_key if v.base is not None else vid


def base_fields(p: Polynomial) -> list[GradedVariable]:
    """Undifferentiated local coordinates whose jets occur in ``p``."""
    roots = {_root_id(v) for v in p.variables() if has_jets(registry.by_id[v])}
    return [registry.by_id[r] for r in sorted(roots)]


def euler_lagrange_poly(p: Polynomial, fld: GradedVariable, side: str = "L") -> Polynomial:
    if fld.base is not None:
        raise ValueError("Euler-Lagrange derivatives are taken w.r.t. undifferentiated fields")
    if side not in ("L", "R"):
        raise ValueError("side must be 'L' or 'R'")
    deriv = deriv_left if side == "L" else deriv_right
    fid = fld.order_key
    if not has_jets(fld):
        # constant ghosts and parameters: ordinary graded derivative
        return deriv(p, fld)
    pieces = []
    for vid in sorted(p.variables()):
        if _root_id(vid) != fid:
            continue
        v = registry.by_id[vid]
        q = deriv(p, vid)
        for mu in v.derivs:
            q = total_derivative_poly(q, mu)
        if len(v.derivs) & 1:
            q = -q
        pieces.append(q)
    return poly_sum(pieces)


def euler_lagrange(den, fld: GradedVariable, side: str = "L"):
    """``sum_alpha (-D)^alpha d/d(fld_alpha)`` from the given side."""
    if isinstance(den, LocalFunctional):
        den = den.density
    if not isinstance(den, Density):
        den = Density(Polynomial.coerce(den))
    return Density(euler_lagrange_poly(den.poly, fld, side), den.space)


@dataclass
class ZeroReport:
    is_zero: bool
    residual: dict[str, Polynomial]
    constant: Polynomial

    def __bool__(self) -> bool:
        return self.is_zero


def field_independent_part(p: Polynomial) -> Polynomial:
    by_id = registry.by_id
    return p.filter(lambda m: not any(has_jets(by_id[v]) for v in m))


def is_zero_functional(F) -> ZeroReport:
    """Certificate that ``∫ F`` vanishes: all EL derivatives vanish and the
    field-independent part is zero."""
    p = _poly_of(F)
    residual: dict[str, Polynomial] = {}
    for fld in base_fields(p):
        e = euler_lagrange_poly(p, fld, "L")
        if e:
            residual[fld.text] = e
    const = field_independent_part(p)
    return ZeroReport(not residual and not const, residual, const)

