"""Contracting homotopies built on a verified split, their perturbative
corrections, and the order-by-order extension of closed functionals."""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence

from ..expr.polynomial import Polynomial, poly_sum
from ..expr.series import HbarSeries
from .split import BasisSplit

__all__ = [
    "Homotopy",
    "ObstructionNonClosed",
    "PerturbativeHomotopy",
    "build_h0",
    "cohomology_reps",
    "conjugated_layers",
    "extend_observable",
    "perturbative_homotopy",
]

Operator = Callable[[Polynomial], Polynomial]


class ObstructionNonClosed(ArithmeticError):
    """An order-by-order defect is not closed, or not exact, for the base differential."""


class Homotopy:
    """``h0``: the odd derivation ``v_i -> u_i`` divided by ``N_{u,v}``.

    Acts on polynomials in the original coordinates of the split.  On the
    ``N_{u,v} = 0`` subspace it vanishes, so ``D0 h0 + h0 D0 = 1 - pi`` with
    ``pi`` the projection onto that subspace."""

    def __init__(self, split: BasisSplit) -> None:
        self.split = split
        self._memo: dict[Polynomial, Polynomial] = {}

    def __call__(self, p) -> Polynomial:
        p = Polynomial.coerce(p)
        hit = self._memo.get(p)
        if hit is None:
            hit = self.split.h0(p)
            self._memo[p] = hit
        return hit

    def projection(self, p) -> Polynomial:
        return self.split.projection(Polynomial.coerce(p))

    @property
    def differential(self) -> Operator:
        return self.split.differential

    def identity_residual(self, p) -> Polynomial:
        """``(D0 h0 + h0 D0 - 1 + pi) p``; zero for every input."""
        p = Polynomial.coerce(p)
        d = self.differential
        return d(self(p)) + self(d(p)) - p + self.projection(p)


def build_h0(split: BasisSplit) -> Homotopy:
    return Homotopy(split)


class PerturbativeHomotopy:
    """``h^(0) = h0``, ``h^(k) = -h0 sum_{m=1..k} [q^(m) h^(k-m) + h^(k-m) q^(m)]``.

    The corrections ``q^(m)`` are compressed to ``P q^(m) P`` with
    ``P = 1 - pi`` so that everything stays on the subspace where the base
    identity holds."""

    def __init__(
        self,
        h0: Homotopy,
        corrections: Mapping[int, Operator],
        order: int,
        differential: Operator | None = None,
        restrict: bool = True,
    ) -> None:
        self.h0 = h0
        self.order = order
        self.base = differential if differential is not None else h0.differential
        self.restrict = restrict
        self._raw = {m: op for m, op in corrections.items() if 1 <= m <= order}
        self._memo: dict[tuple[int, Polynomial], Polynomial] = {}

    def _positive(self, p: Polynomial) -> Polynomial:
        return p - self.h0.projection(p) if self.restrict else p

    def correction(self, m: int, p: Polynomial) -> Polynomial:
        op = self._raw.get(m)
        if op is None or not p:
            return Polynomial()
        return self._positive(Polynomial.coerce(op(self._positive(p))))

    def differential_at(self, m: int, p: Polynomial) -> Polynomial:
        if m == 0:
            return Polynomial.coerce(self.base(p))
        return self.correction(m, p)

    def component(self, k: int, p) -> Polynomial:
        p = Polynomial.coerce(p)
        if k == 0:
            return self.h0(p)
        key = (k, p)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        pieces = []
        for m in range(1, k + 1):
            if m not in self._raw:
                continue
            pieces.append(self.correction(m, self.component(k - m, p)))
            pieces.append(self.component(k - m, self.correction(m, p)))
        out = -self.h0(poly_sum(pieces))
        self._memo[key] = out
        return out

    def apply(self, x) -> HbarSeries:
        """``h_hbar`` on a series, truncated at the configured order."""
        s = x if isinstance(x, HbarSeries) else HbarSeries.classical(Polynomial.coerce(x), None)
        out: dict[int, list[Polynomial]] = {}
        for j, p in s.coeffs.items():
            for k in range(0, self.order - j + 1):
                val = self.component(k, p)
                if val:
                    out.setdefault(j + k, []).append(val)
        return HbarSeries({k: poly_sum(v) for k, v in out.items()}, self.order)

    def total(self, p, max_order: int | None = None) -> Polynomial:
        """``sum_k h^(k) p`` when the order counts a coupling rather than hbar."""
        top = self.order if max_order is None else max_order
        return poly_sum(self.component(k, p) for k in range(top + 1))

    def condition_residual(self, k: int, p) -> Polynomial:
        """``sum_{m=0..k} (q^(m) h^(k-m) + h^(k-m) q^(m)) p`` for ``k >= 1``;
        at ``k = 0`` the base identity ``q0 h0 + h0 q0 - 1 + pi``."""
        p = Polynomial.coerce(p)
        if k == 0:
            p = self._positive(p)
            return self.base(self.h0(p)) + self.h0(self.base(p)) - p
        p = self._positive(p)
        pieces = []
        for m in range(0, k + 1):
            pieces.append(self.differential_at(m, self.component(k - m, p)))
            pieces.append(self.component(k - m, self.differential_at(m, p)))
        return poly_sum(pieces)


def perturbative_homotopy(
    h0: Homotopy,
    corrections: Mapping[int, Operator] | Sequence[Operator],
    order: int,
    differential: Operator | None = None,
    restrict: bool = True,
) -> PerturbativeHomotopy:
    """Corrections may be a mapping ``{m: q^(m)}`` or a list ``[q^(1), q^(2), ...]``."""
    if not isinstance(corrections, Mapping):
        corrections = {m + 1: op for m, op in enumerate(corrections)}
    return PerturbativeHomotopy(h0, corrections, order, differential, restrict)


def conjugated_layers(differential: Operator, operator: Operator, order: int) -> list[Operator]:
    """Layers of ``q = exp(-hbar M) s exp(hbar M)`` for an even operator ``M``:

        q^(k) = sum_{a+b=k} (-1)^a / (a! b!) M^a s M^b.

    ``q`` squares to zero whenever ``s`` does, so these layers are a
    synthetic but exactly consistent deformation of ``s``."""
    from math import factorial

    from gmpy2 import mpq

    def power(p: Polynomial, k: int) -> Polynomial:
        for _ in range(k):
            if not p:
                break
            p = Polynomial.coerce(operator(p))
        return p

    def layer(k: int) -> Operator:
        def op(p) -> Polynomial:
            p = Polynomial.coerce(p)
            pieces = []
            for a in range(k + 1):
                inner = power(p, k - a)
                if not inner:
                    continue
                val = power(Polynomial.coerce(differential(inner)), a)
                if val:
                    pieces.append(val.scale(mpq((-1) ** a, factorial(a) * factorial(k - a))))
            return poly_sum(pieces)

        return op

    return [layer(k) for k in range(order + 1)]


def extend_observable(f0, layers: Sequence[Operator], homotopy: Operator, order: int) -> HbarSeries:
    """Solve ``q0 F^(k) = -sum_{l=1..k} q^(l) F^(k-l)`` with ``F^(k) = -h(defect)``.

    ``layers[0]`` is the base differential ``q0`` and ``homotopy`` a
    contracting homotopy for it.  Raises :class:`ObstructionNonClosed` when
    the input is not closed, a defect is not ``q0``-closed, or a closed
    defect is not exact."""
    f0 = Polynomial.coerce(f0)
    q0 = layers[0]
    if q0(f0):
        raise ObstructionNonClosed(f"the classical observable is not closed: q0 F0 = {q0(f0)}")
    parts = [f0]
    for k in range(1, order + 1):
        defect = poly_sum(
            Polynomial.coerce(layers[ell](parts[k - ell])) for ell in range(1, min(k, len(layers) - 1) + 1)
        )
        closed = q0(defect)
        if closed:
            raise ObstructionNonClosed(f"order {k}: the defect is not closed, q0 defect = {closed}")
        fk = -Polynomial.coerce(homotopy(defect))
        miss = q0(fk) + defect
        if miss:
            raise ObstructionNonClosed(f"order {k}: the defect is closed but not exact (remainder {miss})")
        parts.append(fk)
    return HbarSeries({k: p for k, p in enumerate(parts) if p}, order)


def cohomology_reps(split: BasisSplit, ghost: int, max_degree: int, min_degree: int = 1) -> list[Polynomial]:
    """Monomials in the closed coordinates at the given ghost number,
    written in the original coordinates."""
    out = []
    for mono in split.monomials(max_degree, min_degree=min_degree):
        (m,) = mono.terms
        if any(x not in split.w_ids for x in m):
            continue
        if mono.homogeneous_grading()[1] != ghost:
            continue
        out.append(split.from_split(mono))
    return out
