"""Contact terms for products of quantum observables.

With ``G(alpha) = alpha F - C(e^{alpha F})`` and ``y_k`` its ``alpha^k``
coefficient (``y_1 = F``, ``y_k = -C_k(F^k)/k!``), the contact terms are
fixed order by order by the Maurer-Cartan equation

    sum_l 1/l! [G(alpha), .., G(alpha)]_h = 0.

At ``alpha^n`` the single-bracket term is ``-q C_n / n!``, so

    q C_n = K_n = n! sum_{l>=2} 1/l! sum_{k_1+..+k_l=n} [y_k1, .., y_kl]_h

and ``C_n = h_hbar K_n`` once ``K_n`` is known to be ``q``-closed.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from math import factorial

from gmpy2 import mpq

from ..expr.polynomial import Polynomial
from ..expr.series import HbarSeries, series_sum
from ..expr.variables import parameter
from .brackets import BracketFamily, _parity, _series

__all__ = [
    "ContactTerms",
    "ObstructionNotClosed",
    "ObstructionNotExact",
    "compositions",
    "QuantumHomotopy",
    "quantum_homotopy",
    "representative_shift",
    "solve_contact_terms",
]

SeriesMap = Callable[[HbarSeries], HbarSeries]


class ObstructionNotClosed(ArithmeticError):
    """``K_n`` is not closed under the quantum BRST differential."""


class ObstructionNotExact(ArithmeticError):
    """``K_n`` is closed but the homotopy does not produce a primitive."""


def compositions(n: int, parts: int):
    """Ordered tuples of ``parts`` positive integers summing to ``n``."""
    if parts == 1:
        if n >= 1:
            yield (n,)
        return
    for first in range(1, n - parts + 2):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


def _exp_bracket(family: BracketFamily, ys: dict[int, HbarSeries], n: int, extra=(), min_parts: int = 1) -> HbarSeries:
    """``n! sum_{l >= min_parts} 1/l! sum_comp [y_k1, .., y_kl, *extra]``:
    the ``n``-th alpha derivative of ``[exp G(alpha), *extra]``."""
    pieces = []
    for ell in range(max(min_parts, 1), n + 1):
        weight = mpq(factorial(n), factorial(ell))
        for comp in compositions(n, ell):
            args = [ys.get(k) for k in comp]
            if any(a is None or not a for a in args):
                continue
            val = family.bracket(*args, *extra)
            if val:
                pieces.append(val.scale(weight))
    return series_sum(pieces, family.order)


@dataclass
class ContactTerms:
    """``C_n(F^n)`` for ``n <= max_n``, with ``C_0 = C_1 = 0``."""

    family: BracketFamily
    functional: HbarSeries
    terms: dict[int, HbarSeries] = field(default_factory=dict)
    sources: dict[int, HbarSeries] = field(default_factory=dict)
    max_n: int = 0

    def __getitem__(self, n: int) -> HbarSeries:
        return self.terms.get(n, HbarSeries({}, self.family.order))

    def coefficients(self) -> dict[int, HbarSeries]:
        """``y_k``: the alpha-coefficients of ``alpha F - C(e^{alpha F})``."""
        ys = {1: self.functional}
        for k, c in self.terms.items():
            if c:
                ys[k] = c.scale(mpq(-1, factorial(k)))
        return ys

    def derivative(self, n: int) -> list[tuple[mpq, tuple[HbarSeries, ...]]]:
        """``F_C^n`` as a weighted list of bracket argument tuples."""
        ys = self.coefficients()
        out = []
        for ell in range(1, n + 1):
            weight = mpq(factorial(n), factorial(ell))
            for comp in compositions(n, ell):
                if all(k in ys for k in comp):
                    out.append((weight, tuple(ys[k] for k in comp)))
        return out

    def maurer_cartan_residual(self, n: int) -> HbarSeries:
        """``[F_C^n]_h``; zero for every ``n <= max_n``."""
        return _exp_bracket(self.family, self.coefficients(), n)

    def with_argument(self, n: int, g) -> HbarSeries:
        """``[F_C^n, G]_h``."""
        gs = _series(g, self.family.order)
        return _exp_bracket(self.family, self.coefficients(), n, (gs,))


def solve_contact_terms(
    family: BracketFamily,
    functional,
    homotopy: SeriesMap,
    max_n: int = 4,
    trim: SeriesMap | None = None,
    adjust: Callable[[int, HbarSeries], HbarSeries] | None = None,
) -> ContactTerms:
    """Solve ``q C_n = K_n`` by ``C_n = h K_n`` for ``n = 2..max_n``.

    ``functional`` must be even and ``q``-closed to the family's order.
    ``trim`` is applied to every ``K_n`` (for example to drop powers of a
    polarisation parameter beyond the first).  ``adjust(n, C_n)`` may change
    each solution by a ``q``-exact term before the next order is built."""
    fs = _series(functional, family.order)
    if fs and _parity(fs):
        raise ValueError("contact terms are defined for even functionals")
    qf = family.q(fs)
    if not family.zero_series(qf):
        raise ObstructionNotClosed(f"the functional is not q-closed: qF = {qf}")
    result = ContactTerms(family, fs, max_n=max_n)
    for n in range(2, max_n + 1):
        k_n = _exp_bracket(family, result.coefficients(), n, min_parts=2)
        if trim is not None:
            k_n = trim(k_n)
        result.sources[n] = k_n
        closed = family.q(k_n)
        if not family.zero_series(closed):
            raise ObstructionNotClosed(f"order {n}: q K_n = {closed}")
        c_n = _series(homotopy(k_n), family.order)
        if trim is not None:
            c_n = trim(c_n)
        miss = family.q(c_n) - k_n
        if not family.zero_series(miss):
            raise ObstructionNotExact(f"order {n}: q h K_n - K_n = {miss}")
        if adjust is not None:
            c_n = adjust(n, c_n)
        result.terms[n] = c_n
    return result


class QuantumHomotopy:
    """``h_hbar`` for ``q = sum hbar^m q^(m)``, built from the split of
    ``q^(0)`` by the perturbative recursion, together with the classical
    projection onto the closed coordinates (applied coefficientwise)."""

    def __init__(self, family: BracketFamily, split, restrict: bool = True) -> None:
        from ..homotopy import build_h0, perturbative_homotopy

        self.family = family
        self.h0 = build_h0(split)
        corrections = {m: family.q_layer(m) for m in range(1, family.order + 1)}
        self.perturbative = perturbative_homotopy(self.h0, corrections, family.order, family.q_layer(0), restrict)

    def __call__(self, x) -> HbarSeries:
        return self.perturbative.apply(_series(x, self.family.order))

    def projection(self, x) -> HbarSeries:
        return _series(x, self.family.order).map(self.h0.projection)


def quantum_homotopy(family: BracketFamily, split, restrict: bool = True) -> QuantumHomotopy:
    return QuantumHomotopy(family, split, restrict)


def _beta_coefficient(s: HbarSeries, beta) -> HbarSeries:
    from ..fock.products import coefficient_of

    return coefficient_of(s, beta, 1)


def _trim_beta(beta) -> SeriesMap:
    from ..fock.products import Truncation

    trunc = Truncation.of({beta: 1})
    return trunc.apply_series


def representative_shift(
    family: BracketFamily,
    functional,
    shift,
    homotopy: SeriesMap,
    max_n: int = 3,
    projection: SeriesMap | None = None,
) -> dict:
    """Contact terms under ``F -> F + beta qG`` to first order in ``beta``.

    The contact terms of ``F + beta qG`` are solved order by order.  At each
    order the polarised term ``C_{n+1}(F^n (x) qG)`` obtained from the
    homotopy is compared with ``-[F_C^n, G]_h``.  The difference must be the
    explicitly exact ``q h_hbar [F_C^n, G]_h`` plus, possibly, a ``q``-closed
    remainder in the image of ``projection`` (a cohomology component the
    homotopy cannot reach; ``projection`` defaults to ``homotopy.projection``
    when available).  Both are removed from ``C_{n+1}`` before the next
    order, so the shifted contact terms satisfy
    ``C_{n+1}(F^n (x) qG) = -[F_C^n, G]_h`` exactly."""
    if projection is None:
        projection = getattr(homotopy, "projection", None)
    order = family.order
    fs = _series(functional, order)
    gs = _series(shift, order)
    qg = family.q(gs)
    parity = _parity(qg) if qg else 0
    beta = parameter(f"%beta:{parity}", parity)
    bpoly = Polynomial.var(beta)
    shifted = fs + qg.map(lambda p: bpoly * p)
    base = solve_contact_terms(family, fs, homotopy, max_n + 1)
    orders: dict[int, dict] = {}

    def adjust(n: int, c_n: HbarSeries) -> HbarSeries:
        m = n - 1
        polarised = _beta_coefficient(c_n, beta).scale(mpq(1, n))
        bracket = base.with_argument(m, gs)
        exact = family.q(_series(homotopy(bracket), order))
        residual = polarised + bracket - exact
        closed_part = _series(projection(residual), order) if projection is not None else HbarSeries({}, order)
        leftover = residual - closed_part
        ok = family.zero_series(leftover) and family.zero_series(family.q(closed_part))
        orders[m] = {
            "polarised": polarised,
            "bracket": bracket,
            "exact_term": exact,
            "residual": residual,
            "cohomology_part": closed_part,
            "passed": ok,
        }
        return c_n - (exact + closed_part).map(lambda p: bpoly * p).scale(n)

    moved = solve_contact_terms(family, shifted, homotopy, max_n + 1, trim=_trim_beta(beta), adjust=adjust)
    for n in range(1, max_n + 1):
        after = _beta_coefficient(moved[n + 1], beta).scale(mpq(1, n + 1)) + orders[n]["bracket"]
        orders[n]["identity_after_shift"] = family.zero_series(after)
    passed = all(o["passed"] and o["identity_after_shift"] for o in orders.values())
    return {"orders": orders, "passed": passed, "qG": qg, "contact": base, "shifted": moved}
