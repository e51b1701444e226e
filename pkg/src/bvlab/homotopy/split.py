"""Contractible-pair splittings of a linear differential.

A split of a finite set of coordinates (jet coordinates up to a fixed
order, or the modes and antifields of a mode system) is a new linear basis
made of pairs ``(u_i, v_i)`` with ``D0 u_i = v_i`` and closed coordinates
``w_j`` with ``D0 w_j = 0``.  Each new coordinate is represented by a
fresh registry variable, so polynomials can be moved between the original
coordinates and the split ones by linear substitution.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

from gmpy2 import mpq

from ..expr.polynomial import Polynomial, _mono_grading, deriv_left, poly_sum
from ..expr.variables import GradedVariable, registry

__all__ = [
    "BasisSplit",
    "UnverifiedSplit",
    "complete_split",
]

Differential = Callable[[Polynomial], Polynomial]


class UnverifiedSplit(ValueError):
    """The proposed coordinates do not split the differential."""


_SERIAL = itertools.count()


# ---------------------------------------------------------------------------
# linear forms with parameter-polynomial coefficients


def _linear_form(p: Polynomial, scope_ids: frozenset, what: str) -> dict[int, Polynomial]:
    """``{coordinate id: coefficient polynomial}`` of a form linear in the scope."""
    out: dict[int, list[Polynomial]] = {}
    by_id = registry.by_id
    for mono, c in p.terms.items():
        hits = [x for x in mono if x in scope_ids]
        if len(hits) != 1:
            raise UnverifiedSplit(f"{what} is not linear in the scope coordinates: {p}")
        others = [x for x in mono if x not in scope_ids]
        if any(by_id[x].role != "parameter" for x in others):
            raise UnverifiedSplit(f"{what} leaves the scope: {p}")
        coeff = Polynomial.product([by_id[hits[0]]] + [by_id[x] for x in others], c)
        # move the coordinate to the front: coefficient = d_L/d(coordinate)
        out.setdefault(hits[0], []).append(deriv_left(coeff, hits[0]))
    return {k: s for k, v in out.items() if (s := poly_sum(v))}


def _constant_pivot(vec: dict[int, Polynomial]):
    for k in sorted(vec):
        if vec[k].is_constant():
            return k, vec[k].constant_term()
    return None


@dataclass
class _Row:
    vec: dict[int, Polynomial]
    combo: dict[int, Polynomial]
    pivot: int
    lead: object


def _axpy(target: dict[int, Polynomial], factor: Polynomial, source: dict[int, Polynomial]) -> None:
    """``target -= factor * source`` in place."""
    for k, v in source.items():
        new = target.get(k, Polynomial()) - factor * v
        if new:
            target[k] = new
        else:
            target.pop(k, None)


class _Echelon:
    """Incremental elimination with constant pivots.

    Each row remembers which combination of the new coordinates it equals,
    so that old coordinates can finally be expressed in the new basis."""

    def __init__(self) -> None:
        self.rows: list[_Row] = []

    def reduce(self, vec: dict[int, Polynomial], combo: dict[int, Polynomial]):
        vec, combo = dict(vec), dict(combo)
        for row in self.rows:
            entry = vec.get(row.pivot)
            if entry:
                factor = entry.scale(1 / row.lead)
                _axpy(vec, factor, row.vec)
                _axpy(combo, factor, row.combo)
        return vec, combo

    def add(self, vec: dict[int, Polynomial], label: int) -> bool:
        """Insert the coordinate ``label`` with the given form; ``False`` if dependent."""
        rest, combo = self.reduce(vec, {label: Polynomial.one()})
        if not rest:
            return False
        piv = _constant_pivot(rest)
        if piv is None:
            raise UnverifiedSplit("elimination needs a non-constant pivot; the split is not invertible over the rationals")
        self.rows.append(_Row(rest, combo, piv[0], piv[1]))
        return True

    def express(self, vec: dict[int, Polynomial]) -> dict[int, Polynomial] | None:
        """Coefficients of ``vec`` in the inserted coordinates, or ``None``."""
        rest, combo = self.reduce(vec, {})
        if rest:
            return None
        return {k: -v for k, v in combo.items() if v}

    def inverse(self, scope_ids: Sequence[int]) -> dict[int, dict[int, Polynomial]]:
        """Old coordinate -> combination of the new coordinates."""
        out = {}
        for x in scope_ids:
            combo = self.express({x: Polynomial.one()})
            if combo is None:
                raise UnverifiedSplit(f"{registry.by_id[x].text} is not spanned by the split")
            out[x] = combo
        return out


# ---------------------------------------------------------------------------


def _grading_of(p: Polynomial, what: str) -> tuple[int, int, int]:
    parity = ghost = None
    afs = set()
    for mono in p.terms:
        e, g, a = _mono_grading(mono)
        if parity is None:
            parity, ghost = e, g
        elif (e, g) != (parity, ghost):
            raise UnverifiedSplit(f"{what} mixes parity or ghost number: {p}")
        afs.add(a)
    if parity is None:
        raise UnverifiedSplit(f"{what} is zero")
    return parity, ghost, afs.pop() if len(afs) == 1 else 0


class BasisSplit:
    """A verified split ``{u_i, v_i, w_j}`` of the coordinates in ``scope``.

    ``pairs`` and ``closed`` are linear polynomials in the scope
    coordinates (coefficients may involve parameters).  Construction checks
    ``D0 u = v``, ``D0 v = 0``, ``D0 w = 0`` and that the new coordinates form
    a basis of the span of the scope."""

    def __init__(
        self,
        pairs: Sequence[tuple[Polynomial, Polynomial]],
        closed: Sequence[Polynomial],
        differential: Differential,
        scope: Sequence[GradedVariable],
        name: str = "split",
    ) -> None:
        self.name = name
        self.differential = differential
        self.scope = tuple(scope)
        self.scope_ids = frozenset(v.order_key for v in self.scope)
        if len(self.scope_ids) != len(self.scope):
            raise UnverifiedSplit("scope lists a coordinate twice")
        self.pairs = [(Polynomial.coerce(u), Polynomial.coerce(v)) for u, v in pairs]
        self.closed = [Polynomial.coerce(w) for w in closed]
        self._verify_differential()
        serial = next(_SERIAL)
        self.u_vars: list[GradedVariable] = []
        self.v_vars: list[GradedVariable] = []
        self.w_vars: list[GradedVariable] = []
        self.expression: dict[int, Polynomial] = {}
        for i, (u, v) in enumerate(self.pairs):
            self.u_vars.append(self._new_var(serial, f"u{i}", u))
            self.v_vars.append(self._new_var(serial, f"v{i}", v))
        for j, w in enumerate(self.closed):
            self.w_vars.append(self._new_var(serial, f"w{j}", w))
        self.u_ids = frozenset(x.order_key for x in self.u_vars)
        self.v_ids = frozenset(x.order_key for x in self.v_vars)
        self.w_ids = frozenset(x.order_key for x in self.w_vars)
        self.partner_of_v = {v.order_key: u.order_key for u, v in zip(self.u_vars, self.v_vars)}
        self.partner_of_u = {u.order_key: v.order_key for u, v in zip(self.u_vars, self.v_vars)}
        self._build_inverse()

    # construction helpers -------------------------------------------------
    def _new_var(self, serial: int, tag: str, expr: Polynomial) -> GradedVariable:
        parity, ghost, af = _grading_of(expr, f"split coordinate {tag}")
        var = registry.declare(f"split{serial}:{self.name}:{tag}", parity, ghost, af, "parameter", f"{self.name}.{tag}")
        self.expression[var.order_key] = expr
        return var

    def _verify_differential(self) -> None:
        d = self.differential
        for i, (u, v) in enumerate(self.pairs):
            _linear_form(u, self.scope_ids, f"u{i}")
            _linear_form(v, self.scope_ids, f"v{i}")
            if d(u) != v:
                raise UnverifiedSplit(f"D0 u{i} = {d(u)}, expected v{i} = {v}")
            if d(v):
                raise UnverifiedSplit(f"D0 v{i} = {d(v)} is not zero")
        for j, w in enumerate(self.closed):
            _linear_form(w, self.scope_ids, f"w{j}")
            if d(w):
                raise UnverifiedSplit(f"D0 w{j} = {d(w)} is not zero")

    def _build_inverse(self) -> None:
        ech = _Echelon()
        for var in self.u_vars + self.v_vars + self.w_vars:
            form = _linear_form(self.expression[var.order_key], self.scope_ids, var.text)
            if not ech.add(form, var.order_key):
                raise UnverifiedSplit(f"{var.text} = {self.expression[var.order_key]} is linearly dependent")
        n_new = len(self.u_vars) + len(self.v_vars) + len(self.w_vars)
        if n_new != len(self.scope):
            raise UnverifiedSplit(f"{n_new} split coordinates for {len(self.scope)} scope coordinates")
        inv = ech.inverse([v.order_key for v in self.scope])
        by_id = registry.by_id
        self._to_split = {
            x: poly_sum(Polynomial.var(by_id[k]) * coeff for k, coeff in combo.items()) for x, combo in inv.items()
        }

    # coordinate changes ---------------------------------------------------
    @property
    def split_ids(self) -> frozenset:
        return self.u_ids | self.v_ids | self.w_ids

    def to_split(self, p: Polynomial) -> Polynomial:
        p = Polynomial.coerce(p)
        by_id = registry.by_id
        for x in p.variables():
            if x not in self.scope_ids and x not in self.split_ids and by_id[x].role != "parameter":
                raise UnverifiedSplit(f"{by_id[x].text} lies outside the scope of split {self.name}")
        return p.substitute(self._to_split)

    def from_split(self, p: Polynomial) -> Polynomial:
        return Polynomial.coerce(p).substitute(self.expression)

    def counting(self, mono: tuple) -> int:
        """Eigenvalue of ``N_{u,v}`` on a split monomial."""
        return sum(1 for x in mono if x in self.u_ids or x in self.v_ids)

    # operators in split coordinates ---------------------------------------
    def d0_split(self, p: Polynomial) -> Polynomial:
        """``D0 = sum_i v_i d_L/du_i``."""
        pieces = []
        for u, v in zip(self.u_vars, self.v_vars):
            du = deriv_left(p, u)
            if du:
                pieces.append(Polynomial.var(v) * du)
        return poly_sum(pieces)

    def h0_tilde_split(self, p: Polynomial) -> Polynomial:
        """The odd derivation ``v_i -> u_i``, ``u, w -> 0``."""
        pieces = []
        for u, v in zip(self.u_vars, self.v_vars):
            dv = deriv_left(p, v)
            if dv:
                pieces.append(Polynomial.var(u) * dv)
        return poly_sum(pieces)

    def counting_parts(self, p: Polynomial) -> dict[int, Polynomial]:
        parts: dict[int, dict] = {}
        for mono, c in p.terms.items():
            parts.setdefault(self.counting(mono), {})[mono] = c
        return {n: Polynomial(t, _trusted=True) for n, t in parts.items()}

    def h0_split(self, p: Polynomial) -> Polynomial:
        pieces = []
        for n, part in self.counting_parts(p).items():
            if n:
                pieces.append(self.h0_tilde_split(part).scale(mpq(1, n)))
        return poly_sum(pieces)

    def projection_split(self, p: Polynomial) -> Polynomial:
        """Component on the ``N_{u,v} = 0`` subspace."""
        return self.counting_parts(p).get(0, Polynomial())

    # operators in the original coordinates ---------------------------------
    def h0(self, p: Polynomial) -> Polynomial:
        return self.from_split(self.h0_split(self.to_split(p)))

    def projection(self, p: Polynomial) -> Polynomial:
        return self.from_split(self.projection_split(self.to_split(p)))

    # enumeration ------------------------------------------------------------
    def monomials(self, max_degree: int, *, positive_only: bool = False, min_degree: int = 0) -> list[Polynomial]:
        """All split monomials of degree ``min_degree..max_degree`` (odd ones squarefree)."""
        gens = self.u_vars + self.v_vars + self.w_vars
        out = []
        for deg in range(min_degree, max_degree + 1):
            for combo in itertools.combinations_with_replacement(gens, deg):
                if any(v.parity and combo.count(v) > 1 for v in set(combo)):
                    continue
                mono = Polynomial.product(combo)
                if not mono:
                    continue
                if positive_only and not any(v in self.u_vars or v in self.v_vars for v in combo):
                    continue
                out.append(mono)
        return out

    def verify_exhaustive(self, max_degree: int = 4) -> list[tuple[Polynomial, Polynomial]]:
        """``(monomial, residual)`` for every failure of ``D0 h0 + h0 D0 = id``.

        Monomials are enumerated in split coordinates with ``N_{u,v} > 0``
        and converted back; ``D0`` is the original differential."""
        failures = []
        d = self.differential
        for mono in self.monomials(max_degree, positive_only=True, min_degree=1):
            p = self.from_split(mono)
            lhs = d(self.h0(p)) + self.h0(d(p))
            if lhs != p:
                failures.append((mono, lhs - p))
        return failures

    def describe(self) -> dict:
        return {
            "name": self.name,
            "scope": [v.text for v in self.scope],
            "pairs": [[u.to_text(), v.to_text()] for u, v in self.pairs],
            "closed": [w.to_text() for w in self.closed],
        }


def complete_split(
    differential: Differential,
    scope: Sequence[GradedVariable],
    pair_candidates: Iterable[GradedVariable] | None = None,
    closed: Sequence[Polynomial] = (),
    name: str = "split",
) -> BasisSplit:
    """Build and verify a split by greedy completion.

    Explicit ``closed`` coordinates are inserted first; then
    ``pair_candidates`` are tried as ``u`` coordinates (their images become
    the ``v``).  Every remaining scope coordinate ``x`` independent of what is already
    chosen becomes closed after subtracting ``sum c_i u_i`` where
    ``D0 x = sum c_i v_i``.  When ``pair_candidates`` is ``None`` any
    coordinate with an independent image may start a new pair.  The result
    is then verified from scratch by :class:`BasisSplit`."""
    scope = tuple(scope)
    scope_ids = frozenset(v.order_key for v in scope)
    auto = pair_candidates is None
    candidates = list(pair_candidates or ())
    cand_ids = {v.order_key for v in candidates}
    ordered = candidates + [v for v in scope if v.order_key not in cand_ids]
    ech = _Echelon()
    labels = itertools.count()
    roles: dict[int, tuple[str, Polynomial]] = {}
    pairs: list[tuple[Polynomial, Polynomial]] = []
    closed_list: list[Polynomial] = []
    u_label_of_v: dict[int, int] = {}

    def insert(expr: Polynomial, kind: str) -> int | None:
        label = next(labels)
        if not ech.add(_linear_form(expr, scope_ids, kind), label):
            return None
        roles[label] = (kind, expr)
        return label

    def try_pair(x: Polynomial) -> bool:
        image = differential(x)
        if not image:
            return False
        form = _linear_form(image, scope_ids, "image")
        if ech.express(form) is not None:
            return False
        lu = insert(x, "u")
        lv = insert(image, "v")
        if lu is None or lv is None:
            raise UnverifiedSplit(f"pair ({x}, {image}) is degenerate")
        u_label_of_v[lv] = lu
        pairs.append((x, image))
        return True

    for w in closed:
        w = Polynomial.coerce(w)
        if differential(w):
            raise UnverifiedSplit(f"declared closed coordinate {w} is not closed")
        if insert(w, "w") is None:
            raise UnverifiedSplit(f"declared closed coordinate {w} is dependent")
        closed_list.append(w)

    for var in ordered:
        if not (auto or var.order_key in cand_ids):
            continue
        if ech.express({var.order_key: Polynomial.one()}) is None:
            try_pair(Polynomial.var(var))

    for var in ordered:
        x = Polynomial.var(var)
        if ech.express({var.order_key: Polynomial.one()}) is not None:
            continue
        image = differential(x)
        if not image:
            insert(x, "w")
            closed_list.append(x)
            continue
        combo = ech.express(_linear_form(image, scope_ids, "image"))
        if combo is None:
            raise UnverifiedSplit(f"D0 {var.text} = {image} is not in the span of the declared pairs")
        correction = []
        for label, coeff in combo.items():
            if roles[label][0] != "v":
                raise UnverifiedSplit(f"D0 {var.text} has components outside the exact coordinates")
            correction.append(coeff * roles[u_label_of_v[label]][1])
        w = x - poly_sum(correction)
        if differential(w):
            raise UnverifiedSplit(f"closure correction of {var.text} failed")
        insert(w, "w")
        closed_list.append(w)
    return BasisSplit(pairs, closed_list, differential, scope, name)
