"""The antibracket on local functionals and its density-level action.

For functionals the bracket is built from Euler-Lagrange derivatives, so
results are representatives modulo total derivatives.  When the second
argument is an unintegrated density, :func:`act_on_density` gives the exact
density-level action (an evolutionary derivation), which is what
nilpotency checks on generators need.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from ..expr.polynomial import MIXED, MixedGrading, Polynomial, deriv_left, poly_sum
from ..expr.variables import GradedVariable, registry
from ..local.functional import (
    Density,
    LocalFunctional,
    _poly_of,
    _root_id,
    euler_lagrange_poly,
    total_derivative_poly,
)
from ..local.jets import has_jets

__all__ = [
    "act_on_density",
    "antibracket",
    "antibracket_poly",
    "evolutionary",
    "field_pairs",
    "partner",
]


def partner(v: GradedVariable) -> GradedVariable | None:
    """Field <-> antifield partner of an undifferentiated variable."""
    if v.role == "antifield":
        return v.meta.get("partner")
    return v.meta.get("antifield")


def field_pairs(*polys: Polynomial) -> list[tuple[GradedVariable, GradedVariable]]:
    """``(field, antifield)`` pairs touched by any of the polynomials."""
    seen: set[int] = set()
    out: list[tuple[GradedVariable, GradedVariable]] = []
    roots: set[int] = set()
    for p in polys:
        for vid in p.variables():
            v = registry.by_id[vid]
            if v.role == "parameter":
                continue
            roots.add(_root_id(vid))
    for r in sorted(roots):
        v = registry.by_id[r]
        other = partner(v)
        if other is None:
            continue
        fld, af = (other, v) if v.role == "antifield" else (v, other)
        if fld.order_key in seen:
            continue
        seen.add(fld.order_key)
        out.append((fld, af))
    return out


def _depends_on(p: Polynomial, root: int) -> bool:
    return any(_root_id(v) == root for v in p.variables())


def antibracket_poly(F: Polynomial, G: Polynomial, pairs=None) -> Polynomial:
    """Density of ``(∫F, ∫G)``; no grading checks."""
    if pairs is None:
        pairs = field_pairs(F, G)
    pieces: list[Polynomial] = []
    for fld, af in pairs:
        fid, aid = fld.order_key, af.order_key
        if _depends_on(F, fid) and _depends_on(G, aid):
            pieces.append(euler_lagrange_poly(F, fld, "R") * euler_lagrange_poly(G, af, "L"))
        if _depends_on(F, aid) and _depends_on(G, fid):
            pieces.append(-(euler_lagrange_poly(F, af, "R") * euler_lagrange_poly(G, fld, "L")))
    return poly_sum(pieces)


def _check_homogeneous(name: str, p: Polynomial) -> None:
    if p.grading() is MIXED:
        raise MixedGrading(f"{name} has mixed grading")


def antibracket(F, G, *, strict: bool = True) -> LocalFunctional:
    """``(F, G)`` for local functionals (densities are accepted too).

    With ``strict`` (the default) inputs of mixed grading are rejected."""
    pf, pg = _poly_of(F), _poly_of(G)
    if strict:
        _check_homogeneous("first argument", pf)
        _check_homogeneous("second argument", pg)
    space = _space_of(F) or _space_of(G)
    out = antibracket_poly(pf, pg)
    return LocalFunctional.of(out, space)


def _space_of(x):
    if isinstance(x, (Density, LocalFunctional)):
        return x.space
    return None


def evolutionary(values: Mapping[int, Polynomial], X: Polynomial) -> Polynomial:
    """Apply the derivation fixed by ``root -> value`` to a density.

    ``sum_v D^alpha(value[root(v)]) * dX/dv`` with left derivatives; this
    is a left derivation whose parity is that of the values."""
    pieces: list[Polynomial] = []
    cache: dict[int, Polynomial] = {}
    for vid in sorted(X.variables()):
        v = registry.by_id[vid]
        root = _root_id(vid)
        val = values.get(root)
        if val is None or not val:
            continue
        img = cache.get(vid)
        if img is None:
            img = val
            if has_jets(v):
                for mu in v.derivs:
                    img = total_derivative_poly(img, mu)
            cache[vid] = img
        pieces.append(img * deriv_left(X, vid))
    return poly_sum(pieces)


def generator_images(S: Polynomial, roots: Iterable[GradedVariable] | None = None) -> dict[int, Polynomial]:
    """``s Phi = -δ_R S/δPhi‡`` and ``s Phi‡ = δ_R S/δPhi`` for the bracket
    with ``S``; keyed by undifferentiated variable id."""
    out: dict[int, Polynomial] = {}
    pairs = field_pairs(S) if roots is None else _pairs_for(roots)
    for fld, af in pairs:
        img_f = -euler_lagrange_poly(S, af, "R")
        img_a = euler_lagrange_poly(S, fld, "R")
        if img_f:
            out[fld.order_key] = img_f
        if img_a:
            out[af.order_key] = img_a
    return out


def _pairs_for(roots: Iterable[GradedVariable]) -> list[tuple[GradedVariable, GradedVariable]]:
    out = []
    seen = set()
    for v in roots:
        other = partner(v)
        if other is None:
            continue
        fld, af = (other, v) if v.role == "antifield" else (v, other)
        if fld.order_key not in seen:
            seen.add(fld.order_key)
            out.append((fld, af))
    return out


def act_on_density(F, X, roots: Iterable[GradedVariable] | None = None) -> Polynomial:
    """Density-level bracket ``(∫F, X(x))``: exact, a derivation in ``X``."""
    pf = _poly_of(F)
    px = _poly_of(X)
    if roots is None:
        roots = {registry.by_id[_root_id(v)] for v in (pf.variables() | px.variables())}
    return evolutionary(generator_images(pf, roots), px)
