"""Splits for concrete differentials: free BRST differentials of theory
specifications (on truncated jet coordinates) and of mode systems."""

from __future__ import annotations

from collections.abc import Mapping, Sequence

from ..bv.antibracket import evolutionary, generator_images
from ..bv.theory import TheorySpec
from ..expr.polynomial import Polynomial
from ..expr.variables import GradedVariable, registry
from ..local.jets import component_antifield, has_jets, jet, multi_indices
from .split import BasisSplit, UnverifiedSplit, complete_split

__all__ = [
    "free_differential",
    "free_generator",
    "jet_scope",
    "mode_differential",
    "mode_split",
    "theory_split",
]


def free_generator(spec: TheorySpec) -> Polynomial:
    """Terms of the total action that are quadratic in local coordinates."""
    by_id = registry.by_id
    return spec.total.poly.filter(lambda m: sum(1 for v in m if has_jets(by_id[v])) == 2)


def free_differential(spec: TheorySpec):
    """Density-level ``s0 = (S_free, .)`` as an exact derivation."""
    images = generator_images(free_generator(spec), spec.roots())

    def d0(p) -> Polynomial:
        return evolutionary(images, Polynomial.coerce(p))

    return d0


def jet_scope(spec: TheorySpec, orders: Mapping[GradedVariable, int]) -> list[GradedVariable]:
    """Jets of each root up to its order, in a fixed order."""
    out = []
    dim = spec.space.dim
    for root, top in orders.items():
        for alpha in multi_indices(dim, top):
            out.append(jet(root, alpha) if alpha else root)
    return out


def _roots_named(tf, token: str) -> list[GradedVariable]:
    af = token.startswith("af(") and token.endswith(")")
    name = token[3:-1] if af else token
    decl = tf.context.fields.get(name)
    if decl is None:
        raise UnverifiedSplit(f"split refers to an unknown field {name!r}")
    comps = [decl.components[k] for k in sorted(decl.components)]
    return [component_antifield(c) for c in comps] if af else comps


def theory_split(tf, name: str | None = None) -> BasisSplit:
    """The split declared in a theory file.

    ::

        split scope af(phi):1 phi:3      roots with their maximal jet order
        split pair af(phi)               jets used as u-coordinates
        split closed EXPR                explicit closed coordinates
    """
    from ..cli.dsl import parse_expression

    orders: dict[GradedVariable, int] = {}
    closed: list[Polynomial] = []
    candidate_roots: list[GradedVariable] = []
    for kind, args in tf.splits:
        if kind == "scope":
            for item in args:
                token, _, order = item.rpartition(":")
                if not token or not order.isdigit():
                    raise UnverifiedSplit(f"scope entries look like FIELD:ORDER, got {item!r}")
                for root in _roots_named(tf, token):
                    orders[root] = int(order)
        elif kind == "pair":
            for token in args:
                candidate_roots.extend(_roots_named(tf, token))
        elif kind == "closed":
            closed.append(parse_expression(" ".join(args), tf.context))
        else:
            raise UnverifiedSplit(f"unknown split statement {kind!r}")
    if not orders:
        raise UnverifiedSplit(f"{tf.name} declares no split scope")
    spec = tf.spec
    scope = jet_scope(spec, orders)
    root_ids = {r.order_key for r in candidate_roots}
    candidates = [v for v in scope if v.root.order_key in root_ids]
    return complete_split(free_differential(spec), scope, candidates, closed, name or tf.name)


def mode_differential(system, generator: Polynomial | None = None):
    """``(S0, .)`` on polynomials in modes and antifields."""
    from ..fock.ward import antibracket_modes

    gen = generator if generator is not None else system.free_action()

    def d0(p) -> Polynomial:
        return antibracket_modes(system, gen, Polynomial.coerce(p))

    return d0


def mode_split(system, generator: Polynomial | None = None, pair_candidates: Sequence[GradedVariable] | None = None) -> BasisSplit:
    """Split of the modes and antifields for the free BRST differential.

    For a finite mode system this is linear algebra, so pairs are found
    greedily unless candidates are given."""
    scope = list(system.modes) + list(system.antifields)
    return complete_split(mode_differential(system, generator), scope, pair_candidates, (), system.name)
