"""Jet coordinates over flat spacetime.

Component fields carry their concrete Lie/spacetime indices in the name,
e.g. ``A[1,0]``; their derivatives are separate graded variables such as
``d(A[1,0],0,2)``.  Jet variables are created lazily and cached, so the
same coordinate is always the same registry entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

from gmpy2 import mpq

from ..expr.variables import GradedVariable, registry

__all__ = [
    "JetOverflow",
    "JetSpace",
    "NON_LOCAL_ROLES",
    "component",
    "component_antifield",
    "has_jets",
    "jet",
    "multi_indices",
    "shift",
]

# variables without spacetime dependence: D_mu annihilates them and the
# Euler-Lagrange machinery never differentiates with respect to them
NON_LOCAL_ROLES = frozenset({"parameter", "constant-ghost", "mode"})


class JetOverflow(ValueError):
    """A derivative would exceed the configured jet order."""


@dataclass(frozen=True)
class JetSpace:
    dim: int = 4
    jet_order: int = 3
    metric: tuple = field(default=())

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.jet_order < 0:
            raise ValueError("jet order must be non-negative")
        if not self.metric:
            object.__setattr__(self, "metric", tuple([mpq(-1)] + [mpq(1)] * (self.dim - 1)))
        else:
            object.__setattr__(self, "metric", tuple(mpq(x) for x in self.metric))
        if len(self.metric) != self.dim:
            raise ValueError("metric length must match the dimension")
        if any(x == 0 for x in self.metric):
            raise ValueError("metric must be non-degenerate")

    def eta(self, mu: int) -> mpq:
        """Diagonal metric entry; the inverse metric has the same entries
        because they are all +-1 or their reciprocals are used explicitly."""
        return self.metric[mu]

    def eta_inverse(self, mu: int) -> mpq:
        return 1 / self.metric[mu]

    def directions(self) -> range:
        return range(self.dim)

    def with_order(self, jet_order: int) -> "JetSpace":
        return JetSpace(self.dim, jet_order, self.metric)


def has_jets(v: GradedVariable) -> bool:
    return v.role not in NON_LOCAL_ROLES


def component(
    field_name: str,
    comps: tuple = (),
    parity: int = 0,
    ghost: int = 0,
    antifield: int = 0,
    role: str = "field",
) -> GradedVariable:
    """Declare one component of an indexed field, e.g. ``A[1,0]``."""
    comps = tuple(int(c) for c in comps)
    text = field_name if not comps else f"{field_name}[{','.join(map(str, comps))}]"
    var = registry.declare(text, parity, ghost, antifield, role, text)
    var.meta.setdefault("field", field_name)
    var.meta.setdefault("components", comps)
    return var


def component_antifield(var: GradedVariable) -> GradedVariable:
    """Antifield partner of a component, spelled ``af(A)[1,0]``."""
    partner = var.meta.get("antifield")
    if partner is not None:
        return partner
    if var.role == "antifield" or var.derivs:
        raise ValueError(f"{var.name} has no antifield partner")
    comps = var.meta.get("components", ())
    fname = var.meta.get("field", var.name)
    af_field = f"af({fname})"
    partner = component(af_field, comps, (var.parity + 1) % 2, -1 - var.ghost, 1, "antifield")
    var.meta["antifield"] = partner
    partner.meta["partner"] = var
    return partner


_JETS: dict[tuple[int, tuple[int, ...]], GradedVariable] = {}


def jet(var: GradedVariable, derivs: tuple[int, ...] | list[int]) -> GradedVariable:
    """The jet coordinate ``d(var, derivs...)``; ``derivs`` is order-free."""
    if var.base is not None:
        derivs = tuple(var.derivs) + tuple(derivs)
        var = var.base
    derivs = tuple(sorted(derivs))
    if not derivs:
        return var
    if not has_jets(var):
        raise ValueError(f"{var.name} has no spacetime dependence")
    key = (var.order_key, derivs)
    hit = _JETS.get(key)
    if hit is not None:
        return hit
    text = f"d({var.text},{','.join(map(str, derivs))})"
    jv = registry.declare(text, var.parity, var.ghost, var.antifield, var.role, text, base=var, derivs=derivs)
    _JETS[key] = jv
    return jv


_SHIFT: dict[tuple[int, int], int] = {}


def shift(vid: int, mu: int) -> int | None:
    """Id of ``D_mu`` applied to the coordinate ``vid`` (``None`` if zero)."""
    key = (vid, mu)
    hit = _SHIFT.get(key)
    if hit is not None:
        return hit if hit >= 0 else None
    v = registry.by_id[vid]
    if not has_jets(v):
        _SHIFT[key] = -1
        return None
    out = jet(v, (mu,)).order_key
    _SHIFT[key] = out
    return out


def multi_indices(dim: int, max_order: int):
    """All sorted derivative multi-indices of order ``0..max_order``."""
    for k in range(max_order + 1):
        yield from combinations_with_replacement(range(dim), k)
