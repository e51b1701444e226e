"""Graded variables, interned in a process-wide registry.

Every variable gets a small integer id on first declaration.  Monomials are
sorted tuples of these ids, so the id doubles as the canonical order key.
The registry is append-only: re-declaring a name returns the existing
variable and raises if the gradings disagree.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

__all__ = [
    "ROLES",
    "GradedVariable",
    "GradingConflict",
    "antifield_of",
    "declare",
    "lookup",
    "parameter",
    "registry",
]

ROLES = frozenset(
    {
        "field",
        "antifield",
        "ghost",
        "antighost",
        "auxiliary",
        "constant-ghost",
        "mode",
        "parameter",
    }
)


class GradingConflict(ValueError):
    """A name was re-declared with different gradings or role."""


@dataclass(frozen=True, eq=False)
class GradedVariable:
    """A generator of the graded-commutative algebra.

    ``base`` and ``derivs`` are set for jet variables (a derivative of a
    component field); ``partner`` links a field to its antifield and back.
    ``text`` is the expression-language spelling used by the printer.
    """

    name: str
    parity: int
    ghost: int
    antifield: int
    role: str
    order_key: int
    text: str
    base: "GradedVariable | None" = None
    derivs: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __hash__(self) -> int:
        return self.order_key

    def __eq__(self, other: object) -> bool:
        return self is other

    def __lt__(self, other: "GradedVariable") -> bool:
        return self.order_key < other.order_key

    @property
    def id(self) -> int:
        return self.order_key

    @property
    def grading(self) -> tuple[int, int, int]:
        return (self.parity, self.ghost, self.antifield)

    @property
    def root(self) -> "GradedVariable":
        """The undifferentiated variable this jet coordinate belongs to."""
        return self.base if self.base is not None else self

    @property
    def is_odd(self) -> bool:
        return self.parity == 1

    def __repr__(self) -> str:
        return f"GradedVariable({self.name!r}, eps={self.parity}, gh={self.ghost}, af={self.antifield})"


class _Registry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.by_name: dict[str, GradedVariable] = {}
        self.by_id: list[GradedVariable] = []
        # parallel arrays for the hot loops in polynomial arithmetic
        self.parity: list[int] = []
        self.ghost: list[int] = []
        self.antifield: list[int] = []

    def declare(
        self,
        name: str,
        parity: int,
        ghost: int = 0,
        antifield: int = 0,
        role: str = "field",
        text: str | None = None,
        base: GradedVariable | None = None,
        derivs: tuple[int, ...] = (),
    ) -> GradedVariable:
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        if parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")
        if antifield < 0:
            raise ValueError("antifield number must be non-negative")
        with self._lock:
            existing = self.by_name.get(name)
            if existing is not None:
                if (existing.parity, existing.ghost, existing.antifield, existing.role) != (
                    parity,
                    ghost,
                    antifield,
                    role,
                ):
                    raise GradingConflict(
                        f"{name!r} already declared with gradings "
                        f"{existing.grading} and role {existing.role!r}"
                    )
                return existing
            var = GradedVariable(
                name=name,
                parity=parity,
                ghost=ghost,
                antifield=antifield,
                role=role,
                order_key=len(self.by_id),
                text=text if text is not None else name,
                base=base,
                derivs=tuple(sorted(derivs)),
            )
            self.by_name[name] = var
            self.by_id.append(var)
            self.parity.append(parity)
            self.ghost.append(ghost)
            self.antifield.append(antifield)
            return var


registry = _Registry()


def declare(
    name: str,
    parity: int = 0,
    ghost: int = 0,
    antifield: int = 0,
    role: str = "field",
    text: str | None = None,
) -> GradedVariable:
    """Declare (or fetch) a plain graded variable."""
    return registry.declare(name, parity, ghost, antifield, role, text)


def parameter(name: str, parity: int = 0) -> GradedVariable:
    """A formal constant (coupling, gauge parameter, auxiliary Grassmann
    parameter).  Parameters are never differentiated by field derivatives."""
    return registry.declare(name, parity, 0, 0, "parameter")


def lookup(name: str) -> GradedVariable:
    try:
        return registry.by_name[name]
    except KeyError:
        raise KeyError(f"unknown variable {name!r}") from None


def antifield_of(var: GradedVariable, name: str | None = None, text: str | None = None) -> GradedVariable:
    """Declare the antifield partner with the standard grading shift:
    parity +1, ghost number ``-1 - g``, antifield number 1."""
    if var.role == "antifield":
        raise ValueError("antifields do not have antifields")
    if var.derivs:
        raise ValueError("declare antifields for undifferentiated variables")
    af_name = name if name is not None else f"{var.name}~"
    partner = registry.declare(
        af_name,
        (var.parity + 1) % 2,
        -1 - var.ghost,
        1,
        "antifield",
        text if text is not None else f"af({var.text})",
    )
    var.meta["antifield"] = partner
    partner.meta["partner"] = var
    return partner
