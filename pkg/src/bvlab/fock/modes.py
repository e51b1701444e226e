"""Finite-dimensional mode systems: graded modes with rational propagators.

A mode system replaces spacetime fields by finitely many graded modes.  The
retarded propagator ``Gret``, the commutator function ``Delta`` and a
graded-symmetric ``W`` are supplied; the advanced propagator, the two-point
kernel ``Gplus = Delta/2 + W`` and the Feynman kernel ``GF = Gplus + Gadv``
are derived and every structural identity is checked at construction.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from gmpy2 import mpq

from ..expr.polynomial import Polynomial, poly_sum
from ..expr.variables import GradedVariable, antifield_of, registry

__all__ = [
    "CompatibilityViolation",
    "ModeSystem",
    "ModeSystemError",
    "declare_mode",
    "direct_sum",
    "mode_sites",
    "load_modes",
    "parse_modes",
    "random_mode_system",
]

Matrix = tuple[tuple[mpq, ...], ...]


class ModeSystemError(ValueError):
    """A mode system violates one of the propagator identities."""


class CompatibilityViolation(ModeSystemError):
    """``Q`` and the propagators fail the free-theory Ward identities."""


def declare_mode(label: str, parity: int, ghost: int = 0) -> GradedVariable:
    """Register a mode and its antifield partner.

    The registry name carries the gradings so that unrelated systems may
    reuse a label with different parity."""
    var = registry.declare(f"mode:{label}:{parity}:{ghost}", parity, ghost, 0, "mode", label)
    if "antifield" not in var.meta:
        antifield_of(var)
    return var


def _matrix(rows) -> Matrix:
    return tuple(tuple(mpq(x) for x in row) for row in rows)


def _zeros(n: int) -> Matrix:
    return tuple(tuple(mpq(0) for _ in range(n)) for _ in range(n))


def _sign(a: int, b: int) -> int:
    return -1 if (a and b) else 1


def _graded_transpose(m: Matrix, parities) -> Matrix:
    n = len(m)
    return tuple(tuple(m[j][i] * _sign(parities[i], parities[j]) for j in range(n)) for i in range(n))


def _mat_add(a: Matrix, b: Matrix, scale_b=1) -> Matrix:
    return tuple(tuple(x + scale_b * y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _mat_mul(a: Matrix, b: Matrix) -> Matrix:
    n = len(a)
    return tuple(tuple(sum((a[i][k] * b[k][j] for k in range(n)), mpq(0)) for j in range(n)) for i in range(n))


def _first_mismatch(a: Matrix, b: Matrix):
    for i, (ra, rb) in enumerate(zip(a, b)):
        for j, (x, y) in enumerate(zip(ra, rb)):
            if x != y:
                return i, j, x, y
    return None


@dataclass(frozen=True)
class ModeSystem:
    """Modes, their antifields, and the propagator matrices over the modes.

    Matrices are indexed by position in :attr:`modes`.  ``P`` (free field
    operator) and ``Q`` (free gauge generator, ``D Phi_M = Q_MN Phi_N``) are
    optional.
    """

    name: str
    modes: tuple[GradedVariable, ...]
    delta: Matrix
    gret: Matrix
    w: Matrix
    p: Matrix | None = None
    q: Matrix | None = None
    gadv: Matrix = field(init=False)
    gplus: Matrix = field(init=False)
    gfeyn: Matrix = field(init=False)

    def __post_init__(self) -> None:
        n = len(self.modes)
        for label, m in (("Delta", self.delta), ("Gret", self.gret), ("W", self.w), ("P", self.p), ("Q", self.q)):
            if m is None:
                continue
            if len(m) != n or any(len(r) != n for r in m):
                raise ModeSystemError(f"{label} must be a {n}x{n} matrix")
        par = self.parities
        gadv = _graded_transpose(self.gret, par)
        half = mpq(1, 2)
        gplus = tuple(tuple(half * d + w for d, w in zip(rd, rw)) for rd, rw in zip(self.delta, self.w))
        object.__setattr__(self, "gadv", gadv)
        object.__setattr__(self, "gplus", gplus)
        object.__setattr__(self, "gfeyn", _mat_add(gplus, gadv))
        self.validate()

    # structure ------------------------------------------------------------
    @property
    def parities(self) -> tuple[int, ...]:
        return tuple(m.parity for m in self.modes)

    @property
    def antifields(self) -> tuple[GradedVariable, ...]:
        return tuple(m.meta["antifield"] for m in self.modes)

    @property
    def size(self) -> int:
        return len(self.modes)

    def mode(self, label: str) -> GradedVariable:
        for m in self.modes:
            if m.text == label:
                return m
        raise KeyError(f"no mode {label!r} in {self.name}")

    def antifield(self, label: str) -> GradedVariable:
        return self.mode(label).meta["antifield"]

    def dynamical_ids(self) -> frozenset[int]:
        return frozenset(m.order_key for m in self.modes)

    def kernel(self, which: str) -> dict[int, list[tuple[int, mpq]]]:
        """Sparse rows ``{id_M: [(id_N, K_MN), ...]}`` of a named matrix."""
        m = self.matrix(which)
        ids = [v.order_key for v in self.modes]
        rows: dict[int, list[tuple[int, mpq]]] = {}
        for i, row in enumerate(m):
            entries = [(ids[j], x) for j, x in enumerate(row) if x]
            if entries:
                rows[ids[i]] = entries
        return rows

    def matrix(self, which: str) -> Matrix:
        table = {
            "delta": self.delta,
            "gret": self.gret,
            "gadv": self.gadv,
            "gplus": self.gplus,
            "gfeyn": self.gfeyn,
            "w": self.w,
            "p": self.p,
            "q": self.q,
        }
        m = table[which.lower()]
        if m is None:
            raise ModeSystemError(f"{self.name} has no {which} matrix")
        return m

    # validation -----------------------------------------------------------
    def validate(self) -> None:
        par = self.parities
        n = self.size
        for label, m in (("Delta", self.delta), ("Gret", self.gret), ("W", self.w), ("P", self.p)):
            if m is None:
                continue
            for i in range(n):
                for j in range(n):
                    if par[i] != par[j] and m[i][j]:
                        raise ModeSystemError(f"{label} couples modes of different parity at ({i},{j})")
        bad = _first_mismatch(self.delta, _mat_add(self.gret, self.gadv, -1))
        if bad:
            raise ModeSystemError(f"Delta != Gret - Gadv at {bad[:2]}: {bad[2]} vs {bad[3]}")
        bad = _first_mismatch(self.w, _graded_transpose(self.w, par))
        if bad:
            raise ModeSystemError(f"W is not graded-symmetric at {bad[:2]}")
        bad = _first_mismatch(_mat_add(self.gplus, _graded_transpose(self.gplus, par), -1), self.delta)
        if bad:
            raise ModeSystemError(f"Gplus antisymmetrisation differs from Delta at {bad[:2]}")
        bad = _first_mismatch(self.gfeyn, _graded_transpose(self.gfeyn, par))
        if bad:
            raise ModeSystemError(f"Feynman kernel is not graded-symmetric at {bad[:2]}")
        if self.p is not None:
            ident = tuple(tuple(mpq(int(i == j)) for j in range(n)) for i in range(n))
            bad = _first_mismatch(_mat_mul(self.p, self.gret), ident)
            if bad:
                raise ModeSystemError(f"P*Gret is not the identity at {bad[:2]}")
        if self.q is not None:
            self._check_compatibility()

    def _check_compatibility(self) -> None:
        par = self.parities
        q, gret, gadv = self.q, self.gret, self.gadv
        n = self.size
        for i in range(n):
            for j in range(n):
                if q[i][j] and par[i] == par[j]:
                    raise CompatibilityViolation(f"Q must pair modes of opposite parity, entry ({i},{j})")
        # Q_QN Gret_NP = -Q_PM Gadv_MQ  and  Q_PM Gret_QM = Q_QN Gadv_PN
        for a in range(n):  # index Q
            for b in range(n):  # index P
                lhs = sum((q[a][k] * gret[k][b] for k in range(n)), mpq(0))
                rhs = -sum((q[b][k] * gadv[k][a] for k in range(n)), mpq(0))
                if lhs != rhs:
                    raise CompatibilityViolation(
                        f"first free Ward identity fails for ({self.modes[a].text},{self.modes[b].text}): {lhs} != {rhs}"
                    )
                lhs2 = sum((q[b][k] * gret[a][k] for k in range(n)), mpq(0))
                rhs2 = sum((q[a][k] * gadv[b][k] for k in range(n)), mpq(0))
                if lhs2 != rhs2:
                    raise CompatibilityViolation(
                        f"second free Ward identity fails for ({self.modes[a].text},{self.modes[b].text}): {lhs2} != {rhs2}"
                    )

    # free action pieces ---------------------------------------------------
    def free_action_layers(self) -> dict[int, Polynomial]:
        """``S0^(0) = 1/2 Phi_K P_KL Phi_L`` and ``S0^(1) = -(Q_MN Phi_N) Phi‡_M``."""
        out: dict[int, Polynomial] = {}
        if self.p is not None:
            pieces = []
            for i, vi in enumerate(self.modes):
                for j, vj in enumerate(self.modes):
                    if self.p[i][j]:
                        pieces.append(Polynomial.product([vi, vj], self.p[i][j] / 2))
            out[0] = poly_sum(pieces)
        if self.q is not None:
            pieces = []
            afs = self.antifields
            for i in range(self.size):
                for j, vj in enumerate(self.modes):
                    if self.q[i][j]:
                        pieces.append(Polynomial.product([vj, afs[i]], -self.q[i][j]))
            out[1] = poly_sum(pieces)
        return out

    def free_action(self) -> Polynomial:
        return poly_sum(self.free_action_layers().values())


# ---------------------------------------------------------------------------
# file format


_ENTRY = re.compile(r"^-?\d+(/\d+)?$")


def _rational(tok: str, lineno: int) -> mpq:
    if not _ENTRY.match(tok):
        raise ModeSystemError(f"line {lineno}: {tok!r} is not a rational p/q")
    return mpq(Fraction(tok))


def parse_modes(source: str) -> ModeSystem:
    """Parse the ``.modes`` table format.

    ::

        system NAME
        mode LABEL even|odd [ghost=G]
        matrix Delta|Gret|W|P|Q
          row of rationals
          ...

    ``Delta`` defaults to ``Gret - Gadv`` and ``W`` to zero when omitted.
    """
    name = "modes"
    modes: list[GradedVariable] = []
    matrices: dict[str, list[list[mpq]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        words = line.split()
        if line[0] in " \t":
            if current is None:
                raise ModeSystemError(f"line {lineno}: matrix row outside a matrix block")
            matrices[current].append([_rational(t, lineno) for t in words])
            continue
        current = None
        head = words[0]
        if head == "system":
            if len(words) != 2:
                raise ModeSystemError(f"line {lineno}: system needs one name")
            name = words[1]
        elif head == "mode":
            if len(words) < 3 or words[2] not in ("even", "odd"):
                raise ModeSystemError(f"line {lineno}: expected 'mode LABEL even|odd [ghost=G]'")
            ghost = 0
            for opt in words[3:]:
                m = re.fullmatch(r"ghost=(-?\d+)", opt)
                if m is None:
                    raise ModeSystemError(f"line {lineno}: unknown mode option {opt!r}")
                ghost = int(m.group(1))
            modes.append(declare_mode(words[1], int(words[2] == "odd"), ghost))
        elif head == "matrix":
            key = words[1].lower() if len(words) == 2 else ""
            if key not in ("delta", "gret", "w", "p", "q"):
                raise ModeSystemError(f"line {lineno}: matrix must be one of Delta, Gret, W, P, Q")
            if key in matrices:
                raise ModeSystemError(f"line {lineno}: matrix {words[1]} given twice")
            matrices[key] = []
            current = key
        else:
            raise ModeSystemError(f"line {lineno}: unknown statement {head!r}")
    if not modes:
        raise ModeSystemError("no modes declared")
    if "gret" not in matrices:
        raise ModeSystemError("the retarded propagator Gret is required")
    n = len(modes)
    gret = _matrix(matrices["gret"])
    par = tuple(m.parity for m in modes)
    if len(gret) != n or any(len(r) != n for r in gret):
        raise ModeSystemError(f"Gret must be a {n}x{n} matrix")
    delta = _matrix(matrices["delta"]) if "delta" in matrices else _mat_add(gret, _graded_transpose(gret, par), -1)
    w = _matrix(matrices["w"]) if "w" in matrices else _zeros(n)
    p = _matrix(matrices["p"]) if "p" in matrices else None
    q = _matrix(matrices["q"]) if "q" in matrices else None
    return ModeSystem(name, tuple(modes), delta, gret, w, p, q)


def _block(mats: list[Matrix]) -> Matrix:
    sizes = [len(m) for m in mats]
    rows = []
    offset = 0
    total = sum(sizes)
    for m, n in zip(mats, sizes):
        for r in range(n):
            row = [mpq(0)] * total
            row[offset : offset + n] = m[r]
            rows.append(tuple(row))
        offset += n
    return tuple(rows)


def direct_sum(systems: dict[str, ModeSystem], name: str = "sum") -> ModeSystem:
    """Uncoupled union of mode systems, one per site.

    Modes are relabelled ``SITE.LABEL`` and all matrices are block
    diagonal, so propagators never connect different sites.  A missing
    ``P`` or ``Q`` block counts as zero as long as some site supplies one."""
    modes: list[GradedVariable] = []
    for site, sysm in systems.items():
        if "." in site:
            raise ModeSystemError(f"site name {site!r} may not contain '.'")
        for m in sysm.modes:
            modes.append(declare_mode(f"{site}.{m.text}", m.parity, m.ghost))
    parts = list(systems.values())

    def blocks(attr: str) -> Matrix | None:
        mats = [getattr(s, attr) for s in parts]
        if all(m is None for m in mats):
            return None
        return _block([m if m is not None else _zeros(s.size) for m, s in zip(mats, parts)])

    return ModeSystem(name, tuple(modes), blocks("delta"), blocks("gret"), blocks("w"), blocks("p"), blocks("q"))


def mode_sites(system: ModeSystem) -> dict[int, str]:
    """Site of every mode and antifield of a direct sum, by variable id."""
    out: dict[int, str] = {}
    for m in system.modes:
        site, dot, _ = m.text.partition(".")
        if dot:
            out[m.order_key] = site
            out[m.meta["antifield"].order_key] = site
    return out


def load_modes(path) -> ModeSystem:
    return parse_modes(Path(path).read_text(encoding="utf-8"))


def random_mode_system(
    rng: random.Random,
    n_modes: int = 3,
    n_odd: int | None = None,
    name: str = "random",
    label_prefix: str = "m",
    span: int = 3,
) -> ModeSystem:
    """A valid system with small random rational propagators."""
    if n_odd is None:
        n_odd = rng.randint(0, n_modes)
    parities = [0] * (n_modes - n_odd) + [1] * n_odd
    modes = tuple(declare_mode(f"{label_prefix}{i}", p) for i, p in enumerate(parities))

    def entry() -> mpq:
        return mpq(rng.randint(-span, span), rng.randint(1, span))

    gret = [[mpq(0)] * n_modes for _ in range(n_modes)]
    w = [[mpq(0)] * n_modes for _ in range(n_modes)]
    for i in range(n_modes):
        for j in range(n_modes):
            if parities[i] == parities[j]:
                gret[i][j] = entry()
    for i in range(n_modes):
        for j in range(i, n_modes):
            if parities[i] != parities[j]:
                continue
            if i == j and parities[i]:
                continue  # odd diagonal of a graded-symmetric matrix vanishes
            x = entry()
            w[i][j] = x
            w[j][i] = x * _sign(parities[i], parities[j])
    gret_m = _matrix(gret)
    delta = _mat_add(gret_m, _graded_transpose(gret_m, parities), -1)
    return ModeSystem(name, modes, delta, gret_m, _matrix(w))
