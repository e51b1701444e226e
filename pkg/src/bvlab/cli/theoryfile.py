"""Theory files (``.thy``): line-oriented declarations plus expressions.

Statements occupy one line; a line starting with whitespace continues the
previous statement.  ``#`` starts a comment.  Recognised statements::

    theory NAME
    dimension N            jet-order N            metric e0 e1 ...
    index a b c : LO..HI   spacetime mu nu        parameter g xi
    tensor f[a,b,c] = epsilon | delta | entries i,j,k=v ...
    structure-constants f
    field NAME[slots] parity=P ghost=G role=ROLE
    define NAME[formals] = EXPR
    action = EXPR          extension = EXPR       fermion = EXPR
    nonminimal
    kmap GHOST[slots] = EXPR
    split KIND ARGS...
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path

from gmpy2 import mpq

from ..bv.examples import levi_civita, structure_constants_jacobi
from ..bv.theory import SpecError, TheorySpec, gauge_fix, nonminimal_extend, split_action
from ..expr.polynomial import Polynomial, poly_sum
from ..expr.variables import parameter, registry
from ..local.functional import LocalFunctional
from ..local.jets import JetOverflow, JetSpace
from .dsl import (
    Context,
    DSLSyntaxError,
    IndexKind,
    Indexed,
    IndexRangeMismatch,
    Macro,
    TensorDecl,
    UnknownSymbol,
    elaborate,
    parse,
)

__all__ = ["TheoryFile", "load_theory", "parse_theory"]


@dataclass
class TheoryFile:
    name: str
    context: Context
    minimal: TheorySpec
    spec: TheorySpec
    source: str
    splits: list[tuple[str, list[str]]] = field(default_factory=list)


@dataclass
class _Statement:
    text: str
    line: int


def _statements(source: str) -> list[_Statement]:
    out: list[_Statement] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line[0] in " \t" and out:
            out[-1].text += "\n" + line
        else:
            out.append(_Statement(line, lineno))
    return out


_HEAD = re.compile(r"\s*([A-Za-z][A-Za-z0-9_-]*)")


def _error(stmt: _Statement, message: str, column: int = 1) -> DSLSyntaxError:
    return DSLSyntaxError(message, stmt.line, column)


def _split_assignment(stmt: _Statement, head_len: int) -> tuple[str, str, int]:
    """``(lhs, rhs, rhs_offset)`` of ``head lhs = rhs``."""
    rest = stmt.text[head_len:]
    if "=" not in rest:
        raise _error(stmt, "expected '='", len(stmt.text) + 1)
    eq = rest.index("=")
    rhs_offset = head_len + eq + 1
    return rest[:eq].strip(), stmt.text[rhs_offset:], rhs_offset


def _rhs_line_base(stmt: _Statement, rhs: str, offset: int) -> tuple[str, int]:
    # pad so that reported columns refer to the original line
    prefix = stmt.text[:offset]
    pad = "".join(ch if ch == "\n" else " " for ch in prefix)
    return pad + rhs, stmt.line


def _expr(ctx: Context, stmt: _Statement, rhs: str, offset: int) -> Indexed:
    text, base = _rhs_line_base(stmt, rhs, offset)
    node = parse(text, base)
    return elaborate(node, ctx, text, base)


def _scalar(ctx: Context, stmt: _Statement, rhs: str, offset: int) -> Polynomial:
    val = _expr(ctx, stmt, rhs, offset)
    if not val.is_scalar():
        raise IndexRangeMismatch(f"free indices {list(val.names)} left unsummed", stmt.line, offset + 1)
    return val.table.get((), Polynomial())


_SLOTS = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\[([^\]]*)\])?$")


def _name_and_slots(stmt: _Statement, text: str) -> tuple[str, list[str]]:
    m = _SLOTS.match(text.strip())
    if m is None:
        raise _error(stmt, f"malformed declaration {text.strip()!r}")
    slots = [s.strip() for s in m.group(2).split(",")] if m.group(2) else []
    return m.group(1), slots


def parse_theory(source: str, dim: int | None = None, jet_order: int | None = None) -> TheoryFile:
    stmts = _statements(source)
    settings = {"dimension": 4, "jet-order": 3, "metric": None}
    # first pass: global settings, so that the jet space exists before fields
    for st in stmts:
        head = _HEAD.match(st.text).group(1)
        args = st.text.split()[1:]
        if head in ("dimension", "jet-order"):
            if len(args) != 1 or not args[0].isdigit():
                raise _error(st, f"{head} needs one non-negative integer")
            settings[head] = int(args[0])
        elif head == "metric":
            try:
                settings["metric"] = tuple(mpq(Fraction(a)) for a in args)
            except ValueError:
                raise _error(st, "metric entries must be rationals") from None
    if dim is not None:
        settings["dimension"] = dim
    if jet_order is not None:
        settings["jet-order"] = jet_order
    metric = settings["metric"]
    if metric is not None and len(metric) != settings["dimension"]:
        metric = None
    space = JetSpace(settings["dimension"], settings["jet-order"], metric or ())
    ctx = Context(space, registry_fallback=False)

    name = "theory"
    action: list[Polynomial] = []
    extension: list[Polynomial] = []
    fermion: Polynomial | None = None
    nonminimal = False
    kmap: dict = {}
    splits: list[tuple[str, list[str]]] = []
    structure: list[str] = []

    for st in stmts:
        head = _HEAD.match(st.text).group(1)
        hl = len(_HEAD.match(st.text).group(0))
        args = st.text.split()[1:]
        if head in ("dimension", "jet-order", "metric"):
            continue
        if head == "theory":
            if len(args) != 1:
                raise _error(st, "theory needs a name")
            name = args[0]
        elif head == "index":
            body = st.text[hl:]
            if ":" not in body:
                raise _error(st, "expected 'index NAMES : LO..HI'")
            names, rng = body.split(":", 1)
            m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", rng)
            if m is None:
                raise _error(st, "index range must look like LO..HI")
            kind = IndexKind(False, int(m.group(1)), int(m.group(2)))
            for n in names.split():
                ctx.indices[n] = kind
        elif head == "spacetime":
            for n in args:
                ctx.indices[n] = IndexKind(True)
        elif head == "parameter":
            for n in args:
                ctx.parameters[n] = parameter(n)
        elif head == "tensor":
            lhs, rhs, _ = _split_assignment(st, hl)
            tname, slots = _name_and_slots(st, lhs)
            kinds = tuple(ctx.index_kind(s) for s in slots)
            rhs_words = rhs.split()
            if rhs_words == ["epsilon"]:
                n = len(kinds)
                entries = {k: v for k, v in levi_civita(n).items()}
                lo = kinds[0].lo if kinds and not kinds[0].spacetime else 0
                entries = {tuple(i + lo for i in k): v for k, v in entries.items()}
            elif rhs_words == ["delta"]:
                ranges = [k.values(space.dim) for k in kinds]
                entries = {c: 1 for c in product(*ranges) if len(set(c)) == 1}
            elif rhs_words and rhs_words[0] == "entries":
                entries = {}
                for item in rhs_words[1:]:
                    if "=" not in item:
                        raise _error(st, f"malformed tensor entry {item!r}")
                    idx, val = item.split("=", 1)
                    entries[tuple(int(x) for x in idx.split(","))] = mpq(Fraction(val))
            else:
                raise _error(st, "tensor values must be 'epsilon', 'delta' or 'entries ...'")
            ctx.tensors[tname] = TensorDecl(tname, kinds, entries)
        elif head == "structure-constants":
            structure.extend(args)
        elif head == "field":
            if not args:
                raise _error(st, "field needs a name")
            fname, slots = _name_and_slots(st, args[0])
            opts = {"parity": "0", "ghost": "0", "role": "field"}
            for item in args[1:]:
                if "=" not in item:
                    raise _error(st, f"expected key=value, got {item!r}")
                k, v = item.split("=", 1)
                if k not in opts:
                    raise _error(st, f"unknown field option {k!r}")
                opts[k] = v
            try:
                ctx.declare_field(fname, slots, int(opts["parity"]), int(opts["ghost"]), opts["role"])
            except ValueError as exc:
                raise _error(st, str(exc)) from None
        elif head == "define":
            lhs, rhs, off = _split_assignment(st, hl)
            mname, formals = _name_and_slots(st, lhs)
            value = _expr(ctx, st, rhs, off)
            if set(value.names) != set(formals):
                raise IndexRangeMismatch(
                    f"definition of {mname} has free indices {sorted(value.names)}, declared {formals}",
                    st.line,
                    off + 1,
                )
            ctx.macros[mname] = Macro(mname, tuple(formals), value)
        elif head in ("action", "extension", "fermion"):
            lhs, rhs, off = _split_assignment(st, hl)
            poly = _scalar(ctx, st, rhs, off)
            if head == "action":
                action.append(poly)
            elif head == "extension":
                extension.append(poly)
            else:
                fermion = poly if fermion is None else fermion + poly
        elif head == "nonminimal":
            nonminimal = True
        elif head == "kmap":
            lhs, rhs, off = _split_assignment(st, hl)
            gname, slots = _name_and_slots(st, lhs)
            decl = ctx.fields.get(gname)
            if decl is None:
                raise UnknownSymbol(f"unknown ghost {gname!r}", st.line, 1)
            value = _expr(ctx, st, rhs, off)
            if sorted(value.names) != sorted(slots):
                raise IndexRangeMismatch("kmap indices do not match the expression", st.line, off + 1)
            for comps, var in decl.components.items():
                assign = dict(zip(slots, comps))
                kmap[var] = value.get(assign)
        elif head == "split":
            if not args:
                raise _error(st, "split needs a kind")
            splits.append((args[0], args[1:]))
        else:
            raise _error(st, f"unknown statement {head!r}")

    for tname in structure:
        t = ctx.tensors.get(tname)
        if t is None:
            raise UnknownSymbol(f"unknown tensor {tname!r}")
        n = len(t.slots[0].values(space.dim))
        lo = t.slots[0].lo
        shifted = {tuple(i - lo for i in k): v for k, v in t.entries.items()}
        bad = structure_constants_jacobi(shifted, n)
        if bad:
            raise SpecError(f"structure constants {tname} violate the Jacobi identity")

    S = poly_sum(action)
    ext = poly_sum(extension)
    for label, p in (("action", S), ("extension", ext), ("fermion", fermion or Polynomial())):
        for vid in p.variables():
            v = registry.by_id[vid]
            if len(v.derivs) > space.jet_order:
                raise JetOverflow(f"{label} uses {v.text}, beyond jet order {space.jet_order}")
    s0, sint, _ = split_action(S)
    fields = tuple(ctx.all_components())
    couplings = tuple(ctx.parameters.values())
    structure_tensor = ctx.tensors[structure[0]].entries if structure else None
    minimal = TheorySpec(
        name=name,
        space=space,
        fields=fields,
        S0=LocalFunctional.of(s0, space),
        Sint=LocalFunctional.of(sint, space),
        Sext=LocalFunctional.of(ext, space),
        couplings=couplings,
        k_map=kmap,
        structure_constants=structure_tensor,
    )
    spec = minimal
    if nonminimal:
        spec = nonminimal_extend(spec)
    if fermion is not None:
        spec = gauge_fix(spec, fermion)
    return TheoryFile(name, ctx, minimal, spec, source, splits)


def load_theory(path, dim: int | None = None, jet_order: int | None = None) -> TheoryFile:
    source = Path(path).read_text(encoding="utf-8")
    return parse_theory(source, dim, jet_order)

