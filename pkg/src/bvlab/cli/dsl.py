"""Expression language: lexer, recursive-descent parser and elaboration.

Parsing and elaboration are separate passes.  The parser only builds a
syntax tree, so syntax errors never depend on declarations; elaboration
resolves symbols, checks index ranges and performs Einstein summation.

Index positions follow the usual convention: field slots and derivative
directions are lower, antifield spacetime slots are upper.  A repeated
spacetime index contracts with the inverse metric when both occurrences
are lower, with the metric when both are upper, and with the identity
otherwise.  Lie-algebra indices contract with the identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product

from gmpy2 import mpq

from ..expr.coefficients import I as IMAG
from ..expr.polynomial import Polynomial, poly_sum
from ..expr.variables import GradedVariable, registry
from ..local.functional import total_derivative_poly
from ..local.jets import JetSpace, component, component_antifield

__all__ = [
    "Context",
    "DSLError",
    "DSLSyntaxError",
    "FieldDecl",
    "IndexKind",
    "Indexed",
    "Macro",
    "TensorDecl",
    "IndexRangeMismatch",
    "UnknownSymbol",
    "elaborate",
    "mode_context",
    "parse",
    "parse_expression",
    "to_text",
]


class DSLError(Exception):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.message = message


class DSLSyntaxError(DSLError, SyntaxError):
    """Malformed input; carries 1-based ``line`` and ``column``."""

    def __init__(self, message: str, line: int, column: int):
        DSLError.__init__(self, message, line, column)
        self.msg = message
        self.lineno = line
        self.offset = column

    def __str__(self) -> str:
        return f"{self.message} (line {self.line}, column {self.column})"


class UnknownSymbol(DSLError):
    pass


class IndexRangeMismatch(DSLError):
    pass


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()\[\],])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def _position(text: str, offset: int, line_base: int = 1) -> tuple[int, int]:
    line = text.count("\n", 0, offset)
    start = text.rfind("\n", 0, offset) + 1
    return line_base + line, offset - start + 1


def tokenize(text: str, line_base: int = 1) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            line, col = _position(text, pos, line_base)
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


# ---------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class Num:
    value: int
    offset: int


@dataclass(frozen=True)
class Imag:
    offset: int


@dataclass(frozen=True)
class Index:
    name: str | None
    value: int | None
    offset: int


@dataclass(frozen=True)
class Sym:
    name: str
    indices: tuple[Index, ...] | None
    offset: int
    antifield: bool = False


@dataclass(frozen=True)
class Deriv:
    body: object
    directions: tuple[Index, ...]
    offset: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    offset: int


@dataclass(frozen=True)
class Neg:
    body: object
    offset: int


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    offset: int


class _Parser:
    def __init__(self, text: str, line_base: int = 1):
        self.text = text
        self.line_base = line_base
        self.tokens = tokenize(text, line_base)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, tok: Token, message: str):
        line, col = _position(self.text, tok.offset, self.line_base)
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise DSLSyntaxError(f"{message}, found {found}", line, col)

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text or tok.kind == "end":
            self.error(tok, f"expected {text!r}")
        return tok

    def parse(self):
        if self.peek().kind == "end":
            self.error(self.peek(), "expected an expression")
        node = self.expr()
        if self.peek().kind != "end":
            self.error(self.peek(), "unexpected trailing input")
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            tok = self.next()
            node = BinOp(tok.text, node, self.term(), tok.offset)
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            tok = self.next()
            node = BinOp(tok.text, node, self.unary(), tok.offset)
        return node

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("-", "+"):
            self.next()
            body = self.unary()
            return Neg(body, tok.offset) if tok.text == "-" else body
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^" and self.peek().kind == "op":
            self.next()
            tok = self.next()
            if tok.kind != "num":
                self.error(tok, "expected a non-negative integer exponent")
            return Pow(base, int(tok.text), tok.offset)
        return base

    def index_list(self) -> tuple[Index, ...]:
        self.expect("[")
        items = [self.index()]
        while self.peek().text == ",":
            self.next()
            items.append(self.index())
        self.expect("]")
        return tuple(items)

    def index(self) -> Index:
        tok = self.next()
        if tok.kind == "num":
            return Index(None, int(tok.text), tok.offset)
        if tok.kind == "name":
            return Index(tok.text, None, tok.offset)
        self.error(tok, "expected an index")

    def atom(self):
        tok = self.next()
        if tok.kind == "num":
            return Num(int(tok.text), tok.offset)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            if tok.text == "I":
                return Imag(tok.offset)
            if tok.text == "d" and self.peek().text == "(":
                self.next()
                body = self.expr()
                dirs = []
                self.expect(",")
                dirs.append(self.index())
                while self.peek().text == ",":
                    self.next()
                    dirs.append(self.index())
                self.expect(")")
                return Deriv(body, tuple(dirs), tok.offset)
            if tok.text == "af" and self.peek().text == "(":
                self.next()
                name_tok = self.next()
                if name_tok.kind != "name":
                    self.error(name_tok, "expected a field name")
                self.expect(")")
                idx = self.index_list() if self.peek().text == "[" else None
                return Sym(name_tok.text, idx, tok.offset, antifield=True)
            idx = self.index_list() if self.peek().text == "[" else None
            return Sym(tok.text, idx, tok.offset)
        self.error(tok, "expected an expression")


def parse(text: str, line_base: int = 1):
    """Syntax tree for ``text`` (no symbol resolution)."""
    return _Parser(text, line_base).parse()


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class IndexKind:
    """``spacetime`` or a named finite range ``lo..hi``."""

    spacetime: bool
    lo: int = 0
    hi: int = 0

    def values(self, dim: int) -> range:
        return range(dim) if self.spacetime else range(self.lo, self.hi + 1)

    def describe(self, dim: int) -> str:
        return f"spacetime 0..{dim - 1}" if self.spacetime else f"{self.lo}..{self.hi}"


@dataclass
class FieldDecl:
    name: str
    slots: tuple[IndexKind, ...]
    parity: int
    ghost: int
    role: str
    components: dict = field(default_factory=dict)


@dataclass
class TensorDecl:
    name: str
    slots: tuple[IndexKind, ...]
    entries: dict


@dataclass
class Macro:
    name: str
    formals: tuple[str, ...]
    value: "Indexed"


@dataclass
class Context:
    """Symbol table for elaboration."""

    space: JetSpace = field(default_factory=JetSpace)
    indices: dict[str, IndexKind] = field(default_factory=dict)
    fields: dict[str, FieldDecl] = field(default_factory=dict)
    parameters: dict[str, GradedVariable] = field(default_factory=dict)
    tensors: dict[str, TensorDecl] = field(default_factory=dict)
    macros: dict[str, Macro] = field(default_factory=dict)
    variables: dict[str, GradedVariable] = field(default_factory=dict)
    registry_fallback: bool = True

    def declare_field(self, name: str, slot_names, parity: int, ghost: int, role: str) -> FieldDecl:
        slots = tuple(self.index_kind(s) for s in slot_names)
        decl = FieldDecl(name, slots, parity, ghost, role)
        ranges = [k.values(self.space.dim) for k in slots]
        for comps in product(*ranges):
            var = component(name, comps, parity, ghost, 0, role)
            component_antifield(var)
            decl.components[comps] = var
        self.fields[name] = decl
        return decl

    def index_kind(self, name: str) -> IndexKind:
        try:
            return self.indices[name]
        except KeyError:
            raise UnknownSymbol(f"undeclared index {name!r}") from None

    def all_components(self) -> list[GradedVariable]:
        out: list[GradedVariable] = []
        for decl in self.fields.values():
            out.extend(decl.components[k] for k in sorted(decl.components))
        return out


# ---------------------------------------------------------------------------
# elaboration


@dataclass
class Indexed:
    """Values of an expression over assignments of its free indices."""

    names: tuple[str, ...]
    kinds: dict[str, IndexKind]
    positions: dict[str, str]
    table: dict[tuple[int, ...], Polynomial]

    @staticmethod
    def scalar(p: Polynomial) -> "Indexed":
        return Indexed((), {}, {}, {(): p})

    def get(self, assignment: dict[str, int]) -> Polynomial:
        key = tuple(assignment[n] for n in self.names)
        return self.table.get(key, Polynomial())

    def is_scalar(self) -> bool:
        return not self.names


class _Elaborator:
    def __init__(self, ctx: Context, text: str, line_base: int):
        self.ctx = ctx
        self.text = text
        self.line_base = line_base

    def where(self, offset: int) -> tuple[int, int]:
        return _position(self.text, offset, self.line_base)

    def fail(self, cls, message: str, offset: int):
        line, col = self.where(offset)
        raise cls(message, line, col)

    # metric weight for contracting a repeated index
    def weight(self, kind: IndexKind, pos_a: str, pos_b: str, value: int):
        if not kind.spacetime:
            return 1
        if pos_a == "d" and pos_b == "d":
            return self.ctx.space.eta_inverse(value)
        if pos_a == "u" and pos_b == "u":
            return self.ctx.space.eta(value)
        return 1

    def run(self, node) -> Indexed:
        method = getattr(self, "_" + type(node).__name__)
        return method(node)

    # leaves ------------------------------------------------------------
    def _Num(self, node: Num) -> Indexed:
        return Indexed.scalar(Polynomial.constant(node.value))

    def _Imag(self, node: Imag) -> Indexed:
        return Indexed.scalar(Polynomial.constant(IMAG))

    def _slot_values(self, idx: Index, kind: IndexKind) -> None:
        dim = self.ctx.space.dim
        if idx.value is not None:
            if idx.value not in kind.values(dim):
                self.fail(IndexRangeMismatch, f"index value {idx.value} outside {kind.describe(dim)}", idx.offset)
        else:
            declared = self.ctx.indices.get(idx.name)
            if declared is None:
                self.fail(UnknownSymbol, f"undeclared index {idx.name!r}", idx.offset)
            if declared != kind:
                self.fail(
                    IndexRangeMismatch,
                    f"index {idx.name!r} ranges over {declared.describe(dim)} but the slot needs {kind.describe(dim)}",
                    idx.offset,
                )

    def _from_slots(self, node: Sym, slots, positions, lookup) -> Indexed:
        indices = node.indices or ()
        if len(indices) != len(slots):
            self.fail(IndexRangeMismatch, f"{node.name} takes {len(slots)} indices, got {len(indices)}", node.offset)
        for idx, kind in zip(indices, slots):
            self._slot_values(idx, kind)
        dim = self.ctx.space.dim
        names: list[str] = []
        kinds: dict[str, IndexKind] = {}
        pos: dict[str, str] = {}
        slot_of: dict[str, list[int]] = {}
        for k, idx in enumerate(indices):
            if idx.name is None:
                continue
            slot_of.setdefault(idx.name, []).append(k)
        for name, where in slot_of.items():
            if len(where) > 2:
                self.fail(IndexRangeMismatch, f"index {name!r} repeated more than twice", node.offset)
        free = [n for n, w in slot_of.items() if len(w) == 1]
        contracted = [n for n, w in slot_of.items() if len(w) == 2]
        names = sorted(free)
        for n in names:
            kinds[n] = slots[slot_of[n][0]]
            pos[n] = positions[slot_of[n][0]]
        table: dict = {}
        free_ranges = [kinds[n].values(dim) for n in names]
        con_ranges = [slots[slot_of[n][0]].values(dim) for n in contracted]
        for fvals in product(*free_ranges):
            assign = dict(zip(names, fvals))
            pieces = []
            for cvals in product(*con_ranges):
                full = dict(assign)
                weight = mpq(1)
                for n, v in zip(contracted, cvals):
                    full[n] = v
                    a, b = slot_of[n]
                    weight *= self.weight(slots[a], positions[a], positions[b], v)
                comps = tuple(idx.value if idx.name is None else full[idx.name] for idx in indices)
                val = lookup(comps)
                if val:
                    pieces.append(val.scale(weight))
            table[fvals] = poly_sum(pieces)
        return Indexed(tuple(names), kinds, pos, table)

    def _Sym(self, node: Sym) -> Indexed:
        ctx = self.ctx
        if node.antifield:
            decl = ctx.fields.get(node.name)
            if decl is None:
                return self._fallback(node)
            positions = ["u" if k.spacetime else "n" for k in decl.slots]
            return self._from_slots(
                node, decl.slots, positions, lambda comps: Polynomial.var(component_antifield(decl.components[comps]))
            )
        if node.name in ctx.fields:
            decl = ctx.fields[node.name]
            positions = ["d" if k.spacetime else "n" for k in decl.slots]
            return self._from_slots(node, decl.slots, positions, lambda comps: Polynomial.var(decl.components[comps]))
        if node.name in ctx.tensors:
            t = ctx.tensors[node.name]
            positions = ["d" if k.spacetime else "n" for k in t.slots]
            return self._from_slots(node, t.slots, positions, lambda comps: Polynomial.constant(t.entries.get(comps, 0)))
        if node.name in ctx.macros:
            return self._macro(node, ctx.macros[node.name])
        if node.name in ctx.parameters:
            if node.indices:
                self.fail(IndexRangeMismatch, f"parameter {node.name} takes no indices", node.offset)
            return Indexed.scalar(Polynomial.var(ctx.parameters[node.name]))
        return self._fallback(node)

    def _fallback(self, node: Sym) -> Indexed:
        """Concrete registry lookup, used for printed components."""
        if all(i.name is None for i in node.indices or ()):
            base = f"af({node.name})" if node.antifield else node.name
            text = base if node.indices is None else f"{base}[{','.join(str(i.value) for i in node.indices)}]"
            var = self.ctx.variables.get(text)
            if var is not None:
                return Indexed.scalar(Polynomial.var(var))
        if self.ctx.registry_fallback and all(i.name is None for i in node.indices or ()):
            var = registry.by_name.get(text)
            if var is not None and not var.derivs:
                return Indexed.scalar(Polynomial.var(var))
        label = f"af({node.name})" if node.antifield else node.name
        self.fail(UnknownSymbol, f"unknown symbol {label!r}", node.offset)

    def _macro(self, node: Sym, macro: Macro) -> Indexed:
        indices = node.indices or ()
        if len(indices) != len(macro.formals):
            self.fail(IndexRangeMismatch, f"{node.name} takes {len(macro.formals)} indices, got {len(indices)}", node.offset)
        body = macro.value
        slots = tuple(body.kinds[f] for f in macro.formals)
        positions = [body.positions[f] for f in macro.formals]

        def lookup(comps):
            return body.get(dict(zip(macro.formals, comps)))

        return self._from_slots(node, slots, positions, lookup)

    # composite ---------------------------------------------------------
    def _Neg(self, node: Neg) -> Indexed:
        v = self.run(node.body)
        return Indexed(v.names, v.kinds, v.positions, {k: -p for k, p in v.table.items()})

    def _Pow(self, node: Pow) -> Indexed:
        v = self.run(node.base)
        if not v.is_scalar():
            self.fail(IndexRangeMismatch, "only index-free expressions can be raised to a power", node.offset)
        return Indexed.scalar(v.table[()] ** node.exponent)

    def _BinOp(self, node: BinOp) -> Indexed:
        left = self.run(node.left)
        right = self.run(node.right)
        if node.op in "+-":
            return self._add(left, right, node.op == "-", node.offset)
        if node.op == "*":
            return self._mul(left, right, node.offset)
        return self._div(left, right, node.offset)

    def _add(self, a: Indexed, b: Indexed, negate: bool, offset: int) -> Indexed:
        if set(a.names) != set(b.names):
            self.fail(
                IndexRangeMismatch,
                f"terms have different free indices {sorted(a.names)} and {sorted(b.names)}",
                offset,
            )
        for n in a.names:
            if a.kinds[n] != b.kinds[n] or a.positions[n] != b.positions[n]:
                self.fail(IndexRangeMismatch, f"index {n!r} used inconsistently across terms", offset)
        table = {}
        for key in set(a.table) | set(b.table):
            pa = a.table.get(key, Polynomial())
            pb = b.table.get(key, Polynomial())
            table[key] = pa - pb if negate else pa + pb
        return Indexed(a.names, a.kinds, a.positions, table)

    def _mul(self, a: Indexed, b: Indexed, offset: int) -> Indexed:
        common = sorted(set(a.names) & set(b.names))
        for n in common:
            if a.kinds[n] != b.kinds[n]:
                self.fail(IndexRangeMismatch, f"contracted index {n!r} has different ranges", offset)
        names = tuple(sorted((set(a.names) | set(b.names)) - set(common)))
        kinds = {n: (a.kinds.get(n) or b.kinds[n]) for n in names}
        positions = {n: (a.positions.get(n) or b.positions[n]) for n in names}
        groups: dict[tuple, list] = {}
        for key, p in b.table.items():
            if not p:
                continue
            assign = dict(zip(b.names, key))
            groups.setdefault(tuple(assign[n] for n in common), []).append((assign, p))
        acc: dict[tuple, list[Polynomial]] = {}
        for key, p in a.table.items():
            if not p:
                continue
            assign_a = dict(zip(a.names, key))
            ckey = tuple(assign_a[n] for n in common)
            weight = mpq(1)
            for n, v in zip(common, ckey):
                weight *= self.weight(a.kinds[n], a.positions[n], b.positions[n], v)
            for assign_b, q in groups.get(ckey, ()):
                full = {**assign_a, **assign_b}
                out_key = tuple(full[n] for n in names)
                acc.setdefault(out_key, []).append((p * q).scale(weight))
        table = {k: poly_sum(v) for k, v in acc.items()}
        return Indexed(names, kinds, positions, table)

    def _div(self, a: Indexed, b: Indexed, offset: int) -> Indexed:
        if not b.is_scalar() or not b.table[()].is_constant() or not b.table[()]:
            self.fail(DSLError, "division is only by nonzero constants", offset)
        c = b.table[()].constant_term()
        return Indexed(a.names, a.kinds, a.positions, {k: p.scale(1 / c) for k, p in a.table.items()})

    def _Deriv(self, node: Deriv) -> Indexed:
        cur = self.run(node.body)
        dim = self.ctx.space.dim
        st = IndexKind(True)
        for idx in node.directions:
            self._slot_values(idx, st)
            if idx.name is None:
                cur = Indexed(
                    cur.names,
                    cur.kinds,
                    cur.positions,
                    {k: total_derivative_poly(p, idx.value) for k, p in cur.table.items()},
                )
                continue
            if idx.name in cur.names:
                if cur.kinds[idx.name] != st:
                    self.fail(IndexRangeMismatch, f"{idx.name!r} is not a spacetime index", idx.offset)
                k = cur.names.index(idx.name)
                names = cur.names[:k] + cur.names[k + 1 :]
                acc: dict = {}
                for key, p in cur.table.items():
                    mu = key[k]
                    w = self.weight(st, cur.positions[idx.name], "d", mu)
                    acc.setdefault(key[:k] + key[k + 1 :], []).append(total_derivative_poly(p, mu).scale(w))
                kinds = {n: cur.kinds[n] for n in names}
                positions = {n: cur.positions[n] for n in names}
                cur = Indexed(names, kinds, positions, {kk: poly_sum(v) for kk, v in acc.items()})
            else:
                names = tuple(sorted(cur.names + (idx.name,)))
                kinds = dict(cur.kinds)
                kinds[idx.name] = st
                positions = dict(cur.positions)
                positions[idx.name] = "d"
                table = {}
                for key, p in cur.table.items():
                    assign = dict(zip(cur.names, key))
                    for mu in range(dim):
                        full = dict(assign)
                        full[idx.name] = mu
                        table[tuple(full[n] for n in names)] = total_derivative_poly(p, mu)
                cur = Indexed(names, kinds, positions, table)
        return cur


def elaborate(node, ctx: Context, text: str = "", line_base: int = 1) -> Indexed:
    return _Elaborator(ctx, text, line_base).run(node)


def parse_expression(text: str, ctx: Context | None = None, line_base: int = 1) -> Polynomial:
    """Parse and elaborate an index-free expression to a polynomial."""
    ctx = ctx if ctx is not None else Context()
    node = parse(text, line_base)
    value = elaborate(node, ctx, text, line_base)
    if not value.is_scalar():
        line, col = _position(text, 0, line_base)
        raise IndexRangeMismatch(f"free indices {list(value.names)} left unsummed", line, col)
    return value.table.get((), Polynomial())


def mode_context(system) -> Context:
    """Context in which the modes of a system and their antifields are
    spelled ``LABEL`` and ``af(LABEL)``."""
    ctx = Context(registry_fallback=False)
    for m, af in zip(system.modes, system.antifields):
        ctx.variables[m.text] = m
        ctx.variables[af.text] = af
    return ctx


def to_text(p: Polynomial) -> str:
    """Printer whose output :func:`parse_expression` reads back exactly."""
    return p.to_text()

