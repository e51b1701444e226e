import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvlab.bv import check_master_equation
from bvlab.cli.dsl import (
    DSLSyntaxError,
    IndexRangeMismatch,
    UnknownSymbol,
    parse_expression,
    to_text,
)
from bvlab.cli.theoryfile import load_theory, parse_theory
from bvlab.expr import I, Polynomial
from bvlab.expr.coefficients import as_coefficient
from bvlab.local import component_antifield, jet

from conftest import data_file
from strategies import rationals

YM = load_theory(data_file("yang-mills-su2-d2.thy"))
SCALAR = load_theory(data_file("scalar.thy"))


def _letters():
    comps = YM.context.all_components()
    roots = comps + [component_antifield(c) for c in comps]
    out = []
    for r in roots:
        out.append(r)
        out.extend(jet(r, mus) for mus in [(0,), (1,), (0, 1), (1, 1, 1)])
    return out + list(YM.context.parameters.values())


LETTERS = _letters()


@st.composite
def ym_polynomials(draw, max_terms=4):
    pieces = []
    for _ in range(draw(st.integers(0, max_terms))):
        word = draw(st.lists(st.sampled_from(LETTERS), min_size=0, max_size=4))
        frac = draw(rationals)
        c = as_coefficient(f"{frac.numerator}/{frac.denominator}")
        if draw(st.booleans()):
            c = I * c
        pieces.append(Polynomial.product(word, c))
    out = Polynomial()
    for p in pieces:
        out = out + p
    return out


@settings(max_examples=2000)
@given(ym_polynomials())
def test_print_then_parse_is_identity(p):
    assert parse_expression(to_text(p), YM.context) == p


ATOMS = ["phi", "m", "lam", "d(phi,0)", "d(phi,1,1)", "af(phi)", "d(af(phi),0)", "2", "1/3", "I"]


@st.composite
def expression_texts(draw, depth=3):
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        return draw(st.sampled_from(ATOMS))
    op = draw(st.sampled_from(["+", "-", "*", "^", "neg", "paren"]))
    left = draw(expression_texts(depth=depth - 1))
    if op == "^":
        return f"({left})^{draw(st.integers(0, 3))}"
    if op == "neg":
        return f"-({left})"
    if op == "paren":
        return f"({left})"
    right = draw(expression_texts(depth=depth - 1))
    return f"{left} {op} {right}"


@settings(max_examples=1000)
@given(expression_texts())
def test_parse_print_parse_is_stable(text):
    p = parse_expression(text, SCALAR.context)
    assert parse_expression(to_text(p), SCALAR.context) == p


def test_scalar_kinetic_density():
    p = parse_expression("d(phi,mu)*d(phi,mu) - m^2*phi^2", SCALAR.context)
    assert to_text(p) == "-d(phi,0)^2 + d(phi,1)^2 - m^2*phi^2"


def test_ghost_self_coupling_density():
    p = parse_expression("f[a,b,c]*c[b]*c[c]*af(c)[a]", YM.context)
    expected = parse_expression("2*c[0]*c[1]*af(c)[2] - 2*c[0]*af(c)[1]*c[2] + 2*af(c)[0]*c[1]*c[2]", YM.context)
    assert p == expected


def test_syntax_error_position():
    with pytest.raises(DSLSyntaxError) as info:
        parse_expression("phi +", SCALAR.context)
    assert (info.value.line, info.value.column) == (1, 6)
    assert isinstance(info.value, SyntaxError)


def test_unknown_symbol_and_index_errors():
    with pytest.raises(UnknownSymbol):
        parse_expression("psi*phi", SCALAR.context)
    with pytest.raises(IndexRangeMismatch):
        parse_expression("d(phi,mu)", SCALAR.context)


def test_theory_file_errors_carry_line_numbers():
    source = "theory broken\ndimension 2\nspacetime mu\nfield phi parity=0 ghost=0 role=field\naction = phi *\n"
    with pytest.raises(DSLSyntaxError) as info:
        parse_theory(source)
    assert info.value.line == 5


def test_yang_mills_file_reparses_to_a_solution():
    reparsed = parse_theory(data_file("yang-mills-su2-d2.thy").read_text())
    assert reparsed.spec.total.poly == YM.spec.total.poly
    assert check_master_equation(reparsed.spec).passed
    text = to_text(YM.spec.total.poly)
    assert parse_expression(text, YM.context) == YM.spec.total.poly
