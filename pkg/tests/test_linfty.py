import pytest

from bvlab.cli.dsl import parse_expression
from bvlab.cli.theoryfile import load_theory
from bvlab.expr.coefficients import as_coefficient
from bvlab.expr import I, HbarSeries, Polynomial
from bvlab.fock.modes import direct_sum, mode_sites
from bvlab.homotopy import mode_split
from bvlab.linfty import (
    BracketFamily,
    ObstructionNotClosed,
    check_linfty,
    check_linfty_polarised,
    locality_tags,
    mode_brackets,
    quantum_cohomology_step,
    quantum_homotopy,
    representative_shift,
    solve_contact_terms,
    theory_brackets,
)

from conftest import data_file, modes_expr

EVEN_SAMPLES = ["A^2", "A*B + c*cbar", "A*af(A)*c + A*c*cbar", "B^2*c*cbar"]
ODD_SAMPLES = ["c", "A*cbar", "af(B)*B", "A*c*af(c)"]


def families(system, order=4):
    first = Polynomial.var(system.modes[0])
    return {
        "zero": mode_brackets(system, "zero", order=order),
        "computed": mode_brackets(system, "computed", order=order),
        "transport": mode_brackets(system, "zero", order=order, transport=lambda p: first * p),
    }


@pytest.fixture(scope="module")
def toy_families(kt_toy):
    return families(kt_toy)


# --- reductions ------------------------------------------------------------


def test_zero_anomaly_reduces_to_classical_brackets(kt_toy, toy_families):
    fam = toy_families["zero"]
    f, g = modes_expr(kt_toy, "A^2"), modes_expr(kt_toy, "A*cbar")
    assert fam.bracket(f, g, g).is_zero()
    assert fam.q(f) == HbarSeries.classical(fam.differential(f), fam.order)
    assert fam.quantum_antibracket(f, g) == HbarSeries.classical(fam.antibracket(f, g), fam.order)


def test_computed_anomaly_is_a_quantum_correction(kt_toy, toy_families):
    zero, comp = toy_families["zero"], toy_families["computed"]
    for text in EVEN_SAMPLES + ODD_SAMPLES:
        f = modes_expr(kt_toy, text)
        assert comp.q(f)[0] == zero.q(f)[0]


# --- L-infinity relations -----------------------------------------------------


@pytest.mark.parametrize("kind", ["zero", "computed", "transport"])
@pytest.mark.parametrize("text", EVEN_SAMPLES)
def test_linfty_relations_even(kt_toy, toy_families, kind, text):
    fam = toy_families[kind]
    f = modes_expr(kt_toy, text)
    for n in range(1, 5):
        assert fam.zero_series(check_linfty(fam, n, f)), (kind, text, n)


@pytest.mark.parametrize("kind", ["computed", "transport"])
def test_linfty_relations_polarised(kt_toy, toy_families, kind):
    fam = toy_families[kind]
    fs = [modes_expr(kt_toy, t) for t in ("A^2", "A*cbar", "c")]
    for n in range(1, 4):
        assert fam.zero_series(check_linfty_polarised(fam, n, fs))


@pytest.mark.parametrize("kind", ["zero", "computed", "transport"])
def test_q_squares_to_zero_on_monomials(kt_toy, toy_families, kind):
    fam = toy_families[kind]
    split = mode_split(kt_toy)
    for mono in split.monomials(3, min_degree=1):
        p = split.from_split(mono)
        assert fam.q(fam.q(p)).is_zero()


def test_broken_anomaly_is_detected(kt_toy, toy_families):
    """An ad hoc correction q = q0 + hbar cbar (.) violates q^2 = 0."""
    base = toy_families["zero"]
    cbar = modes_expr(kt_toy, "cbar")

    def bogus(args):
        if len(args) != 1:
            return HbarSeries({}, base.order)
        return args[0].map(lambda p: cbar * p).shift(1)

    bad = BracketFamily(base.differential, base.antibracket, bogus, base.order)
    residual = check_linfty(bad, 1, modes_expr(kt_toy, "A^2"))
    assert not bad.zero_series(residual)
    assert residual[0] == Polynomial() and residual[1] != Polynomial()


@pytest.mark.parametrize("kind", ["zero", "computed", "transport"])
def test_quantum_antibracket_compatibility(kt_toy, toy_families, kind):
    fam = toy_families[kind]
    for a in ("A^2", "A*cbar", "c"):
        for b in ("A*B", "cbar"):
            step = quantum_cohomology_step(fam, modes_expr(kt_toy, a), modes_expr(kt_toy, b))
            assert step["passed"], (a, b, step["compatibility"])


def test_theory_brackets_on_scalar_field():
    tf = load_theory(data_file("scalar.thy"))
    fam = theory_brackets(tf.spec, order=2)
    even = parse_expression("phi^3 + m^2*phi", tf.context)
    odd = parse_expression("phi^2*af(phi) + d(phi,0)*af(phi)", tf.context)
    for n in range(1, 4):
        assert fam.zero_series(check_linfty(fam, n, even))
    assert fam.zero_series(fam.q(fam.q(odd)))


# --- contact terms ---------------------------------------------------------------


@pytest.fixture(scope="module")
def toy_contact(kt_toy):
    fam = mode_brackets(kt_toy, "computed", order=3)
    f = fam.q(modes_expr(kt_toy, "A*c*af(c)"))
    h = quantum_homotopy(fam, mode_split(kt_toy))
    return fam, f, h, solve_contact_terms(fam, f, h, 4)


def test_exact_observable_frozen(kt_toy, toy_contact):
    _fam, f, _h, _terms = toy_contact
    P = lambda t: modes_expr(kt_toy, t)  # noqa: E731
    assert f == HbarSeries({0: P("A*af(A)*c + A*c*cbar"), 1: P("A").scale(I * as_coefficient("1/3"))}, 3)


def test_contact_terms_frozen(kt_toy, toy_contact):
    _fam, _f, _h, terms = toy_contact
    P = lambda t: modes_expr(kt_toy, t)  # noqa: E731
    assert terms[2] == HbarSeries({1: P("A^2").scale(I)}, 3)
    assert terms[3] == HbarSeries({1: P("A^3").scale(I * -2), 2: P("A").scale(-9)}, 3)
    assert terms[4] == HbarSeries({1: P("A^4").scale(I * 6), 2: P("A^2").scale(54)}, 3)


def test_contact_terms_solve_maurer_cartan(toy_contact):
    fam, _f, _h, terms = toy_contact
    for n in range(1, 5):
        assert terms.maurer_cartan_residual(n).is_zero()
    for n in range(2, 5):
        assert fam.zero_series(fam.q(terms[n]) - terms.sources[n])


def test_transported_contact_terms_vanish(kt_toy):
    A = modes_expr(kt_toy, "A")
    fam = mode_brackets(kt_toy, "zero", order=3, transport=lambda p: A * p)
    f = fam.q(modes_expr(kt_toy, "cbar*A"))
    terms = solve_contact_terms(fam, f, quantum_homotopy(fam, mode_split(kt_toy)), 3)
    assert terms[2].is_zero() and terms[3].is_zero()


def test_contact_terms_need_closed_input(kt_toy, toy_contact):
    fam, _f, h, _terms = toy_contact
    with pytest.raises(ObstructionNotClosed):
        solve_contact_terms(fam, modes_expr(kt_toy, "A^2"), h, 2)


@pytest.mark.parametrize("shift", ["A*cbar", "cbar"])
def test_representative_shift(kt_toy, toy_contact, shift):
    fam, f, h, _terms = toy_contact
    out = representative_shift(fam, f, modes_expr(kt_toy, shift), h, 2)
    assert out["passed"]
    for row in out["orders"].values():
        assert row["passed"] and row["identity_after_shift"]


# --- locality ----------------------------------------------------------------------


def test_disjoint_support_brackets_vanish(kt_toy):
    pair = direct_sum({"L": kt_toy, "R": kt_toy}, name="two-sites")
    fam = mode_brackets(pair, "computed", order=3)
    left = Polynomial.var(pair.mode("L.A")) ** 2
    right = Polynomial.var(pair.mode("R.A")) * Polynomial.var(pair.mode("R.B"))
    both = Polynomial.var(pair.mode("L.A")) * Polynomial.var(pair.mode("R.A"))
    basis = [left, right, both]
    tags = locality_tags(mode_sites(pair), basis)
    assert tags == [frozenset({"L"}), frozenset({"R"}), frozenset({"L", "R"})]
    table = fam.table(basis, 2, tags)
    assert (0, 1) not in table
    assert fam.bracket(left, right).is_zero()
