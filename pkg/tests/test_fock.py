import random
from math import factorial

import pytest
import sympy
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from bvlab.expr import I, HbarSeries, Polynomial, poly_sum
from bvlab.expr.variables import parameter
from bvlab.fock import FockAlgebra, connected, connected_by_partitions, interacting, retarded
from bvlab.fock.modes import ModeSystemError, parse_modes, random_mode_system
from bvlab.fock.rcl import (
    factorisation_residual,
    field_independence_residual,
    glz_residual,
    linear_argument_residual,
    linearity_residual,
    rcl,
)
from bvlab.fock.ward import (
    GeneratorDerivation,
    InnerDerivation,
    NonQuadraticQ,
    classical_second_order,
    consistency_check,
    free_brst_ward,
    pa_check,
    ward_extract,
    ward_identity_residual,
)

from conftest import modes_expr
from oracles import retarded_solution_products, to_sympy_series, wick_product

randoms = st.randoms(use_true_random=False)


def bosonic_system(rnd, n_modes=2):
    return random_mode_system(rnd, n_modes, 0, name="bos", label_prefix="fb")


def random_poly(rnd, system, parity=0, max_degree=3, terms=3):
    modes = list(system.modes)
    pieces = []
    for _ in range(terms):
        for _attempt in range(20):
            word = [rnd.choice(modes) for _ in range(rnd.randint(1, max_degree))]
            if sum(v.parity for v in word) % 2 == parity:
                pieces.append(Polynomial.product(word, rnd.randint(-3, 3) or 1))
                break
    return poly_sum(pieces)


def symbols_for(system):
    return {m.text: sympy.Symbol(m.text) for m in system.modes}


def rational_matrix(matrix):
    return [[sympy.Rational(str(c)) for c in row] for row in matrix]


def kernels_from_scratch(system):
    """Feynman and Wightman-type kernels rebuilt from Gret and W alone."""
    gret, w = rational_matrix(system.gret), rational_matrix(system.w)
    n = len(gret)
    gadv = [[gret[b][a] for b in range(n)] for a in range(n)]
    delta = [[gret[a][b] - gadv[a][b] for b in range(n)] for a in range(n)]
    gplus = [[delta[a][b] / 2 + w[a][b] for b in range(n)] for a in range(n)]
    gfeyn = [[gplus[a][b] + gadv[a][b] for b in range(n)] for a in range(n)]
    return gplus, gfeyn


# --- products against the Wick oracle ---------------------------------------------


@settings(max_examples=60)
@given(randoms)
def test_star_and_time_ordered_products_match_wick_expansion(rnd):
    system = bosonic_system(rnd, rnd.randint(1, 3))
    syms = symbols_for(system)
    ordered = [syms[m.text] for m in system.modes]
    gplus, gfeyn = kernels_from_scratch(system)
    f, g = random_poly(rnd, system), random_poly(rnd, system)
    fs, gs = to_sympy_series(f, syms), to_sympy_series(g, syms)
    alg = FockAlgebra(system)
    assert sympy.expand(to_sympy_series(alg.star(f, g), syms) - wick_product(fs, gs, ordered, gplus)) == 0
    assert sympy.expand(to_sympy_series(alg.tprod(f, g), syms) - wick_product(fs, gs, ordered, gfeyn)) == 0


def test_square_of_square_on_oscillator(oscillator):
    # x^2 * x^2 = x^4 + 2 i hbar x^2 - hbar^2 / 2 with Gplus_xx = 1/2
    x = modes_expr(oscillator, "x")
    out = FockAlgebra(oscillator).star(x * x, x * x)
    expected = HbarSeries({0: x**4, 1: (x * x).scale(I * 2), 2: Polynomial.constant("-1/2")}, None)
    assert out == expected


def test_canonical_commutator(oscillator):
    x, p = modes_expr(oscillator, "x"), modes_expr(oscillator, "p")
    com = FockAlgebra(oscillator).commutator(x, p)
    assert com == HbarSeries({1: Polynomial.constant(I)}, None)
    assert FockAlgebra(oscillator).poisson(x, p) == Polynomial.one()


@settings(max_examples=40)
@given(randoms)
def test_star_product_is_associative_with_fermions(rnd):
    system = random_mode_system(rnd, 3, 1, name="mix", label_prefix="fm")
    alg = FockAlgebra(system)
    a, b, c = (random_poly(rnd, system, parity=rnd.randint(0, 1), terms=2) for _ in range(3))
    assert alg.star(alg.star(a, b), c) == alg.star(a, alg.star(b, c))
    assert alg.tprod(a, b) == alg.tprod(b, a).scale(-1 if a.parity() and b.parity() else 1)


def test_invalid_mode_file_is_rejected():
    with pytest.raises(ModeSystemError):
        parse_modes("system bad\nmode x even\nmode t odd\nmatrix Gret\n 0 1\n 0 0\nmatrix W\n 0 0\n 0 0\n")


# --- connected and interacting products ---------------------------------------------


@settings(max_examples=25)
@given(randoms)
def test_connected_products_two_routes(rnd):
    system = bosonic_system(rnd)
    f = random_poly(rnd, system, terms=2)
    by_log = connected(system, f, 3, order=6)
    assert by_log[0] == HbarSeries.classical(f, 6)
    for n in (2, 3):
        assert by_log[n - 1] == connected_by_partitions(system, f, n, order=6)
        by_log[n - 1].check_nonnegative()
    # one advanced line at tree level
    assert by_log[1][0] == -FockAlgebra(system).pairing(f, f, "gadv")


@settings(max_examples=25)
@given(randoms)
def test_interacting_classical_limit_is_retarded_sum(rnd):
    system = bosonic_system(rnd)
    coupling = parameter("tf_g")
    lagr = Polynomial.var(coupling) * random_poly(rnd, system, terms=2)
    g = random_poly(rnd, system, terms=2)
    out = interacting(system, lagr, g, 1, coupling, 3)
    expected = poly_sum(rcl(system, n, lagr, g).scale(mpq(1, factorial(n))) for n in range(4))
    assert out[0][0] == expected


# --- classical retarded products ---------------------------------------------------


@settings(max_examples=40)
@given(randoms)
def test_retarded_products_match_perturbed_solution(rnd):
    system = bosonic_system(rnd, rnd.randint(1, 3))
    syms = symbols_for(system)
    ordered = [syms[m.text] for m in system.modes]
    f, g = random_poly(rnd, system, terms=2), random_poly(rnd, system, terms=2)
    oracle = retarded_solution_products(to_sympy_series(f, syms), to_sympy_series(g, syms), ordered, rational_matrix(system.gret), 3)
    for n in range(4):
        assert sympy.expand(to_sympy_series(rcl(system, n, f, g), syms) - oracle[n]) == 0


@settings(max_examples=20)
@given(randoms)
def test_quantum_retarded_products_reduce_to_classical(rnd):
    system = random_mode_system(rnd, 3, 1, name="mix", label_prefix="fm")
    f = random_poly(rnd, system, terms=2)
    g = random_poly(rnd, system, parity=rnd.randint(0, 1), terms=2)
    quantum = retarded(system, f, g, 3)
    for n in range(4):
        quantum[n].check_nonnegative()
        assert quantum[n][0] == rcl(system, n, f, g)


@settings(max_examples=30)
@given(randoms)
def test_retarded_product_structure(rnd):
    system = random_mode_system(rnd, 3, 1, name="mix", label_prefix="fm")
    f = random_poly(rnd, system, terms=2)
    g = random_poly(rnd, system, parity=rnd.randint(0, 1), terms=2)
    h = random_poly(rnd, system, parity=rnd.randint(0, 1), terms=2)
    linear = poly_sum(Polynomial.var(m).scale(rnd.randint(1, 3)) for m in system.modes if not m.parity)
    for n in range(3):
        assert linearity_residual(system, n, f, g, g) == Polynomial()
        assert factorisation_residual(system, n, f, g, h) == Polynomial()
        assert all(r == Polynomial() for r in field_independence_residual(system, n, f, g))
        assert glz_residual(system, n, f, g, h) == Polynomial()
        assert linear_argument_residual(system, n, f, linear) == Polynomial()


def test_linear_relation_rejects_nonlinear_argument(pair_system):
    q = modes_expr(pair_system, "q")
    with pytest.raises(ValueError):
        linear_argument_residual(pair_system, 1, q * q, q * q)


# --- anomalous Ward identity -----------------------------------------------------


def test_inner_derivation_ward_tables(oscillator):
    q = modes_expr(oscillator, "x^2 + p^2")
    der = InnerDerivation(oscillator, q)
    for text in ("x^2", "x*p", "x^3 + p", "x^2*p^2"):
        f = modes_expr(oscillator, text)
        tables = ward_extract(der, f, max_n=4, order=6)
        assert tables.classical[1] == der.classical(f)
        kernel_form, retarded_form = classical_second_order(der, f)
        assert tables.classical[2] == kernel_form == retarded_form
        assert tables.classical[3] == Polynomial() and tables.classical[4] == Polynomial()
        for n in (1, 2, 3):
            assert ward_identity_residual(der, f, tables, n).is_zero()
        recursion = ward_extract(der, f, max_n=4, order=6, method="recursion")
        assert recursion.full == tables.full


def test_inner_derivation_needs_quadratic_generator(oscillator):
    with pytest.raises(NonQuadraticQ):
        InnerDerivation(oscillator, modes_expr(oscillator, "x^3"))


def test_generator_derivation_tables(kt_toy):
    gen = kt_toy.free_action()
    der = GeneratorDerivation(kt_toy, gen)
    f = modes_expr(kt_toy, "A^2 + c*cbar")
    tables = ward_extract(der, f, max_n=3, order=4)
    assert tables.classical[1] == der.classical(f)
    kernel_form, retarded_form = classical_second_order(der, f)
    assert tables.classical[2] == kernel_form == retarded_form
    for n in (1, 2, 3):
        assert ward_identity_residual(der, f, tables, n).is_zero()


@pytest.mark.parametrize("text", ["A^2", "A*B + c*cbar", "A^3*cbar*c", "A*af(A)*c + B^2"])
def test_free_brst_ward(kt_toy, text):
    report = free_brst_ward(kt_toy, modes_expr(kt_toy, text), order=6)
    assert set(report) == {"koszul-tate", "s0", "s1"}
    for name, row in report.items():
        assert row["passed"], (name, row["residual"])


@pytest.mark.parametrize("label", ["x", "p"])
def test_perturbative_agreement(oscillator, label):
    f = modes_expr(oscillator, "x^2*p + p^3")
    for n in (1, 2, 3):
        assert pa_check(oscillator, f, n, label)["passed"]


@pytest.mark.parametrize("layer", ["koszul-tate", "full"])
def test_anomaly_consistency(kt_toy, layer):
    out = consistency_check(kt_toy, modes_expr(kt_toy, "A^2 + A*c*cbar"), max_n=3, order=6, layer=layer)
    assert out["passed"]
    assert all(HbarSeries.is_zero(v) if isinstance(v, HbarSeries) else not v for v in out["by_order"].values())


def test_no_negative_hbar_powers_in_products(pair_system):
    f = modes_expr(pair_system, "q^2*p + psi*chi*q")
    for s in connected(pair_system, f, 4, order=6):
        s.check_nonnegative()
    assert all(k >= 0 for s in retarded(pair_system, f, f, 3) for k in s.coeffs)
