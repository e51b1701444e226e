import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvlab.expr import (
    I,
    MIXED,
    HbarSeries,
    MixedGrading,
    NegativeHbarDetected,
    Polynomial,
    declare,
    deriv_left,
    deriv_right,
    series_sum,
)
from bvlab.expr.variables import GradingConflict, antifield_of

from oracles import from_package, grassmann_left_derivative, grassmann_mul
from strategies import ALPHABET, EVEN, ODD, parities, polynomials

X, Y = EVEN[0], EVEN[1]
T1, T2 = ODD[0], ODD[1]
x, y = Polynomial.var(X), Polynomial.var(Y)
t1, t2 = Polynomial.var(T1), Polynomial.var(T2)


def sign_of(a: int, b: int) -> int:
    return -1 if (a and b) else 1


# --- worked examples ------------------------------------------------------


def test_odd_square_vanishes():
    assert t1 * t1 == Polynomial()
    assert Polynomial.product([T1, X, T1]) == Polynomial()


def test_odd_variables_anticommute():
    assert t1 * t2 == -(t2 * t1)
    assert Polynomial.product([T2, T1]) == -Polynomial.product([T1, T2])


def test_mixed_product_hand_expansion():
    # (x + t1 t2) x = x^2 + t1 t2 x, with the odd pair kept in canonical order
    lhs = (x + t1 * t2) * x
    assert lhs == x * x + Polynomial.product([T1, T2, X])
    assert lhs == x**2 + Polynomial.product([X, T2, T1], -1)


def test_derivative_examples():
    assert deriv_left(t1 * t2, T1) == t2
    assert deriv_right(t1 * t2, T1) == -t2
    assert deriv_left(x**3, X) == 3 * x**2


def test_grading_examples():
    c = declare("te_c", 1, ghost=1, role="ghost")
    cbar = declare("te_cbar", 1, ghost=-1, role="antighost")
    phi = declare("te_phi", 0)
    phi_af = antifield_of(phi)
    assert (Polynomial.var(c) * Polynomial.var(cbar)).grading() == (0, 0, 0)
    assert Polynomial.var(phi_af).grading() == (1, -1, 1)
    assert (Polynomial.var(phi) + Polynomial.var(c)).grading() is MIXED
    with pytest.raises(MixedGrading):
        (Polynomial.var(phi) + Polynomial.var(c)).parity()


def test_redeclaration_with_other_grading_is_rejected():
    declare("te_clash", 0)
    with pytest.raises(GradingConflict):
        declare("te_clash", 1)


def test_substitution_respects_order():
    # t1 t2 with t1 -> t3 is t3 t2 = -t2 t3
    t3 = Polynomial.var(ODD[2])
    assert (t1 * t2).substitute({T1: t3}) == -(t2 * t3)
    assert (t1 * t2).substitute({T1: t2}) == Polynomial()
    assert (x * y).substitute({X: y}) == y**2


def test_text_rendering_is_stable():
    p = 3 * x * y - Polynomial.constant("1/2") + (I * 2) * t1 * t2
    assert p.to_text() == p.to_text()
    assert Polynomial().to_text() == "0"


# --- properties -------------------------------------------------------------


@settings(max_examples=1000)
@given(parities.flatmap(lambda a: st.tuples(st.just(a), polynomials(a))), parities.flatmap(lambda b: st.tuples(st.just(b), polynomials(b))))
def test_graded_commutativity(pa, qb):
    a, p = pa
    b, q = qb
    assert p * q == (q * p).scale(sign_of(a, b))


@settings(max_examples=300)
@given(polynomials(), polynomials(), polynomials())
def test_ring_axioms(p, q, r):
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p + q == q + p
    assert p - p == Polynomial()


@settings(max_examples=300)
@given(polynomials(complex_coefficients=True), polynomials(complex_coefficients=True))
def test_product_matches_grassmann_oracle(p, q):
    assert from_package(p * q) == grassmann_mul(from_package(p), from_package(q))


@settings(max_examples=300)
@given(polynomials(), st.sampled_from(ALPHABET))
def test_left_derivative_matches_oracle(p, v):
    letter = (v.text, v.parity)
    assert from_package(deriv_left(p, v)) == grassmann_left_derivative(from_package(p), letter)


@settings(max_examples=500)
@given(parities.flatmap(lambda a: st.tuples(st.just(a), polynomials(a))), polynomials(), st.sampled_from(ALPHABET))
def test_leibniz_rule(pa, q, v):
    a, p = pa
    lhs = deriv_left(p * q, v)
    rhs = deriv_left(p, v) * q + (p * deriv_left(q, v)).scale(sign_of(v.parity, a))
    assert lhs == rhs


@settings(max_examples=500)
@given(parities.flatmap(lambda a: st.tuples(st.just(a), polynomials(a))), st.sampled_from(ALPHABET))
def test_left_right_exchange(pa, v):
    a, p = pa
    # d_R F / dv = (-1)^{v (F + 1)} d_L F / dv
    sign = sign_of(v.parity, (a + 1) % 2)
    assert deriv_right(p, v) == deriv_left(p, v).scale(sign)


@settings(max_examples=300)
@given(polynomials(), st.sampled_from(ALPHABET), st.sampled_from(ALPHABET))
def test_second_derivatives_graded_commute(p, u, v):
    lhs = deriv_left(deriv_left(p, u), v)
    rhs = deriv_left(deriv_left(p, v), u).scale(sign_of(u.parity, v.parity))
    assert lhs == rhs


# --- hbar series ------------------------------------------------------------


series_strategy = st.dictionaries(st.integers(0, 5), polynomials(0, max_terms=2), max_size=3)


@settings(max_examples=200)
@given(series_strategy, series_strategy, series_strategy)
def test_series_ring_axioms_mod_truncation(a, b, c):
    sa, sb, sc = (HbarSeries(d, 4) for d in (a, b, c))
    assert (sa * sb) * sc == sa * (sb * sc)
    assert sa * (sb + sc) == sa * sb + sa * sc
    assert sa * sb == sb * sa  # even coefficients commute


@given(polynomials(0), polynomials(0))
def test_classical_times_classical_is_classical(p, q):
    s = HbarSeries.classical(p, 3) * HbarSeries.classical(q, 3)
    assert s.is_classical() and s[0] == p * q


def test_series_truncation_and_shift():
    s = HbarSeries({0: x, 2: y, 5: x * y}, 3)
    assert 5 not in s.coeffs
    assert s.shift(1)[3] == y and s.shift(1).order == 3
    assert series_sum([s, -s], 3).is_zero()
    with pytest.raises(NegativeHbarDetected):
        HbarSeries({-1: x}, 3).check_nonnegative()
