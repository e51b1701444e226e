import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from bvlab.expr import Polynomial, poly_sum
from bvlab.local import (
    Density,
    JetOverflow,
    JetSpace,
    LocalFunctional,
    component,
    component_antifield,
    euler_lagrange_poly,
    is_zero_functional,
    jet,
    total_derivative,
    total_derivative_poly,
)

from oracles import sympy_density, sympy_euler_lagrange

SPACE = JetSpace(2, 3)
PHI = component("tl_phi")
PSI = component("tl_psi")
THETA = component("tl_theta", parity=1, ghost=1, role="ghost")


def d(v, *mus):
    return Polynomial.var(jet(v, mus))


phi, psi, theta = Polynomial.var(PHI), Polynomial.var(PSI), Polynomial.var(THETA)

JETS = [jet(f, mus) for f in (PHI, PSI) for mus in [(), (0,), (1,), (0, 0), (0, 1), (1, 1)]]


@st.composite
def bosonic_densities(draw, max_terms=4):
    pieces = []
    for _ in range(draw(st.integers(1, max_terms))):
        word = draw(st.lists(st.sampled_from(JETS), min_size=1, max_size=3))
        c = draw(st.integers(-3, 3).filter(bool))
        pieces.append(Polynomial.product(word, c))
    return poly_sum(pieces)


def test_total_derivative_examples():
    assert total_derivative_poly(phi * phi, 0) == 2 * phi * d(PHI, 0)
    assert total_derivative_poly(theta * phi, 1) == d(THETA, 1) * phi + theta * d(PHI, 1)
    assert total_derivative_poly(Polynomial.one(), 0) == Polynomial()


def test_total_derivative_respects_jet_order():
    with pytest.raises(JetOverflow):
        total_derivative(Density(d(PHI, 0, 0, 1), SPACE), 0)


def test_euler_lagrange_of_free_scalar():
    # L = -1/2 eta^{mu nu} d_mu phi d_nu phi - 1/2 phi^2 with eta = diag(-1, 1)
    lagr = Polynomial.constant("1/2") * d(PHI, 0) ** 2 - Polynomial.constant("1/2") * d(PHI, 1) ** 2 - Polynomial.constant("1/2") * phi**2
    el = euler_lagrange_poly(lagr, PHI)
    assert el == -d(PHI, 0, 0) + d(PHI, 1, 1) - phi


def test_euler_lagrange_of_antifield_term():
    af = component_antifield(PHI)
    assert euler_lagrange_poly(Polynomial.var(af) * phi, af, "L") == phi


def test_zero_functional_examples():
    div = total_derivative_poly(phi * d(PHI, 1), 1) - total_derivative_poly(phi * d(PHI, 0), 0)
    assert is_zero_functional(div).is_zero
    report = is_zero_functional(phi * phi)
    assert not report.is_zero and report.residual[PHI.text] == 2 * phi
    # d_mu phi d^mu phi + phi d^2 phi = d_mu(phi d^mu phi)
    kinetic = -d(PHI, 0) ** 2 + d(PHI, 1) ** 2 - phi * d(PHI, 0, 0) + phi * d(PHI, 1, 1)
    assert is_zero_functional(kinetic).is_zero
    assert not is_zero_functional(Polynomial.constant(3)).is_zero


@settings(max_examples=150)
@given(bosonic_densities(), st.sampled_from([PHI, PSI]))
def test_euler_lagrange_matches_sympy(den, fld):
    expected, funcs, coords = sympy_euler_lagrange(den, fld.text, 2)
    got, _, _ = sympy_density(euler_lagrange_poly(den, fld), 2)
    assert sympy.expand(got - expected) == 0


@settings(max_examples=300)
@given(bosonic_densities(max_terms=3), st.integers(0, 1))
def test_euler_lagrange_kills_divergences(den, mu):
    div = total_derivative_poly(den, mu)
    for fld in (PHI, PSI):
        assert euler_lagrange_poly(div, fld) == Polynomial()
    assert is_zero_functional(div).is_zero


@settings(max_examples=200)
@given(bosonic_densities(), bosonic_densities(max_terms=2), st.integers(0, 1))
def test_zero_test_invariant_under_divergences(den, extra, mu):
    shifted = den + total_derivative_poly(extra, mu)
    assert is_zero_functional(den).is_zero == is_zero_functional(shifted).is_zero
    assert LocalFunctional.of(den, SPACE).equivalent(LocalFunctional.of(shifted, SPACE))


def test_total_derivative_is_a_graded_derivation():
    a = theta * d(PHI, 1)
    b = d(THETA, 0) * psi
    for mu in (0, 1):
        lhs = total_derivative_poly(a * b, mu)
        rhs = total_derivative_poly(a, mu) * b + a * total_derivative_poly(b, mu)
        assert lhs == rhs
