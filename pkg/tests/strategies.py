"""Hypothesis strategies for graded polynomials over a small fixed alphabet."""

from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from bvlab.expr.coefficients import I, as_coefficient
from bvlab.expr.polynomial import Polynomial, poly_sum
from bvlab.expr.variables import declare

EVEN = [declare(f"ts_x{i}", 0) for i in range(3)]
ODD = [declare(f"ts_t{i}", 1, ghost=1) for i in range(3)]
ALPHABET = EVEN + ODD

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=4)


def _coefficient(frac: Fraction, imaginary: bool):
    c = as_coefficient(f"{frac.numerator}/{frac.denominator}")
    return I * c if imaginary else c


@st.composite
def monomial_words(draw, parity: int | None = None, max_len: int = 4):
    word = draw(st.lists(st.sampled_from(ALPHABET), min_size=0, max_size=max_len))
    if parity is not None and sum(v.parity for v in word) % 2 != parity:
        odd_pick = draw(st.sampled_from(ODD))
        word = word + [odd_pick]
    return word


@st.composite
def polynomials(draw, parity: int | None = None, max_terms: int = 4, complex_coefficients: bool = False):
    """A polynomial; homogeneous in parity when ``parity`` is given."""
    pieces = []
    for _ in range(draw(st.integers(0, max_terms))):
        word = draw(monomial_words(parity))
        c = _coefficient(draw(rationals), complex_coefficients and draw(st.booleans()))
        pieces.append(Polynomial.product(word, c))
    return poly_sum(pieces)


parities = st.integers(0, 1)


# ---------------------------------------------------------------------------
# random local functionals over a two-field jet space


def two_field_alphabet():
    """Jets (order <= 1, d = 2) of an even field, an odd ghost and their antifields."""
    from bvlab.local import component, component_antifield, jet

    phi = component("rf_phi", (), 0, 0)
    gh = component("rf_c", (), 1, 1, 0, "ghost")
    roots = [phi, gh, component_antifield(phi), component_antifield(gh)]
    letters = [jet(r, mus) for r in roots for mus in [(), (0,), (1,)]]
    return roots, letters


def random_functional(rng, letters, parity=None, max_terms=3, max_degree=3):
    """A random density of homogeneous parity (drawn when not given)."""
    if parity is None:
        parity = rng.randint(0, 1)
    pieces = []
    for _ in range(rng.randint(1, max_terms)):
        for _attempt in range(20):
            word = [rng.choice(letters) for _ in range(rng.randint(1, max_degree))]
            if sum(v.parity for v in word) % 2 == parity:
                pieces.append(Polynomial.product(word, rng.randint(-3, 3) or 1))
                break
    return poly_sum(pieces), parity
