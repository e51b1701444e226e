"""Graded polynomial algebra with exact coefficients and hbar-series."""

from .coefficients import I, Coefficient, GaussianRational, as_coefficient, coefficient_to_str
from .polynomial import (
    MIXED,
    Mixed,
    MixedGrading,
    Polynomial,
    canonical_monomial,
    deriv_left,
    deriv_right,
    grading,
    monomial_factors,
    mul,
    poly_sum,
    substitute,
)
from .series import DEFAULT_HBAR_ORDER, HbarSeries, NegativeHbarDetected, series_sum
from .variables import GradedVariable, GradingConflict, antifield_of, declare, lookup, parameter, registry

__all__ = [
    "DEFAULT_HBAR_ORDER",
    "I",
    "MIXED",
    "Coefficient",
    "GaussianRational",
    "GradedVariable",
    "GradingConflict",
    "HbarSeries",
    "Mixed",
    "MixedGrading",
    "NegativeHbarDetected",
    "Polynomial",
    "antifield_of",
    "as_coefficient",
    "canonical_monomial",
    "coefficient_to_str",
    "declare",
    "deriv_left",
    "deriv_right",
    "grading",
    "lookup",
    "monomial_factors",
    "mul",
    "parameter",
    "poly_sum",
    "registry",
    "series_sum",
    "substitute",
]
