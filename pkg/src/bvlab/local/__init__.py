"""Local densities on flat jet space and their variational calculus."""

from .functional import (
    Density,
    LocalFunctional,
    ZeroReport,
    base_fields,
    euler_lagrange,
    euler_lagrange_poly,
    field_independent_part,
    is_zero_functional,
    total_derivative,
    total_derivative_poly,
)
from .jets import JetOverflow, JetSpace, component, component_antifield, has_jets, jet, multi_indices, shift

__all__ = [
    "Density",
    "JetOverflow",
    "JetSpace",
    "LocalFunctional",
    "ZeroReport",
    "base_fields",
    "component",
    "component_antifield",
    "euler_lagrange",
    "euler_lagrange_poly",
    "field_independent_part",
    "has_jets",
    "is_zero_functional",
    "jet",
    "multi_indices",
    "shift",
    "total_derivative",
    "total_derivative_poly",
]
