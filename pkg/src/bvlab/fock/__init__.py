"""Finite-dimensional Ward laboratory: mode systems, products and Ward maps."""

from .modes import CompatibilityViolation, ModeSystem, ModeSystemError, load_modes, parse_modes, random_mode_system
from .products import (
    FockAlgebra,
    Truncation,
    commutator,
    connected,
    connected_by_partitions,
    interacting,
    poisson,
    retarded,
    star,
    tproduct,
)
from .rcl import (
    factorisation_residual,
    field_independence_residual,
    glz_residual,
    linear_argument_residual,
    linearity_residual,
    rcl,
    rcl_polarised,
)
from .ward import (
    AnomalyMap,
    GeneratorDerivation,
    InnerDerivation,
    NonQuadraticQ,
    WardTables,
    antibracket_modes,
    apply_redefinition,
    classical_second_order,
    consistency_check,
    free_brst_ward,
    pa_check,
    polarised_tables,
    ward_extract,
    ward_identity_residual,
)

__all__ = [
    "AnomalyMap",
    "CompatibilityViolation",
    "FockAlgebra",
    "GeneratorDerivation",
    "InnerDerivation",
    "ModeSystem",
    "ModeSystemError",
    "NonQuadraticQ",
    "Truncation",
    "WardTables",
    "antibracket_modes",
    "apply_redefinition",
    "classical_second_order",
    "commutator",
    "connected",
    "connected_by_partitions",
    "consistency_check",
    "factorisation_residual",
    "field_independence_residual",
    "free_brst_ward",
    "glz_residual",
    "interacting",
    "linear_argument_residual",
    "linearity_residual",
    "load_modes",
    "pa_check",
    "parse_modes",
    "poisson",
    "polarised_tables",
    "random_mode_system",
    "rcl",
    "rcl_polarised",
    "retarded",
    "star",
    "tproduct",
    "ward_extract",
    "ward_identity_residual",
]
