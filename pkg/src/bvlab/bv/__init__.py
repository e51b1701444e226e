"""Antibracket, BRST differential, master equation and gauge fixing."""

from .antibracket import act_on_density, antibracket, antibracket_poly, evolutionary, field_pairs, generator_images, partner
from .theory import (
    BrstLayer,
    GaugeFermionError,
    MasterReport,
    SpecError,
    TheorySpec,
    antifield_layers,
    apply_layer,
    apply_layer_density,
    brst,
    brst_density,
    brst_squared_on_generators,
    check_master_equation,
    gauge_fix,
    layer_identity_residuals,
    nonminimal_extend,
    split_action,
    verify_k_condition,
)

__all__ = [
    "BrstLayer",
    "GaugeFermionError",
    "MasterReport",
    "SpecError",
    "TheorySpec",
    "act_on_density",
    "antibracket",
    "antibracket_poly",
    "antifield_layers",
    "apply_layer",
    "apply_layer_density",
    "brst",
    "brst_density",
    "brst_squared_on_generators",
    "check_master_equation",
    "evolutionary",
    "field_pairs",
    "gauge_fix",
    "generator_images",
    "layer_identity_residuals",
    "nonminimal_extend",
    "partner",
    "split_action",
    "verify_k_condition",
]
