"""Quantum brackets, their L-infinity relations, and contact terms."""

from .brackets import (
    BracketFamily,
    ModeAnomaly,
    SupportViolation,
    TransportedAnomaly,
    anomaly_as_generating_map,
    check_linfty,
    check_linfty_polarised,
    locality_tags,
    mode_brackets,
    quantum_cohomology_step,
    theory_brackets,
)
from .contact import (
    ContactTerms,
    ObstructionNotClosed,
    ObstructionNotExact,
    QuantumHomotopy,
    compositions,
    quantum_homotopy,
    representative_shift,
    solve_contact_terms,
)

__all__ = [
    "BracketFamily",
    "ContactTerms",
    "ModeAnomaly",
    "ObstructionNotClosed",
    "ObstructionNotExact",
    "QuantumHomotopy",
    "SupportViolation",
    "TransportedAnomaly",
    "anomaly_as_generating_map",
    "check_linfty",
    "check_linfty_polarised",
    "compositions",
    "locality_tags",
    "mode_brackets",
    "quantum_cohomology_step",
    "quantum_homotopy",
    "representative_shift",
    "solve_contact_terms",
    "theory_brackets",
]
