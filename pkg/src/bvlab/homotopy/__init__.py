"""Contracting homotopies from contractible-pair splittings."""

from .builders import free_differential, free_generator, jet_scope, mode_differential, mode_split, theory_split
from .operators import (
    Homotopy,
    ObstructionNonClosed,
    PerturbativeHomotopy,
    build_h0,
    cohomology_reps,
    conjugated_layers,
    extend_observable,
    perturbative_homotopy,
)
from .split import BasisSplit, UnverifiedSplit, complete_split

__all__ = [
    "BasisSplit",
    "Homotopy",
    "ObstructionNonClosed",
    "PerturbativeHomotopy",
    "UnverifiedSplit",
    "build_h0",
    "cohomology_reps",
    "complete_split",
    "conjugated_layers",
    "extend_observable",
    "free_differential",
    "free_generator",
    "jet_scope",
    "mode_differential",
    "mode_split",
    "perturbative_homotopy",
    "theory_split",
]
