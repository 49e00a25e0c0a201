"""Simulation toolkit for a periodically driven, number-conserving fermionic ladder.

Builds the bare and effective ladder Hamiltonians, propagates the exact
drive protocols, verifies leg-parity preservation, integrates the
bosonization RG flow for the phase diagram, and extracts topological
signatures (charge gaps, entanglement doubling, edge-correlation revival)
at exact-diagonalization scale, with a Kitaev-chain free-fermion bed for
cross-validation.
"""

__version__ = "0.1.0"

from .fockspace import (
    A_LEG_MASK,
    DENSE_MAX_DIM,
    FermionTerm,
    SectorBasis,
    SparseOperator,
    apply_term,
    build_sparse,
    enumerate_sector,
    full_fock_basis,
    leg_parity,
)
from .models import DriveParams, EffectiveCouplings, ModelParams
from .floquet import PropagationPlan, Trajectory

__all__ = [
    "A_LEG_MASK",
    "DENSE_MAX_DIM",
    "DriveParams",
    "EffectiveCouplings",
    "FermionTerm",
    "ModelParams",
    "PropagationPlan",
    "SectorBasis",
    "SparseOperator",
    "Trajectory",
    "apply_term",
    "build_sparse",
    "enumerate_sector",
    "full_fock_basis",
    "leg_parity",
    "__version__",
]
