"""Exact ground states of translation-invariant quadratic fermion lattices.

Build a Hamiltonian from finite-support circulant couplings, diagonalize its
momentum-space BdG blocks, extract the exact Gaussian ground-state covariance,
and evaluate the inversion-breaking invariants whose nonvanishing forces the
model gapless.  A dense Fock-space oracle cross-checks everything at desk scale.
"""

from .lattice import LatticeShape, fourier_circulant, inverse_fourier, phase
from .model import (
    CATALOG_NAMES,
    CouplingSet,
    ModelParams,
    bdg_block,
    bdg_blocks,
    catalog,
    inversion_transform,
    load_model,
    random_model,
    save_model,
    symmetrize,
    validate,
)
from .observables import (
    EntropyScan,
    InvariantReport,
    asymmetry_diagnostics,
    block_entropy,
    entropy_scan,
    invariant_map,
    spectral_gap,
    summed_imaginary_invariant,
    verify_criticality,
)
from .oracle import (
    ExactGroundState,
    FockOperatorSet,
    build_fock_hamiltonian,
    compare_with_quasifree,
    exact_ground_correlators,
    fock_operators,
)
from .solver import (
    BogoliubovSolution,
    CovarianceKernel,
    RealSpaceCorrelators,
    apply_bogoliubov_map,
    covariance_from_coefficients,
    diagonalize,
    evolve_quench,
    ground_covariance,
    ground_energy,
    random_ph_map,
    real_space,
    spinless_closed_form,
)

__version__ = "0.1.0"
