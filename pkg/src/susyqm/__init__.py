"""Supersymmetric quantum mechanics on grids: partner hierarchies, Gaussian-mixture
ground states, partner scattering, intertwined propagation and tensor sectors."""

from .errors import ConvergenceError, DomainError, NumericalError, SusyError, ValidationError
from .estimators import MixtureGroundState, PartnerHierarchy, SuperpotentialTransformer
from .grid import (
    ComplexField,
    Grid1D,
    RealField,
    SpectrumResult,
    derivative_matrix,
    eigensolve,
    hamiltonian_matrix,
    kinetic_matrix,
    make_grid,
)
from .mixture import GaussianMixture, SampleEnsemble, energy_functional, local_energy, mixture_density, quantum_potential
from .optimizer import OptimizerConfig, OptimizerTrace, cg_step, em_refit, locate_node, optimize_ground_state
from .propagation import PropagationConfig, intertwining_residual, propagate
from .scattering import ScatteringAmplitudes, asymptotic_levels, partner_amplitudes, solve_scattering
from .susy import (
    Hierarchy,
    SectorRecord,
    SuperMatrices,
    SuperPotential,
    build_hierarchy,
    charge_matrices,
    gaussian_doublewell_model,
    partner_potential,
    partner_state_map,
    riccati_potential,
    semiclassical_splitting,
    super_matrices,
    superpotential_from_density,
)
from .units import HARTREE_TO_CM1, ModelUnits, unit_convert

__version__ = "0.1.0"
