"""Shape-invariant systems from a master function, their Riccati deformations,
and two-dimensional superintegrable Hamiltonians with exact operator algebra."""

from .assembly import AssembledSystem, assemble, build_Hs, build_integrals, build_K, resonance_check
from .deformation import (DeformationProfile, InadmissibleConstantError, deform, deformed_potential,
                          regularity_bounds, riccati_residual, solve_deformation)
from .master import (MasterSystem, catalog_lookup, change_of_variable, energy, ladder_spacing,
                     partner_potentials, potential_vm, shape_invariance_check, superpotential)
from .operators import DiffOp1D, DiffOp2D, commutator, compose, leading_order
from .verification import GridSpec, discretize_and_eigen, isospectrality_check, spectrum_check

__version__ = "0.1.0"
