"""Radiative decay of atoms held in surface-bound translational levels near a dielectric."""
from .errors import (BasisMismatch, ConfigError, ConvergenceFailure, DomainError,
                     GeometryViolation, GridMismatch, GridTooCoarse, NoDistinctExtrema,
                     NonRadiativePair, StiffnessFailure, SurfDecayError)
from .physical_model import (CESIUM_D2, AtomSpecies, InternalState, PotentialParams,
                             derive_repulsion_params, potential, silica_cesium_potentials,
                             transition_frequency, well_geometry)
from .spectrum import (SpatialGrid, SpectrumTable, TranslationalState, continuum_mesh, count_bound,
                       solve_bound, solve_continuum, solve_free)
from .overlaps import franck_condon_factors, momentum_overlap, overlap_F, overlap_I
from .rates import (Orientation, RateQuadrature, RateTensor, build_rate_tensor, gamma_ab,
                    gamma_tensor, gamma_x, linewidth)
from .dynamics import DensityMatrix, DriveField, LevelBasis, decay_generator, driven_generator, evolve

__version__ = "0.1.0"
