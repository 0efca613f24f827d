"""Quantum hydrodynamics on 2D grids: wave-packet propagation, Bohmian fields
and trajectory ensembles, reaction and scattering observables.

All quantities are in Hartree atomic units (hbar = 1, masses in electron
masses, lengths in bohr).
"""

__version__ = "0.1.0"

from .grid import Grid1D, Grid2D, HBAR
from .fields import (
    WaveField,
    HydroFields,
    density,
    quantum_flux,
    velocity_field,
    quantum_potential,
    pressure_tensor,
    hydro_fields,
    continuity_residual,
    q_separability_residual,
)
from .potentials import PotentialSurface, ReactionPath, steepest_descent_path, arc_length
from .propagate import PropagationParams, InitialState, make_gaussian, make_quasi_plane, step, propagate
from .trajectories import SamplingSpec, TrajectoryEnsemble, sample, integrate_bohmian, integrate_classical
from .observables import RegionSpec, FractionSeries, restricted_norm, fraction_series, mean_energy, angular_distribution
from .reduced import ReducedDensity, partial_trace, reduced_velocity, integrate_reduced
from .mixedqc import MixedState, mixed_step, backreaction_force
