"""Massive Dirac fields on five dimensional rotating black holes.

The modules cover the black hole geometry with its tortoise coordinate,
the separated angular and radial problems built on the Dirac potentials, and
time evolution together with commutator diagnostics.
"""

from .angular import AngularOperator, AngularSpectrum, ModeIndex, build_angular_operator, eigen, lambda_of_omega
from .clifford import GammaRep, clifford_defects, gamma_rep
from .errors import (AxisModeError, ConfigError, ConvergenceError, DomainTooSmall, ExtremalOrNaked,
                     InsufficientDecades, MPDiracError, SolveFailure, StepSizeUnderflow, WindowAtThreshold)
from .evolution import CayleyStepper, DecaySeries, decay_experiment, evolve
from .geometry import BlackHole, new_black_hole
from .mourre import build_conjugates, commutator_check, mourre_window_diagnostic
from .potentials import RadialPotentials, radial_potentials, tortoise_map
from .radial import bound_state_scan, integrate_radial, radial_system, reduced_h0_matrix, weight_operator
from .tortoise import TortoiseMap, decay_order_estimate

__version__ = "0.1.0"

__all__ = [
    "AngularOperator", "AngularSpectrum", "AxisModeError", "BlackHole", "CayleyStepper", "ConfigError",
    "ConvergenceError", "DecaySeries", "DomainTooSmall", "ExtremalOrNaked", "GammaRep",
    "InsufficientDecades", "MPDiracError", "ModeIndex", "RadialPotentials", "SolveFailure",
    "StepSizeUnderflow", "TortoiseMap", "WindowAtThreshold", "bound_state_scan", "build_angular_operator",
    "build_conjugates", "clifford_defects", "commutator_check", "decay_experiment", "decay_order_estimate",
    "eigen", "evolve", "gamma_rep", "integrate_radial", "lambda_of_omega", "mourre_window_diagnostic",
    "new_black_hole", "radial_potentials", "radial_system", "reduced_h0_matrix", "tortoise_map",
    "weight_operator",
]
