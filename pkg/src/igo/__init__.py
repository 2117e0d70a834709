"""Impulsive Goodwin oscillator: 1-cycles, simulation and multistable constructions."""

__version__ = "0.1.0"

from .cycles import (Bracket, CycleReport, UniquenessCertificate, classify_stability, equation_of_periods,
                     find_all_cycles, fixed_point_from_y, r_derivative, r_of_xi, return_map, return_map_jacobian,
                     root_bracket, uniqueness_certificate)
from .model import (IgoModel, InvalidParameterError, ModulationSpec, StateSpace, ValidationReport, build_state_space,
                    check_reachability, load_model, save_model, validate_model)
from .multistability import MultistableRecipe, construct_multistable, multistability_diagnostics
from .simulator import Trajectory, UltimateBounds, iterate_return_map, simulate, ultimate_bounds

__all__ = [
    "Bracket", "CycleReport", "IgoModel", "InvalidParameterError", "ModulationSpec", "MultistableRecipe",
    "StateSpace", "Trajectory", "UltimateBounds", "UniquenessCertificate", "ValidationReport",
    "build_state_space", "check_reachability", "classify_stability", "construct_multistable",
    "equation_of_periods", "find_all_cycles", "fixed_point_from_y", "iterate_return_map", "load_model",
    "multistability_diagnostics", "r_derivative", "r_of_xi", "return_map", "return_map_jacobian",
    "root_bracket", "save_model", "simulate", "ultimate_bounds", "uniqueness_certificate", "validate_model",
]
