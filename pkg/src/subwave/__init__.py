"""Subwavelength optical addressing through dark states.

Full quantum dynamics of the addressed and spectator atoms, the analytic
error budget with its optimizer, and a sweep/fit harness.
"""

__version__ = "0.1.0"

from .budget import BudgetReport, OptimizationResult, budget_rows, dominant_balance, optimize, total_error
from .dynamics import (EvolutionProblem, GateErrorReport, GateSpec, calibrate, evolve, gate_error,
                       motional_gate_error, spectator_error, spectator_ladder_check)
from .fields import ControlGeometry, DriveConfig, PulseShape, addressing_width, control_profile, \
    ground_state_width, motional_coupling, probe_amplitude
from .lab import CaseStudyPreset, FitResult, SweepSpec, compare_analytic_numeric, fit_power_law, \
    preset, run_sweep
from .params import PlatformParams
from .schemes import (LevelScheme, MotionalLadder, TwoAtomCoupling, build_lambda, build_tripod,
                      build_tripod_motional, build_two_atom, dark_bright_basis, dark_state)

__all__ = [
    "BudgetReport", "OptimizationResult", "budget_rows", "dominant_balance", "optimize", "total_error",
    "EvolutionProblem", "GateErrorReport", "GateSpec", "calibrate", "evolve", "gate_error",
    "motional_gate_error", "spectator_error", "spectator_ladder_check",
    "ControlGeometry", "DriveConfig", "PulseShape", "addressing_width", "control_profile",
    "ground_state_width", "motional_coupling", "probe_amplitude",
    "CaseStudyPreset", "FitResult", "SweepSpec", "compare_analytic_numeric", "fit_power_law",
    "preset", "run_sweep", "PlatformParams",
    "LevelScheme", "MotionalLadder", "TwoAtomCoupling", "build_lambda", "build_tripod",
    "build_tripod_motional", "build_two_atom", "dark_bright_basis", "dark_state",
]
