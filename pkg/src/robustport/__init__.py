"""Robust portfolio choice under joint drift/volatility uncertainty.

Pipeline: describe the market (model), compute worst-case measures in closed
form (worst_case), evaluate the game Hamiltonian and its saddle (hamiltonian),
solve the reduced HJBI PDE (pde), extract the policy field (strategy), and
verify the saddle by Monte-Carlo simulation (simulate).  The cli module wires
these to YAML configs and CSV artifacts.
"""

from .model import (CoefficientFn, GridSpec, MarketModel, PowerUtility,
                    UncertaintyRectangle, ValidationReport, default_y_radius,
                    validate_assumptions)
from .worst_case import (BranchRegion, KappaBranch, RatioMin, WorstCaseMeasure,
                         brute_force_min, minimize_ratio, min_ratio_values,
                         psi, psi_critical_points)
from .hamiltonian import (DerivativeBundle, SaddlePoint, hamiltonian_measure,
                          hamiltonian_point, saddle_point)
from .pde import (SolveDiagnostics, SolverError, ValueSurface, closed_form_b0,
                  residual_norm, solve_hjbi, tail_values)
from .strategy import PolicyField, build_policy, value_function
from .simulate import (AdversaryPolicy, SaddleReport, SimConfig, UtilityEstimate,
                       simulate_eu, terminal_wealths, verify_saddle)
from .config import RunConfig, dump_config, load_config, solve_config_hash

__version__ = "0.1.0"

__all__ = [
    "CoefficientFn", "GridSpec", "MarketModel", "PowerUtility",
    "UncertaintyRectangle", "ValidationReport", "default_y_radius",
    "validate_assumptions",
    "BranchRegion", "KappaBranch", "RatioMin", "WorstCaseMeasure",
    "brute_force_min", "minimize_ratio", "min_ratio_values", "psi",
    "psi_critical_points",
    "DerivativeBundle", "SaddlePoint", "hamiltonian_measure",
    "hamiltonian_point", "saddle_point",
    "SolveDiagnostics", "SolverError", "ValueSurface", "closed_form_b0",
    "residual_norm", "solve_hjbi", "tail_values",
    "PolicyField", "build_policy", "value_function",
    "AdversaryPolicy", "SaddleReport", "SimConfig", "UtilityEstimate",
    "simulate_eu", "terminal_wealths", "verify_saddle",
    "RunConfig", "dump_config", "load_config", "solve_config_hash",
]
