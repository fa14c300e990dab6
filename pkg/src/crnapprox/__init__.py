"""
crnapprox - stochastic chemical reaction networks and their approximations.

Exact CTMC simulation (Gillespie SSA), the fluid-limit ODE, the chemical
Langevin diffusion, and KMT-coupled CTMC/diffusion pairs on shared noise,
together with deficiency analysis and a seeded experiment harness.
"""

from .config import BoundaryPolicy, SimConfig
from .continuum import bistable_steady_states, classify_basin, simulate_em, solve_ode
from .coupled import CoupledRun, simulate_coupled, sup_distance_study
from .errors import (
    ConfigurationError,
    CrnApproxError,
    DomainError,
    LatticeError,
    ModelError,
    SimulationError,
)
from .kmt import PairedNoise, assemble_paired_paths, kmt_transform
from .models import load_bundled_model, parse_model
from .network import Complex, RateConvention, Reaction, ReactionNetwork, density_rate, drift, exact_rate
from .ssa import simulate_ssa
from .structure import DeficiencyReport, deficiency
from .trajectory import Method, Trajectory, TrajectoryMeta

__version__ = "0.1.0"

__all__ = [
    "BoundaryPolicy",
    "Complex",
    "ConfigurationError",
    "CoupledRun",
    "CrnApproxError",
    "DeficiencyReport",
    "DomainError",
    "LatticeError",
    "Method",
    "ModelError",
    "PairedNoise",
    "RateConvention",
    "Reaction",
    "ReactionNetwork",
    "SimConfig",
    "SimulationError",
    "Trajectory",
    "TrajectoryMeta",
    "assemble_paired_paths",
    "bistable_steady_states",
    "classify_basin",
    "deficiency",
    "density_rate",
    "drift",
    "exact_rate",
    "kmt_transform",
    "load_bundled_model",
    "parse_model",
    "simulate_coupled",
    "simulate_em",
    "simulate_ssa",
    "solve_ode",
    "sup_distance_study",
]
