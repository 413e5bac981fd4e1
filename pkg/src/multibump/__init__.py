"""Variational solver for multibump sign-changing solutions of indefinite
semilinear Dirichlet problems, built on a Nehari-type constraint set."""

from .decomposition import DecomposedField, decompose, project_component, signed_parts
from .errors import (ConfigError, ConvergenceError, DegenerateComponentError,
                     FiberRootError, MultibumpError, StagnationError)
from .mesh import (BAR, HAT, NEG, TILDE, ZERO, Mesh, WeightField, build_mesh,
                   build_weight_field)
from .model import (HypothesisReport, Nonlinearity, ProblemSpec,
                    check_hypotheses, nonlinearity_from_scalars)
from .nehari import (FiberPoint, MembershipReport, NehariConstants, build_seed,
                     check_membership, compute_constants,
                     fiber_energy_and_curvature, fiber_value, project_to_nehari,
                     solve_fiber_equation)
from .operators import (SpectralData, StiffnessOperator, WeightedMass,
                        assemble_stiffness, compute_spectral_data,
                        estimate_sobolev_constant, smallest_weighted_eigenpair,
                        solve_spd, weighted_mass)
from .solver import (LimitResult, SolveOptions, SolveReport, concentration_gap,
                     minimize, mu_sweep, solve_limit_problems)

__version__ = "0.1.0"

__all__ = [
    "BAR", "HAT", "NEG", "TILDE", "ZERO",
    "ConfigError", "ConvergenceError", "DecomposedField",
    "DegenerateComponentError", "FiberPoint", "FiberRootError",
    "HypothesisReport", "LimitResult", "MembershipReport", "Mesh",
    "MultibumpError", "NehariConstants", "Nonlinearity", "ProblemSpec",
    "SolveOptions", "SolveReport", "SpectralData", "StagnationError",
    "StiffnessOperator", "WeightField", "WeightedMass", "assemble_stiffness",
    "build_mesh", "build_seed", "build_weight_field", "check_hypotheses",
    "check_membership", "compute_constants", "compute_spectral_data",
    "concentration_gap", "decompose", "estimate_sobolev_constant",
    "fiber_energy_and_curvature", "fiber_value", "minimize", "mu_sweep",
    "nonlinearity_from_scalars", "project_component", "project_to_nehari",
    "signed_parts", "smallest_weighted_eigenpair", "solve_fiber_equation",
    "solve_limit_problems", "solve_spd", "weighted_mass",
]
