"""Uniform Pareto-front sampling via arc-length CDF refinement.

Sampling scalarization weights uniformly rarely spaces the induced solutions
uniformly along the Pareto front: the front is traversed at a non-constant
speed. This package normalizes that speed through its arc-length CDF, either
in closed form (quadratics, entropic bandits) or by iterative reconstruction
from chord lengths, and ships the problem instances, inner solvers, metrics,
and experiment harness to exercise the whole pipeline at desk scale.
"""

__version__ = "0.1.0"

from .cdf import CdfEstimate, damped_update, empirical_cdf, identity_cdf, sup_distance
from .geometry import QuadratureConfig, arc_length, cdf_from_speed, chord_cumsum
from .metrics import PfSampleSet, cv, gap_ratio, hypervolume_2d, igd, nondominated_filter
from .problems import (
    EntropicBandit,
    GearToy,
    Quadratic1d,
    QuadraticNd,
    TabularKlMdp,
    fig1_toy_bandit,
    grid_mdp_preset,
    problem_from_config,
)
from .solvers import InnerSolverConfig, SolverResult, solve_exact
from .surf import SurfConfig, SurfResult, pf_aware_weights, surf_run, surf_step

__all__ = [
    "__version__",
    "CdfEstimate",
    "identity_cdf",
    "empirical_cdf",
    "damped_update",
    "sup_distance",
    "QuadratureConfig",
    "arc_length",
    "cdf_from_speed",
    "chord_cumsum",
    "PfSampleSet",
    "cv",
    "gap_ratio",
    "hypervolume_2d",
    "igd",
    "nondominated_filter",
    "QuadraticNd",
    "Quadratic1d",
    "GearToy",
    "EntropicBandit",
    "TabularKlMdp",
    "fig1_toy_bandit",
    "grid_mdp_preset",
    "problem_from_config",
    "InnerSolverConfig",
    "SolverResult",
    "solve_exact",
    "SurfConfig",
    "SurfResult",
    "pf_aware_weights",
    "surf_run",
    "surf_step",
]
