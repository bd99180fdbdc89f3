"""Socially fair k-means: Lloyd, Fair-Lloyd and exact fair-center solvers."""
from .core import (Assignment, Dataset, GroupClusterStats, compute_group_stats,
                   fair_objective, group_cost, group_cost_gradient, group_costs,
                   kmeans_cost, point_group_costs)
from .errors import (DegenerateClusterError, EncodingError, FairLloydError, IngestError,
                     InvalidArgumentError, InvalidCertificateError, UnsupportedModeError)
from .fair_solver import (FairSolveReport, SolverConfig, certificate_lower_bound,
                          centers_from_gamma, line_search_2groups, solve_fair_centers,
                          solve_mwu, solve_subgradient)
from .clustering import (ClusteringConfig, ClusteringResult, assign_points, fair_cost,
                         fair_lloyd, init_kmeanspp, init_random, init_weighted_lloyd, lloyd,
                         update_means, weighted_objective)

__version__ = "0.1.0"
