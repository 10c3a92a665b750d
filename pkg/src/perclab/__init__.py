"""perclab: seeded Monte Carlo and exact enumeration for bond percolation.

Modules cover lattice geometry, counter-based edge randomness, cluster
exploration, plane-crossing bond sweeps, statistical estimators, convolution
diagrams, an exact finite-graph oracle, a decision-forest inequality checker,
and a reproducible experiment runner with a CLI front end.
"""

__version__ = "0.1.0"

from .lattice import (ALL, All, Box, Custom, Edge, Halfspace, Intersection,
                      ModelSpec, Region, Slab, jbracket)
from .randomness import EdgeField, GhostField, edge_uniform, is_open
from .explore import Caps, Cluster, explore_cluster, reaches
from .pioneers import (CrossingProfile, CrossingRecord, crossing_counts,
                       crossing_profile)
from .estimators import (IndicatorEstimate, MassFit, MeanEstimate,
                         coupling_violations, fit_mass, image_sum, one_arm,
                         one_arm_distance, one_arm_extent, shell_profile,
                         slab_counts, solve_torus_threshold, sum_two_point,
                         susceptibility, torus_preimages, torus_two_point,
                         two_point)
from .diagrams import (Grid, convolve, fold_periodic, load_grid, point_mass,
                       power_grid, radial_convolution, save_grid,
                       shell_pair_count, triangle_diagrams)
from .oracle import (EventSpec, FiniteGraph, box_graph, cluster_size_value,
                     connection_event, count_polynomial, evaluate_counts,
                     exact_cluster_size_mean, exact_crossing_summary,
                     exact_probability, exact_two_point, from_region,
                     path_graph, polynomial_string, russo_check,
                     single_edge_graph, standard_coefficients, torus_graph)
from .osss import (DecisionForest, DecisionTree, ProductMeasure,
                   evaluation_tree, ghost_crossing_instance, random_instance,
                   verify_osss)
from .runner import ConfigError, build_config, emit_plot, run_experiment

__all__ = [
    "__version__",
    "ALL", "All", "Box", "Custom", "Edge", "Halfspace", "Intersection",
    "ModelSpec", "Region", "Slab", "jbracket",
    "EdgeField", "GhostField", "edge_uniform", "is_open",
    "Caps", "Cluster", "explore_cluster", "reaches",
    "CrossingProfile", "CrossingRecord", "crossing_counts",
    "crossing_profile",
    "IndicatorEstimate", "MassFit", "MeanEstimate", "coupling_violations",
    "fit_mass", "image_sum", "one_arm", "one_arm_distance", "one_arm_extent",
    "shell_profile", "slab_counts", "solve_torus_threshold", "sum_two_point",
    "susceptibility", "torus_preimages", "torus_two_point", "two_point",
    "Grid", "convolve", "fold_periodic", "load_grid", "point_mass",
    "power_grid", "radial_convolution", "save_grid", "shell_pair_count",
    "triangle_diagrams",
    "EventSpec", "FiniteGraph", "box_graph", "cluster_size_value",
    "connection_event", "count_polynomial", "evaluate_counts",
    "exact_cluster_size_mean", "exact_crossing_summary", "exact_probability",
    "exact_two_point", "from_region", "path_graph", "polynomial_string",
    "russo_check", "single_edge_graph", "standard_coefficients",
    "torus_graph",
    "DecisionForest", "DecisionTree", "ProductMeasure", "evaluation_tree",
    "ghost_crossing_instance", "random_instance", "verify_osss",
    "ConfigError", "build_config", "emit_plot", "run_experiment",
]
