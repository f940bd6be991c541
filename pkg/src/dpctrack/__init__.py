"""Decentralized prediction-correction tracking of time-varying convex programs."""

from .graph import NetworkGraph, augmented_incidence, random_geometric_graph
from .objective import ConstantsBundle, ObjectiveOracle, estimate_constants, global_gradient, mixed_time_gradient
from .splitting import SplitHessian, assemble_split, splitting_contraction, truncated_solve
from .algorithms import MethodConfig, MethodState, step

__version__ = "0.1.0"
