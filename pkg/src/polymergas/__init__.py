"""Polymer gases with general pair potentials: Mayer series, tree-graph bounds and a convergence criterion."""

from .errors import CapacityError, ModelFormatError
from .model import INF, PolymerSpace, hard_core_space, load_model, loads_model, space_from_table
from .expansion import partition_function, ursell, pinned_sum, abs_log_xi, log_xi_series
from .treebound import tree_graph_rhs, ursell_tree_bound
from .criterion import check_criterion, optimize_mu

__all__ = [
    "CapacityError", "ModelFormatError", "INF", "PolymerSpace", "hard_core_space", "load_model",
    "loads_model", "space_from_table", "partition_function", "ursell", "pinned_sum", "abs_log_xi",
    "log_xi_series", "tree_graph_rhs", "ursell_tree_bound", "check_criterion", "optimize_mu",
]
