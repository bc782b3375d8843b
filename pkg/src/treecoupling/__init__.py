"""Exact and approximate interleaving distances between merge trees."""

from .bounds import BoundsResult, d_opt, deletion_penalty, interleaving_bounds
from .coupling import (
    Coupling,
    CostReport,
    coupling_context,
    coupling_norm,
    is_special,
    validate_coupling,
)
from .errors import (
    CapExceededError,
    CouplingViolationError,
    InternalCheckError,
    TreeCouplingError,
    ValidationError,
)
from .maps import check_composition, check_eps_good, extract_coupling, induced_map
from .oracle import enumerate_couplings, exact_interleaving, verify_decomposition
from .pruning import check_pruning_lemma, prune, prune_to_leaf_budget
from .trees import (
    MergeTree,
    MetricPoint,
    PointCloud,
    perturb_to_generic,
    single_linkage_tree,
    validate_tree,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsResult",
    "CapExceededError",
    "Coupling",
    "CostReport",
    "CouplingViolationError",
    "InternalCheckError",
    "MergeTree",
    "MetricPoint",
    "PointCloud",
    "TreeCouplingError",
    "ValidationError",
    "check_composition",
    "check_eps_good",
    "check_pruning_lemma",
    "coupling_context",
    "coupling_norm",
    "d_opt",
    "deletion_penalty",
    "enumerate_couplings",
    "exact_interleaving",
    "extract_coupling",
    "induced_map",
    "interleaving_bounds",
    "is_special",
    "perturb_to_generic",
    "prune",
    "prune_to_leaf_budget",
    "single_linkage_tree",
    "validate_coupling",
    "validate_tree",
    "verify_decomposition",
]
