"""Bayesian model selection for colored Gaussian graphical models."""

from .bayes_factor import BFEstimate, estimate_bf
from .experiments import generate, graph_from_precision, replicate
from .graph import ColoredGraph, three_vertex, free_elements, neighbor_pair, star
from .kernels import BACKEND
from .linalg import Dataset, complete, mvn_sample, reconstruct_K
from .metrics import d0, class_metrics, inclusion_probabilities, recovery_report
from .search import SearchConfig, select_model
from .wishart import (
    CGWishartParams,
    exact_log_norm_const,
    log_norm_const,
    log_rn,
    numeric_log_norm_const,
    sample,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BFEstimate",
    "CGWishartParams",
    "ColoredGraph",
    "Dataset",
    "SearchConfig",
    "class_metrics",
    "complete",
    "d0",
    "estimate_bf",
    "exact_log_norm_const",
    "three_vertex",
    "free_elements",
    "generate",
    "graph_from_precision",
    "inclusion_probabilities",
    "log_norm_const",
    "log_rn",
    "mvn_sample",
    "neighbor_pair",
    "numeric_log_norm_const",
    "recovery_report",
    "reconstruct_K",
    "replicate",
    "sample",
    "select_model",
    "star",
]
