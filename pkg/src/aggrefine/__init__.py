"""Optimization by data aggregation and iterative cluster refinement.

Solve weighted problems on cluster centroids, certify per-cluster optimality
against the original data, and refine the violating clusters until the
certificate holds.  Ships adapters for least-absolute-deviation regression,
weighted soft-margin SVM (linear and kernel), and semi-supervised SVM.
"""

from .core import IterationRecord, RunConfig, RunLog, compute_gap, run
from .clustering import (
    ClusterPartition,
    init_lad_clusters,
    init_s3vm_clusters,
    init_svm_clusters,
    initial_cluster_count,
    one_step_kmeans,
)
from .lad import LadModel, LadProblem
from .svm import SvmProblem, aggregate_gram, compute_gram, disaggregate_dual
from .s3vm import S3vmProblem, assign_labels, classify_margins
from .metrics import Metrics, compare, diagnose_rates, direct_solve
from . import data

__all__ = [
    "RunConfig",
    "RunLog",
    "IterationRecord",
    "run",
    "compute_gap",
    "ClusterPartition",
    "one_step_kmeans",
    "initial_cluster_count",
    "init_lad_clusters",
    "init_svm_clusters",
    "init_s3vm_clusters",
    "LadProblem",
    "LadModel",
    "SvmProblem",
    "S3vmProblem",
    "compute_gram",
    "aggregate_gram",
    "disaggregate_dual",
    "assign_labels",
    "classify_margins",
    "Metrics",
    "compare",
    "direct_solve",
    "diagnose_rates",
    "data",
]

__version__ = "0.1.0"
