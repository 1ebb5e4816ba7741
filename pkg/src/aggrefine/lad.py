"""L1-regression adapter: centroid aggregation, weighted LP subproblem,
residual-sign refinement, and the per-cluster optimality certificate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterPartition, init_lad_clusters, initial_cluster_count
from .subsolvers.lad_lp import solve_weighted_lad

__all__ = ["LadModel", "LadAggregate", "LadProblem"]


@dataclass
class LadModel:
    beta: np.ndarray

    def predict(self, X):
        return np.asarray(X @ self.beta).ravel()

    def summary(self) -> dict:
        return {"kind": "lad", "beta": self.beta.tolist()}


@dataclass
class LadAggregate:
    centroids: np.ndarray
    responses: np.ndarray
    weights: np.ndarray


def aggregate(partition: ClusterPartition, X, y) -> LadAggregate:
    """Cardinality-weighted per-cluster means of rows and responses."""
    means_x, counts = partition.aggregate_rows(X)
    S = partition.indicator()
    sums_y = np.asarray(S.T @ np.asarray(y, dtype=float)).ravel()
    return LadAggregate(centroids=means_x, responses=sums_y / counts, weights=counts)


class LadProblem:
    """Adapter wiring L1 regression into the refinement loop."""

    name = "lad"
    supports_gap = True
    default_gap_tolerance = 1e-3

    def __init__(self, X, y):
        self.X = X
        self.y = np.asarray(y, dtype=float)
        self.n_entries, self.m = X.shape
        if self.y.size != self.n_entries:
            raise ValueError("row/response count mismatch")
        # residual sign tolerance, scaled per entry; zeros count as nonpositive
        self._eps = 1e-9 * (1.0 + np.abs(self.y))
        self.notes: list[str] = []

    # -- loop protocol ------------------------------------------------------

    def init_state(self, config) -> ClusterPartition:
        n, m = self.n_entries, self.m
        if config.r0 is not None:
            k0 = max(int(np.ceil(config.r0 * n)), m + 1)
            if k0 > n:
                raise ValueError("initial rate implies more clusters than entries")
        else:
            k0 = initial_cluster_count(n, m, "lad")
        rng = np.random.Generator(np.random.Philox(key=config.rng_seed))
        return init_lad_clusters(self.X, self.y, k0, rng)

    def num_clusters(self, partition) -> int:
        return partition.num_clusters

    def all_singletons(self, partition) -> bool:
        return partition.all_singletons

    def snapshot_state(self, partition):
        return partition.assignment.copy()

    def solve_aggregated(self, partition):
        model, F = self.solve(aggregate(partition, self.X, self.y))
        return model, F, True

    def solve(self, agg: LadAggregate):
        beta, F = solve_weighted_lad(agg.centroids, agg.responses, agg.weights)
        return LadModel(beta=beta), F

    def evaluate(self, model: LadModel) -> float:
        return float(np.abs(self.y - model.predict(self.X)).sum())

    def residual_positive(self, model: LadModel) -> np.ndarray:
        return (self.y - model.predict(self.X)) > self._eps

    def check_optimality(self, partition, model) -> bool:
        """True iff every cluster's residuals share one side of the fit."""
        pos = self.residual_positive(model)
        for cid in partition.cluster_ids():
            p = pos[partition.members(cid)]
            if p.any() and not p.all():
                return False
        return True

    def decluster(self, partition, model):
        """Split every mixed-sign cluster into its positive / nonpositive parts."""
        pos = self.residual_positive(model)
        any_split = False
        for cid in partition.cluster_ids():
            idx = partition.members(cid)
            p = pos[idx]
            if p.any() and not p.all():
                any_split |= partition.split_cluster(cid, [idx[p], idx[~p]])
        return partition, any_split
