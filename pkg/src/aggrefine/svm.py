"""Soft-margin SVM adapter: label-pure aggregation, weighted dual solves,
margin-side refinement, dual disaggregation, and a kernel route that works
entirely on block means of the Gram matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .clustering import ClusterPartition, init_svm_clusters, initial_cluster_count
from .subsolvers.svm_dual import DualSolution, solve_weighted_svm

__all__ = [
    "SvmAggregate",
    "SvmIterate",
    "SvmProblem",
    "compute_gram",
    "aggregate_gram",
    "disaggregate_dual",
]

GRAM_ENTRY_LIMIT = 20_000  # dense n x n kernel matrices beyond this are refused

HINGE_EPS = 1e-9  # entries this close to the margin-shifted hyperplane count as nonpositive


def compute_gram(X, kernel: str = "linear", gamma: float | None = None) -> np.ndarray:
    """Dense kernel matrix of the rows of X."""
    n = X.shape[0]
    if n > GRAM_ENTRY_LIMIT:
        raise ValueError(
            f"kernel path stores an n x n Gram matrix; n={n} exceeds the "
            f"{GRAM_ENTRY_LIMIT} limit"
        )
    Xd = np.asarray(X.todense()) if sp.issparse(X) else np.asarray(X, dtype=float)
    if kernel == "linear":
        return Xd @ Xd.T
    if kernel == "rbf":
        if gamma is None or gamma <= 0:
            raise ValueError("rbf kernel needs gamma > 0")
        sq = np.einsum("ij,ij->i", Xd, Xd)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (Xd @ Xd.T)
        np.maximum(d2, 0.0, out=d2)
        return np.exp(-gamma * d2)
    raise ValueError(f"unknown kernel {kernel!r}")


def _mean_indicator(partition: ClusterPartition) -> sp.csr_matrix:
    S = partition.indicator().tocsc()
    inv = 1.0 / partition.sizes()
    return (S @ sp.diags(inv)).tocsr()


def aggregate_gram(partition: ClusterPartition, gram: np.ndarray) -> np.ndarray:
    """Aggregated kernel matrix: entry (k, q) is the mean of the (k, q) block.

    This equals the Gram matrix of the averaged feature vectors, so the
    result is symmetric positive semidefinite whenever the input is.
    """
    Sm = _mean_indicator(partition)
    half = np.asarray(Sm.T @ gram)  # K x n
    out = np.asarray(half @ Sm)
    return 0.5 * (out + out.T)  # symmetrize away matmul round-off


@dataclass
class SvmAggregate:
    labels: np.ndarray
    weights: np.ndarray
    centroids: np.ndarray | None = None
    gram: np.ndarray | None = None
    cluster_ids: list[int] = field(default_factory=list)
    mean_indicator: sp.csr_matrix | None = None  # n x K, rows sum to the member share


@dataclass
class SvmIterate:
    """Aggregated solution of one iteration plus its original-data conversion."""

    dual: DualSolution
    w: np.ndarray | None
    b: float
    F: float
    norm_sq: float
    aggregate: SvmAggregate
    scores: np.ndarray | None = None  # decision values on original entries
    xi: np.ndarray | None = None

    def summary(self) -> dict:
        d = {"kind": "svm", "b": self.b, "objective": self.F}
        if self.w is not None:
            d["w"] = self.w.tolist()
        return d


def cluster_labels(partition: ClusterPartition, y) -> np.ndarray:
    """Per-cluster label means; raises unless every cluster is label-pure."""
    y = np.asarray(y, dtype=float)
    S = partition.indicator()
    means = np.asarray(S.T @ y).ravel() / partition.sizes()
    if not np.all(np.isin(means, (-1.0, 1.0))):
        raise ValueError("cluster mixes labels")
    return means


def aggregate_linear(partition: ClusterPartition, X, y) -> SvmAggregate:
    labels = cluster_labels(partition, y)
    centroids, counts = partition.aggregate_rows(X)
    return SvmAggregate(
        labels=labels,
        weights=counts,
        centroids=centroids,
        cluster_ids=partition.cluster_ids(),
    )


def aggregate_kernel(partition: ClusterPartition, gram, y) -> SvmAggregate:
    labels = cluster_labels(partition, y)
    return SvmAggregate(
        labels=labels,
        weights=partition.sizes().astype(float),
        gram=aggregate_gram(partition, gram),
        cluster_ids=partition.cluster_ids(),
        mean_indicator=_mean_indicator(partition),
    )


def disaggregate_dual(dual: DualSolution, partition: ClusterPartition, M: float) -> np.ndarray:
    """Spread each cluster's dual value uniformly over its members.

    Feasibility for the original dual carries over: the per-entry box holds
    because the aggregated box scales with cluster size, the label-weighted
    sum is unchanged, and the implied hyperplane is identical.
    """
    sizes = partition.sizes()
    if np.any(dual.alpha > sizes * M * (1 + 1e-9) + 1e-12):
        raise ValueError("aggregated dual violates its box; refusing to spread")
    per_member = dual.alpha / sizes
    alpha_hat = np.empty(partition.n)
    for j, cid in enumerate(partition.cluster_ids()):
        alpha_hat[partition.members(cid)] = per_member[j]
    return alpha_hat


def convert_to_aggregated(xi_entries, partition: ClusterPartition) -> np.ndarray:
    """Cluster slack as the mean of its members' slacks."""
    S = partition.indicator()
    return np.asarray(S.T @ np.asarray(xi_entries, dtype=float)).ravel() / partition.sizes()


class SvmProblem:
    """Adapter wiring the soft-margin SVM into the refinement loop.

    ``kernel`` may be "linear" (centroid route by default, Gram route with
    ``use_gram=True``), "rbf" (always the Gram route), or "precomputed"
    (pass the kernel matrix as ``gram``).
    """

    name = "svm"
    supports_gap = True
    default_gap_tolerance = 1e-4

    def __init__(self, X, y, M: float = 0.1, kernel: str = "linear",
                 gamma: float | None = None, use_gram: bool = False, gram=None):
        self.X = X
        self.y = np.asarray(y, dtype=float)
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        self.n_entries = X.shape[0] if X is not None else gram.shape[0]
        self.m = X.shape[1] if X is not None else 0
        self.M = float(M)
        self.kernel = kernel
        self.gamma = gamma
        self.notes: list[str] = []
        if kernel == "precomputed":
            if gram is None:
                raise ValueError("precomputed kernel needs gram=")
            self.gram = np.asarray(gram, dtype=float)
            self.use_gram = True
        elif kernel == "rbf" or (kernel == "linear" and use_gram):
            self.gram = compute_gram(X, kernel, gamma)
            self.use_gram = True
        elif kernel == "linear":
            self.gram = None
            self.use_gram = False
        else:
            raise ValueError(f"unknown kernel {kernel!r}")

    # -- loop protocol ------------------------------------------------------

    def init_state(self, config) -> ClusterPartition:
        n = self.n_entries
        if config.r0 is not None:
            k0 = max(int(np.ceil(config.r0 * n)), 2)
        else:
            k0 = initial_cluster_count(n, max(self.m, 1), "svm")
        rng = np.random.Generator(np.random.Philox(key=config.rng_seed))
        if self.kernel in ("rbf", "precomputed"):
            return self._init_clusters_from_gram(k0, rng)
        return init_svm_clusters(self.X, self.y, k0, self.M, rng)

    def _init_clusters_from_gram(self, k0: int, rng) -> ClusterPartition:
        """Gram analogue of the linear initializer: a pilot model on a row
        sample scores every entry through the kernel, and each label group
        is clustered on that one-dimensional score."""
        from .clustering import _allocate, one_step_kmeans, sample_size_for_init

        y = self.y
        n = self.n_entries
        pos = np.flatnonzero(y > 0)
        neg = np.flatnonzero(y < 0)
        if pos.size == 0 or neg.size == 0:
            raise ValueError("both labels must be present")
        size = sample_size_for_init(n, max(self.m, 1))
        n_pos = min(pos.size, max(1, int(round(size * pos.size / n))))
        n_neg = min(neg.size, max(1, size - n_pos))
        sample = np.concatenate([
            rng.choice(pos, size=n_pos, replace=False),
            rng.choice(neg, size=n_neg, replace=False),
        ])
        sub = self.gram[np.ix_(sample, sample)]
        sol = solve_weighted_svm(gram=sub, y=y[sample], weights=np.ones(sample.size), M=self.M)
        scores = self.gram[:, sample] @ (sol.alpha * y[sample]) + sol.b

        k_pos, k_neg = _allocate([pos.size, neg.size], k0)
        asg = np.empty(n, dtype=np.int64)
        la = one_step_kmeans(scores[pos], k_pos)
        lb = one_step_kmeans(scores[neg], k_neg)
        asg[pos] = la
        asg[neg] = la.max() + 1 + lb
        return ClusterPartition.from_assignment(asg)

    def num_clusters(self, partition) -> int:
        return partition.num_clusters

    def all_singletons(self, partition) -> bool:
        return partition.all_singletons

    def snapshot_state(self, partition):
        return partition.assignment.copy()

    def aggregate(self, partition) -> SvmAggregate:
        if self.use_gram:
            return aggregate_kernel(partition, self.gram, self.y)
        return aggregate_linear(partition, self.X, self.y)

    def solve(self, agg: SvmAggregate):
        if agg.gram is not None:
            sol = solve_weighted_svm(gram=agg.gram, y=agg.labels, weights=agg.weights, M=self.M)
            coef = sol.alpha * agg.labels
            norm_sq = float(coef @ (agg.gram @ coef))
        else:
            sol = solve_weighted_svm(X=agg.centroids, y=agg.labels, weights=agg.weights, M=self.M)
            norm_sq = float(sol.w @ sol.w)
        iterate = SvmIterate(
            dual=sol.dual,
            w=sol.w,
            b=sol.b,
            F=sol.objective,
            norm_sq=norm_sq,
            aggregate=agg,
        )
        return iterate, sol.objective

    def solve_aggregated(self, partition):
        iterate, F = self.solve(self.aggregate(partition))
        return iterate, F, True

    # -- conversions ----------------------------------------------------------

    def decision_values(self, iterate: SvmIterate) -> np.ndarray:
        """Decision values on the original entries (hyperplane copied)."""
        if iterate.scores is None:
            if self.use_gram:
                coef = iterate.dual.alpha * iterate.aggregate.labels
                spread = np.asarray(iterate.aggregate.mean_indicator @ coef).ravel()
                iterate.scores = np.asarray(self.gram @ spread).ravel() + iterate.b
            else:
                iterate.scores = np.asarray(self.X @ iterate.w).ravel() + iterate.b
        return iterate.scores

    def evaluate(self, iterate: SvmIterate) -> float:
        """Original-data objective of the converted solution."""
        f = self.decision_values(iterate)
        iterate.xi = np.maximum(0.0, 1.0 - self.y * f)
        return 0.5 * iterate.norm_sq + self.M * float(iterate.xi.sum())

    def hinge_positive(self, iterate: SvmIterate) -> np.ndarray:
        f = self.decision_values(iterate)
        return (1.0 - self.y * f) > HINGE_EPS

    def check_optimality(self, partition, iterate) -> bool:
        """True iff no cluster straddles its margin-shifted hyperplane."""
        pos = self.hinge_positive(iterate)
        for cid in partition.cluster_ids():
            p = pos[partition.members(cid)]
            if p.any() and not p.all():
                return False
        return True

    def decluster(self, partition, iterate):
        pos = self.hinge_positive(iterate)
        any_split = False
        for cid in partition.cluster_ids():
            idx = partition.members(cid)
            p = pos[idx]
            if p.any() and not p.all():
                any_split |= partition.split_cluster(cid, [idx[p], idx[~p]])
        return partition, any_split

    def disaggregate_dual(self, iterate: SvmIterate, partition) -> np.ndarray:
        return disaggregate_dual(iterate.dual, partition, self.M)

    def training_rate(self, iterate: SvmIterate) -> float:
        f = self.decision_values(iterate)
        pred = np.where(f >= 0, 1.0, -1.0)
        return float(np.mean(pred == self.y))
