"""Cluster partitions, one-step k-means seeding, and per-problem initializers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ClusterPartition",
    "one_step_kmeans",
    "initial_cluster_count",
    "init_lad_clusters",
    "init_svm_clusters",
    "init_s3vm_clusters",
    "sample_size_for_init",
]


class PartitionError(ValueError):
    pass


@dataclass
class ClusterPartition:
    """Partition of entry indices 0..n-1 into non-empty clusters.

    Every entry belongs to exactly one cluster; empty clusters are never
    stored.  Cluster ids are stable across splits (new sub-clusters receive
    fresh ids), and ``generation`` increases on every mutation.
    """

    n: int
    assignment: np.ndarray
    _members: dict[int, np.ndarray] = field(repr=False)
    generation: int = 0
    _next_id: int = 0

    @classmethod
    def from_assignment(cls, labels) -> "ClusterPartition":
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.size == 0:
            raise PartitionError("assignment must be a non-empty 1-d array")
        uniq, inv = np.unique(labels, return_inverse=True)
        n = labels.size
        assignment = inv.astype(np.int64)
        members = {}
        order = np.argsort(assignment, kind="stable")
        sorted_asg = assignment[order]
        boundaries = np.flatnonzero(np.diff(sorted_asg)) + 1
        for cid, idx in enumerate(np.split(order, boundaries)):
            members[cid] = np.sort(idx)
        return cls(n=n, assignment=assignment, _members=members, _next_id=len(uniq))

    @classmethod
    def singletons(cls, n: int) -> "ClusterPartition":
        return cls.from_assignment(np.arange(n))

    # -- queries ----------------------------------------------------------

    @property
    def num_clusters(self) -> int:
        return len(self._members)

    def cluster_ids(self) -> list[int]:
        return sorted(self._members)

    def members(self, cid: int) -> np.ndarray:
        return self._members[cid]

    def sizes(self) -> np.ndarray:
        return np.array([self._members[c].size for c in self.cluster_ids()])

    @property
    def all_singletons(self) -> bool:
        return len(self._members) == self.n

    def indicator(self) -> sp.csr_matrix:
        """n x K 0/1 matrix; column order follows cluster_ids()."""
        ids = self.cluster_ids()
        col_of = {c: j for j, c in enumerate(ids)}
        cols = np.array([col_of[c] for c in self.assignment], dtype=np.int64)
        data = np.ones(self.n)
        return sp.csr_matrix((data, (np.arange(self.n), cols)), shape=(self.n, len(ids)))

    def check_consistent(self) -> None:
        seen = np.full(self.n, -1, dtype=np.int64)
        for cid, idx in self._members.items():
            if idx.size == 0:
                raise PartitionError("empty cluster stored")
            if np.any(seen[idx] != -1):
                raise PartitionError("overlapping clusters")
            seen[idx] = cid
        if np.any(seen == -1):
            raise PartitionError("uncovered entries")
        if not np.array_equal(seen, self.assignment):
            raise PartitionError("assignment and members disagree")

    # -- mutation ---------------------------------------------------------

    def split_cluster(self, cid: int, groups) -> bool:
        """Replace cluster ``cid`` by the non-empty groups.

        ``groups`` must partition the cluster's members.  Returns True when
        the partition actually changed (more than one non-empty group).
        """
        old = self._members[cid]
        groups = [np.sort(np.asarray(g, dtype=np.int64)) for g in groups]
        nonempty = [g for g in groups if g.size > 0]
        if not nonempty:
            raise PartitionError("at least one non-empty group required")
        merged = np.sort(np.concatenate(nonempty))
        if merged.size != old.size or np.any(merged != old):
            raise PartitionError(f"groups do not partition cluster {cid}")
        if len(nonempty) == 1:
            return False
        del self._members[cid]
        for g in nonempty:
            new_id = self._next_id
            self._next_id += 1
            self._members[new_id] = g
            self.assignment[g] = new_id
        self.generation += 1
        return True

    def aggregate_rows(self, X):
        """Per-cluster sums, means, and counts of the rows of X.

        Returns (means, counts) with rows ordered by cluster_ids(); means is
        a dense array even for sparse X.
        """
        S = self.indicator()
        sums = S.T @ X
        if sp.issparse(sums):
            sums = sums.toarray()
        sums = np.asarray(sums)
        counts = self.sizes().astype(float)
        return sums / counts[:, None], counts


# -- one-step k-means ------------------------------------------------------


def one_step_kmeans(points, k: int) -> np.ndarray:
    """Single assignment step of k-means with deterministic quantile seeds.

    Seeds are placed at per-coordinate quantiles (levels (j+0.5)/k); if k
    reaches the number of distinct points the distinct points themselves act
    as seeds, so duplicates collapse and distinct points become singletons.
    Coordinates are scaled to unit spread before distances are taken.  Ties
    go to the lower seed index.  Returns compacted cluster labels.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if k < 1:
        raise PartitionError("k must be >= 1")
    scale = pts.std(axis=0)
    scale[scale == 0] = 1.0
    pts = pts / scale

    uniq = np.unique(pts, axis=0)
    if k >= uniq.shape[0]:
        seeds = uniq
    else:
        levels = (np.arange(k) + 0.5) / k
        seeds = np.quantile(pts, levels, axis=0)

    # nearest seed; argmin takes the first (lowest-index) minimizer
    d2 = ((pts[:, None, :] - seeds[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    _, compact = np.unique(labels, return_inverse=True)
    return compact


# -- initial cluster counts -------------------------------------------------


def initial_cluster_count(n: int, m: int, problem: str) -> int:
    """Number of initial clusters for a given problem kind.

    LAD scales with the attribute count and keeps at least one cluster more
    than the number of attributes; SVM uses a thinner rate with at least one
    cluster per label; the semi-supervised variant uses a size-dependent
    constant rate with a floor of ten clusters.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if problem == "lad":
        if n <= m:
            raise ValueError(f"LAD needs n > m (got n={n}, m={m})")
        if m * n > 5e8:
            r0 = max(3.0 * m / n, 0.0005)
        else:
            r0 = max(2.0 * m / n, 0.0005)
        k0 = int(np.ceil(r0 * n))
        k0 = max(k0, m + 1)
    elif problem == "svm":
        r0 = max(1.1 * m / n, 0.0001)
        k0 = max(int(np.ceil(r0 * n)), 2)
    elif problem == "s3vm":
        r0 = 0.01 if n <= 10_000 else 0.0001
        k0 = max(int(np.ceil(r0 * n)), 10)
    else:
        raise ValueError(f"unknown problem kind {problem!r}")
    return min(k0, n)


def sample_size_for_init(n: int, m: int) -> int:
    return min(max(10 * m, 200), n)


# -- initializers ------------------------------------------------------------


def _as_dense(X):
    return X.toarray() if sp.issparse(X) else np.asarray(X, dtype=float)


def init_lad_clusters(X, y, k0: int, rng: np.random.Generator) -> ClusterPartition:
    """Initial clusters for L1 regression: one k-means step on (residual, y).

    A small row sample is fitted first to obtain residuals for all rows; a
    rank-deficient sample falls back to quantile binning on y alone.
    """
    from .subsolvers.lad_lp import solve_weighted_lad

    n, m = X.shape
    if k0 <= m:
        raise ValueError(f"LAD needs more clusters than attributes (k0={k0}, m={m})")
    y = np.asarray(y, dtype=float)
    size = sample_size_for_init(n, m)
    sample = np.sort(rng.choice(n, size=size, replace=False))
    Xs = _as_dense(X[sample])
    if np.linalg.matrix_rank(Xs) < min(m, size):
        labels = one_step_kmeans(y, k0)
    else:
        beta, _ = solve_weighted_lad(Xs, y[sample], np.ones(size))
        resid = y - np.asarray(X @ beta).ravel()
        labels = one_step_kmeans(np.column_stack([resid, y]), k0)
    return ClusterPartition.from_assignment(labels)


def _allocate(counts, k_total):
    """Proportional allocation with a floor of one per non-empty group."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    raw = np.maximum(1, np.round(k_total * counts / total).astype(int))
    # trim any overshoot from the largest allocations
    while raw.sum() > max(k_total, len(counts)):
        raw[np.argmax(raw)] -= 1
    return raw


def init_svm_clusters(X, y, k0: int, M: float, rng: np.random.Generator) -> ClusterPartition:
    """Label-pure initial clusters from one k-means step on the signed
    distance to a hyperplane fitted on a row sample.

    The two label groups are clustered separately so no cluster ever mixes
    labels; the cluster budget is split proportionally to class sizes.
    """
    from .subsolvers.svm_dual import solve_weighted_svm

    n, m = X.shape
    y = np.asarray(y, dtype=float)
    pos = np.flatnonzero(y > 0)
    neg = np.flatnonzero(y < 0)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both labels must be present")
    if k0 < 2:
        raise ValueError("need at least one cluster per label")

    size = sample_size_for_init(n, m)
    # stratified sample so the pilot model sees both classes
    n_pos = min(pos.size, max(1, int(round(size * pos.size / n))))
    n_neg = min(neg.size, max(1, size - n_pos))
    sample = np.concatenate([
        rng.choice(pos, size=n_pos, replace=False),
        rng.choice(neg, size=n_neg, replace=False),
    ])
    sol = solve_weighted_svm(
        X=_as_dense(X[sample]), y=y[sample], weights=np.ones(sample.size), M=M
    )
    norm = np.linalg.norm(sol.w)
    scores = (np.asarray(X @ sol.w).ravel() + sol.b) / (norm if norm > 0 else 1.0)

    k_pos, k_neg = _allocate([pos.size, neg.size], k0)
    labels = np.empty(n, dtype=np.int64)
    lab_pos = one_step_kmeans(scores[pos], k_pos)
    lab_neg = one_step_kmeans(scores[neg], k_neg)
    labels[pos] = lab_pos
    labels[neg] = lab_pos.max() + 1 + lab_neg
    return ClusterPartition.from_assignment(labels)


def init_s3vm_clusters(X_l, y_l, X_u, k0: int):
    """Initial clusters for the semi-supervised case.

    Three independent one-step k-means runs in feature space: labeled +1,
    labeled -1, and unlabeled entries.  Returns (labeled partition,
    unlabeled partition, notes); a class with no labeled entries is skipped
    and reported in the notes.
    """
    y_l = np.asarray(y_l, dtype=float)
    l = X_l.shape[0] if X_l is not None else 0
    u = X_u.shape[0] if X_u is not None else 0
    if k0 < min(10, l + u):
        raise ValueError("need at least 10 clusters in total")
    pos = np.flatnonzero(y_l > 0)
    neg = np.flatnonzero(y_l < 0)
    notes = []

    group_sizes = []
    for name, idx in (("labeled+1", pos), ("labeled-1", neg), ("unlabeled", np.arange(u))):
        if idx.size == 0:
            notes.append(f"{name}: no entries, clustering run skipped")
        group_sizes.append(idx.size)

    present = [s for s in group_sizes if s > 0]
    alloc_present = _allocate(present, k0)
    alloc = []
    it = iter(alloc_present)
    for s in group_sizes:
        alloc.append(next(it) if s > 0 else 0)

    labels_l = np.empty(l, dtype=np.int64)
    offset = 0
    for idx, k in ((pos, alloc[0]), (neg, alloc[1])):
        if idx.size == 0:
            continue
        lab = one_step_kmeans(_as_dense(X_l[idx]), k)
        labels_l[idx] = offset + lab
        offset += lab.max() + 1
    part_l = ClusterPartition.from_assignment(labels_l) if l > 0 else None

    lab_u = one_step_kmeans(_as_dense(X_u), alloc[2]) if u > 0 else None
    part_u = ClusterPartition.from_assignment(lab_u) if u > 0 else None
    return part_l, part_u, notes
