"""Semi-supervised SVM adapter: separate labeled/unlabeled partitions,
branch-and-bound aggregated solves, error-minimizing label assignment,
two-way and four-way refinement, and the joint optimality certificate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterPartition, init_s3vm_clusters, initial_cluster_count
from .subsolvers.bnb import BnbResult, solve_s3vm_bnb

__all__ = ["S3vmAggregate", "S3vmIterate", "S3vmProblem", "assign_labels", "classify_margins"]

SIDE_EPS = 1e-9  # boundary hinge and side values count as nonpositive

BALANCE_MODES = ("none", "balance-constraint", "balance-cost")


def assign_labels(w, b, X_u) -> np.ndarray:
    """Error-minimizing labels for unlabeled rows: the side of the hyperplane
    (ties on the hyperplane go to +1)."""
    if X_u is None or X_u.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    f = np.asarray(X_u @ w).ravel() + b
    return np.where(f >= 0, 1, -1).astype(np.int64)


def classify_margins(w, b, X_l, y_l, X_u):
    """Margin-side classification of every entry.

    Labeled entries land in "+" (positive hinge) or "-"; unlabeled entries
    land in one of "++", "+-", "-+", "--" by (hinge sign, side sign) using
    the error-minimizing label, which the side sign determines, so no label
    vector is needed.  Boundary values count as nonpositive.
    """
    out_l = np.empty(0, dtype="U2")
    out_u = np.empty(0, dtype="U2")
    if X_l is not None and X_l.shape[0]:
        h = 1.0 - np.asarray(y_l, dtype=float) * (np.asarray(X_l @ w).ravel() + b)
        out_l = np.where(h > SIDE_EPS, "+", "-").astype("U2")
    if X_u is not None and X_u.shape[0]:
        f = np.asarray(X_u @ w).ravel() + b
        h = 1.0 - np.abs(f)  # hinge at the error-minimizing label
        hp = h > SIDE_EPS
        sp_ = f > SIDE_EPS
        out_u = np.char.add(np.where(hp, "+", "-"), np.where(sp_, "+", "-"))
    return out_l, out_u


@dataclass
class S3vmAggregate:
    centroids_l: np.ndarray
    labels_l: np.ndarray
    sizes_l: np.ndarray
    centroids_u: np.ndarray | None
    sizes_u: np.ndarray | None


@dataclass
class S3vmIterate:
    w: np.ndarray
    b: float
    d_clusters: np.ndarray  # labels chosen for the unlabeled clusters
    F: float
    exact: bool
    scores_l: np.ndarray | None = None
    scores_u: np.ndarray | None = None
    d: np.ndarray | None = None  # converted per-entry labels (set on evaluate)

    def summary(self) -> dict:
        return {
            "kind": "s3vm",
            "w": self.w.tolist(),
            "b": self.b,
            "objective": self.F,
            "bnb_exact": self.exact,
        }


class S3vmProblem:
    """Adapter wiring the semi-supervised SVM into the refinement loop.

    ``balance`` selects the unbalanced-data handling: "balance-constraint"
    pins the mean unlabeled decision value to the mean labeled label through
    a linear constraint on (w, b); "balance-cost" rescales the per-class
    labeled penalties (``balance_cost_swapped`` flips the printed multiplier
    assignment so the minority class is the one boosted).
    """

    name = "s3vm"
    supports_gap = False
    default_gap_tolerance = 0.0

    def __init__(
        self,
        X_l,
        y_l,
        X_u,
        Ml: float = 5.0,
        Mu: float = 1.0,
        balance: str = "none",
        balance_cost_swapped: bool = False,
        bnb_time_limit: float | None = None,
        bnb_node_limit: int | None = None,
    ):
        self.X_l = X_l
        self.y_l = np.asarray(y_l, dtype=float)
        self.X_u = X_u
        self.l = X_l.shape[0]
        self.u = 0 if X_u is None else X_u.shape[0]
        self.m = X_l.shape[1]
        self.n_entries = self.l + self.u
        if not np.all(np.isin(self.y_l, (-1.0, 1.0))):
            raise ValueError("labeled entries must carry -1/+1 labels")
        if not ((self.y_l > 0).any() and (self.y_l < 0).any()):
            raise ValueError("need labeled entries of both classes")
        if balance not in BALANCE_MODES:
            raise ValueError(f"balance must be one of {BALANCE_MODES}")
        self.Ml = float(Ml)
        self.Mu = float(Mu)
        self.balance = balance
        self.bnb_time_limit = bnb_time_limit
        self.bnb_node_limit = bnb_node_limit
        self.notes: list[str] = []

        n_pos = int((self.y_l > 0).sum())
        n_neg = int((self.y_l < 0).sum())
        if balance == "balance-cost":
            mult_neg = max(1.0, n_neg / n_pos)
            mult_pos = max(1.0, n_pos / n_neg)
            if balance_cost_swapped:
                mult_neg, mult_pos = mult_pos, mult_neg
        else:
            mult_neg = mult_pos = 1.0
        # per-entry labeled slack costs
        self.cost_l_entry = self.Ml * np.where(self.y_l > 0, mult_pos, mult_neg)

        if balance == "balance-constraint":
            if self.u == 0:
                raise ValueError("balance constraint needs unlabeled entries")
            Xu = np.asarray(X_u.todense()) if hasattr(X_u, "todense") else np.asarray(X_u)
            self.fixed_offset = (Xu.mean(axis=0), float(self.y_l.mean()))
        else:
            self.fixed_offset = None

    # -- loop protocol ------------------------------------------------------

    def init_state(self, config):
        floor = min(10, self.n_entries)
        if config.r0 is not None:
            k0 = max(int(np.ceil(config.r0 * self.n_entries)), floor)
        else:
            k0 = initial_cluster_count(self.n_entries, self.m, "s3vm")
        part_l, part_u, notes = init_s3vm_clusters(self.X_l, self.y_l, self.X_u, k0)
        self.notes.extend(notes)
        return part_l, part_u

    def num_clusters(self, state) -> int:
        part_l, part_u = state
        return part_l.num_clusters + (part_u.num_clusters if part_u else 0)

    def all_singletons(self, state) -> bool:
        part_l, part_u = state
        return part_l.all_singletons and (part_u.all_singletons if part_u else True)

    def snapshot_state(self, state):
        part_l, part_u = state
        return (
            part_l.assignment.copy(),
            part_u.assignment.copy() if part_u else None,
        )

    def aggregate(self, state) -> S3vmAggregate:
        from .svm import cluster_labels

        part_l, part_u = state
        cen_l, cnt_l = part_l.aggregate_rows(self.X_l)
        labels_l = cluster_labels(part_l, self.y_l)
        if part_u is not None:
            cen_u, cnt_u = part_u.aggregate_rows(self.X_u)
        else:
            cen_u, cnt_u = None, None
        return S3vmAggregate(cen_l, labels_l, cnt_l, cen_u, cnt_u)

    def _cluster_costs_l(self, part_l: ClusterPartition) -> np.ndarray:
        S = part_l.indicator()
        return np.asarray(S.T @ self.cost_l_entry).ravel()

    def solve_aggregated(self, state):
        part_l, part_u = state
        agg = self.aggregate(state)
        cost_l = self._cluster_costs_l(part_l)
        cost_u = self.Mu * agg.sizes_u if agg.sizes_u is not None else np.zeros(0)
        res: BnbResult = solve_s3vm_bnb(
            agg.centroids_l,
            agg.labels_l,
            cost_l,
            agg.centroids_u,
            cost_u,
            fixed_offset=self.fixed_offset,
            time_limit=self.bnb_time_limit,
            node_limit=self.bnb_node_limit,
        )
        iterate = S3vmIterate(
            w=res.w, b=res.b, d_clusters=res.d, F=res.objective, exact=res.exact
        )
        return iterate, res.objective, res.exact

    # -- conversions ----------------------------------------------------------

    def _scores(self, iterate: S3vmIterate):
        if iterate.scores_l is None:
            iterate.scores_l = np.asarray(self.X_l @ iterate.w).ravel() + iterate.b
            if self.u:
                iterate.scores_u = np.asarray(self.X_u @ iterate.w).ravel() + iterate.b
            else:
                iterate.scores_u = np.zeros(0)
        return iterate.scores_l, iterate.scores_u

    def assign_labels(self, iterate: S3vmIterate) -> np.ndarray:
        _, f_u = self._scores(iterate)
        return np.where(f_u >= 0, 1, -1).astype(np.int64)

    def evaluate(self, iterate: S3vmIterate) -> float:
        """Objective of the converted solution with error-minimizing labels.

        Uses the same per-class labeled costs as the aggregated solve so the
        two objectives stay comparable under the balance-cost mode.
        """
        f_l, f_u = self._scores(iterate)
        iterate.d = np.where(f_u >= 0, 1, -1).astype(np.int64)
        xi_l = np.maximum(0.0, 1.0 - self.y_l * f_l)
        xi_u = np.maximum(0.0, 1.0 - np.abs(f_u))
        norm_sq = float(iterate.w @ iterate.w)
        return (
            0.5 * norm_sq
            + float(self.cost_l_entry @ xi_l)
            + self.Mu * float(xi_u.sum())
        )

    def _labeled_hinge(self, iterate):
        f_l, _ = self._scores(iterate)
        return 1.0 - self.y_l * f_l

    def check_optimality(self, state, iterate) -> bool:
        """Joint certificate: every labeled cluster hinge-uniform, every
        unlabeled cluster inside one margin/side quadrant.

        Entries exactly on a boundary satisfy either hinge branch, so a
        cluster counts as uniform unless it has strictly positive and
        strictly negative hinge values (or straddles the hyperplane).
        """
        part_l, part_u = state
        h_l = self._labeled_hinge(iterate)
        for cid in part_l.cluster_ids():
            h = h_l[part_l.members(cid)]
            if (h > SIDE_EPS).any() and (h < -SIDE_EPS).any():
                return False
        if part_u is not None:
            _, f_u = self._scores(iterate)
            h_u = 1.0 - np.abs(f_u)
            for cid in part_u.cluster_ids():
                idx = part_u.members(cid)
                h, f = h_u[idx], f_u[idx]
                hinge_mixed = (h > SIDE_EPS).any() and (h < -SIDE_EPS).any()
                side_mixed = (f > SIDE_EPS).any() and not (f > SIDE_EPS).all()
                if hinge_mixed or side_mixed:
                    return False
        return True

    def decluster(self, state, iterate):
        part_l, part_u = state
        any_split = False
        h_l = self._labeled_hinge(iterate)
        pos_l = h_l > SIDE_EPS
        for cid in part_l.cluster_ids():
            idx = part_l.members(cid)
            p = pos_l[idx]
            if p.any() and not p.all():
                any_split |= part_l.split_cluster(cid, [idx[p], idx[~p]])
        if part_u is not None:
            _, f_u = self._scores(iterate)
            h_u = 1.0 - np.abs(f_u)
            quadrant = 2 * (h_u > SIDE_EPS) + (f_u > SIDE_EPS)
            for cid in part_u.cluster_ids():
                idx = part_u.members(cid)
                q = quadrant[idx]
                if np.all(q == q[0]):
                    continue
                groups = [idx[q == v] for v in range(4)]
                any_split |= part_u.split_cluster(cid, groups)
        return (part_l, part_u), any_split

    def classify_margins(self, iterate: S3vmIterate):
        return classify_margins(iterate.w, iterate.b, self.X_l, self.y_l, self.X_u)

    def training_rate(self, iterate: S3vmIterate) -> float:
        f_l, _ = self._scores(iterate)
        pred = np.where(f_l >= 0, 1.0, -1.0)
        return float(np.mean(pred == self.y_l))
