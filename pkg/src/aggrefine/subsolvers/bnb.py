"""Best-first branch-and-bound over unlabeled-cluster labels.

Each node fixes a subset of the unlabeled labels and solves the convex
weighted SVM on the labeled entities plus the fixed ones.  Dropping the
(nonnegative) hinge terms of the undecided entities makes every node value a
valid lower bound; completing the labels by the sign of the node's decision
values and re-solving gives incumbents.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .svm_dual import SvmSolution, solve_weighted_svm

__all__ = ["BnbResult", "solve_s3vm_bnb"]


@dataclass
class BnbResult:
    w: np.ndarray
    b: float
    d: np.ndarray  # +-1 per unlabeled entity
    xi_labeled: np.ndarray
    xi_unlabeled: np.ndarray
    objective: float
    exact: bool
    nodes: int


def _vstack(A, B):
    if A is None:
        return B
    if B is None:
        return A
    if sp.issparse(A) or sp.issparse(B):
        return sp.vstack([sp.csr_matrix(A), sp.csr_matrix(B)], format="csr")
    return np.vstack([A, B])


def solve_s3vm_bnb(
    X_l,
    y_l,
    cost_l,
    X_u,
    cost_u,
    *,
    fixed_offset=None,
    tol=1e-10,
    time_limit=None,
    node_limit=None,
):
    """Minimize 1/2||w||^2 + sum_l cost_l xi + sum_u cost_u xi over labels d.

    ``cost_*`` are the per-entity slack costs (penalty times cluster size).
    Returns the incumbent with ``exact``=False when a time or node limit
    stopped the search before the label space was exhausted.
    """
    y_l = np.asarray(y_l, dtype=float)
    cost_l = np.asarray(cost_l, dtype=float)
    cost_u = np.asarray(cost_u, dtype=float)
    u = 0 if X_u is None else X_u.shape[0]
    if not ((y_l > 0).any() and (y_l < 0).any()):
        raise ValueError("need at least one labeled entity per class")

    start = time.perf_counter()

    def solve_for(d_fixed: np.ndarray) -> tuple[SvmSolution, np.ndarray]:
        """Convex solve with the fixed-label entities; undecided are dropped."""
        idx = np.flatnonzero(d_fixed != 0)
        X = _vstack(X_l, X_u[idx] if idx.size else None)
        y = np.concatenate([y_l, d_fixed[idx]])
        cost = np.concatenate([cost_l, cost_u[idx]])
        sol = solve_weighted_svm(
            X=X, y=y, weights=cost, M=1.0, tol=tol, fixed_offset=fixed_offset
        )
        return sol, idx

    def unlabeled_scores(sol: SvmSolution) -> np.ndarray:
        if u == 0:
            return np.zeros(0)
        return np.asarray(X_u @ sol.w).ravel() + sol.b

    full_cache: dict[tuple, tuple[float, SvmSolution]] = {}

    def full_value(d_full: np.ndarray) -> tuple[float, SvmSolution]:
        key = tuple(int(v) for v in d_full)
        hit = full_cache.get(key)
        if hit is None:
            sol, _ = solve_for(d_full)
            hit = (sol.objective, sol)
            full_cache[key] = hit
        return hit

    nodes = 0
    exact = True
    incumbent_val = np.inf
    incumbent: tuple[np.ndarray, SvmSolution] | None = None

    root_d = np.zeros(u, dtype=np.int64)
    heap: list[tuple[float, int, np.ndarray, int]] = []
    counter = 0

    def push(d_fixed: np.ndarray) -> None:
        nonlocal counter, nodes, incumbent_val, incumbent
        nodes += 1
        sol, _ = solve_for(d_fixed)
        bound = sol.objective
        # complete undecided labels by the sign rule and record an incumbent
        scores = unlabeled_scores(sol)
        d_full = np.where(d_fixed != 0, d_fixed, np.where(scores >= 0, 1, -1)).astype(np.int64)
        val, full_sol = full_value(d_full)
        if val < incumbent_val - 1e-12:
            incumbent_val = val
            incumbent = (d_full, full_sol)
        undecided = np.flatnonzero(d_fixed == 0)
        if undecided.size and bound < incumbent_val - 1e-9 * max(1.0, abs(incumbent_val)):
            # branch on the undecided entity closest to the node's hyperplane
            pick = int(undecided[np.argmin(np.abs(scores[undecided]))])
            counter += 1
            heapq.heappush(heap, (bound, counter, d_fixed, pick))

    push(root_d)
    while heap:
        if time_limit is not None and time.perf_counter() - start > time_limit:
            exact = False
            break
        if node_limit is not None and nodes >= node_limit:
            exact = False
            break
        bound, _, d_fixed, pick = heapq.heappop(heap)
        if bound >= incumbent_val - 1e-9 * max(1.0, abs(incumbent_val)):
            continue
        for label in (1, -1):
            child = d_fixed.copy()
            child[pick] = label
            push(child)

    d_best, sol = incumbent
    scores = unlabeled_scores(sol)
    xi_u = np.maximum(0.0, 1.0 - d_best * scores)
    return BnbResult(
        w=sol.w,
        b=sol.b,
        d=d_best,
        xi_labeled=sol.xi[: y_l.size],
        xi_unlabeled=xi_u,
        objective=incumbent_val,
        exact=exact,
        nodes=nodes,
    )
