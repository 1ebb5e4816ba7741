"""Run-versus-direct-solve comparison metrics and rate diagnostics."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import RunConfig, RunLog, run
from .subsolvers.bnb import solve_s3vm_bnb
from .subsolvers.lad_lp import solve_weighted_lad
from .subsolvers.svm_dual import solve_weighted_svm

__all__ = ["Metrics", "compare", "direct_solve", "diagnose_rates"]


@dataclass
class Metrics:
    rho: float  # time ratio refined / direct
    delta: float  # relative objective difference
    gamma: float | None  # training-classification-rate difference
    r_T: float
    T: int
    E_refined: float
    E_direct: float
    time_refined: float
    time_direct: float

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "delta": self.delta,
            "gamma": self.gamma,
            "r_T": self.r_T,
            "T": self.T,
            "E_refined": self.E_refined,
            "E_direct": self.E_direct,
            "time_refined": self.time_refined,
            "time_direct": self.time_direct,
        }


def direct_solve(problem):
    """Full-data solve with the same subsolver tolerances as the loop.

    Returns (objective, training_rate or None, seconds).
    """
    t0 = time.perf_counter()
    if problem.name == "lad":
        _, F = solve_weighted_lad(problem.X, problem.y, np.ones(problem.n_entries))
        rate = None
    elif problem.name == "svm":
        if problem.use_gram:
            sol = solve_weighted_svm(
                gram=problem.gram, y=problem.y,
                weights=np.ones(problem.n_entries), M=problem.M,
            )
            f = problem.gram @ (sol.alpha * problem.y) + sol.b
        else:
            sol = solve_weighted_svm(
                X=problem.X, y=problem.y,
                weights=np.ones(problem.n_entries), M=problem.M,
            )
            f = np.asarray(problem.X @ sol.w).ravel() + sol.b
        F = sol.objective
        rate = float(np.mean(np.where(f >= 0, 1.0, -1.0) == problem.y))
    elif problem.name == "s3vm":
        res = solve_s3vm_bnb(
            problem.X_l,
            problem.y_l,
            problem.cost_l_entry,
            problem.X_u,
            problem.Mu * np.ones(problem.u),
            fixed_offset=problem.fixed_offset,
        )
        F = res.objective
        f_l = np.asarray(problem.X_l @ res.w).ravel() + res.b
        rate = float(np.mean(np.where(f_l >= 0, 1.0, -1.0) == problem.y_l))
    else:
        raise ValueError(f"unknown problem {problem.name!r}")
    return F, rate, time.perf_counter() - t0


def compare(problem, config: RunConfig | None = None) -> tuple[Metrics, RunLog]:
    """Run the refinement loop and the direct solve on the same instance."""
    t0 = time.perf_counter()
    log = run(problem, config)
    t_refined = time.perf_counter() - t0
    E_direct, rate_direct, t_direct = direct_solve(problem)
    E_refined = log.records[-1].E

    gamma = None
    if rate_direct is not None:
        gamma = problem.training_rate(log.model) - rate_direct
    if E_direct > 1e-12:
        delta = (E_refined - E_direct) / E_direct
    else:
        delta = 0.0 if E_refined <= 1e-12 else float("inf")
    return (
        Metrics(
            rho=t_refined / t_direct if t_direct > 0 else float("inf"),
            delta=delta,
            gamma=gamma,
            r_T=log.final_rate,
            T=log.T,
            E_refined=E_refined,
            E_direct=E_direct,
            time_refined=t_refined,
            time_direct=t_direct,
        ),
        log,
    )


def diagnose_rates(log: RunLog, problem) -> list[dict]:
    """Per-iteration aggregation rates split by distance to the hyperplane.

    For every iteration the entries are ranked by |residual| (L1 fit) or
    |decision value| (classifiers) under that iteration's model; clusters
    whose mean distance falls below the entry median count as "near".  The
    near/far rate is that group's cluster count over its entry count.
    Requires a run with ``keep_history=True``.
    """
    if not log.partition_trail:
        raise ValueError("run was made without keep_history=True")
    rows = []
    for record, model, snapshot in zip(log.records, log.model_trail, log.partition_trail):
        dist = _hyperplane_distance(problem, model)
        assignment = snapshot if not isinstance(snapshot, tuple) else _merge_assignments(snapshot)
        median = float(np.median(dist))
        ids, inv = np.unique(assignment, return_inverse=True)
        sums = np.bincount(inv, weights=dist)
        counts = np.bincount(inv)
        near_cluster = (sums / counts) < median
        near_entries = int(counts[near_cluster].sum())
        far_entries = int(counts[~near_cluster].sum())
        n_near = int(near_cluster.sum())
        n_far = int(ids.size - n_near)
        rows.append(
            {
                "t": record.t,
                "rate": record.rate,
                "near_clusters": n_near,
                "far_clusters": n_far,
                "near_entries": near_entries,
                "far_entries": far_entries,
                "near_rate": n_near / near_entries if near_entries else 0.0,
                "far_rate": n_far / far_entries if far_entries else 0.0,
            }
        )
    return rows


def _hyperplane_distance(problem, model) -> np.ndarray:
    if problem.name == "lad":
        return np.abs(problem.y - model.predict(problem.X))
    if problem.name == "svm":
        return np.abs(problem.decision_values(model))
    if problem.name == "s3vm":
        f_l, f_u = problem._scores(model)
        return np.abs(np.concatenate([f_l, f_u]))
    raise ValueError(f"unknown problem {problem.name!r}")


def _merge_assignments(snapshot) -> np.ndarray:
    asg_l, asg_u = snapshot
    if asg_u is None:
        return asg_l
    return np.concatenate([asg_l, asg_u + asg_l.max() + 1])
