"""Weighted least-absolute-deviation regression as a linear program."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

__all__ = ["solve_weighted_lad", "LadSolverError"]


class LadSolverError(RuntimeError):
    pass


def solve_weighted_lad(X, y, weights):
    """Minimize sum_k w_k |y_k - x_k . beta| exactly.

    Split formulation with nonnegative deviations u, v and equality rows
    y - X beta = u - v, solved by HiGHS at tight feasibility tolerances.
    Returns (beta, objective).
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    k = y.size
    if k < 1:
        raise ValueError("need at least one row")
    if X.shape[0] != k or w.size != k:
        raise ValueError("inconsistent dimensions")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    m = X.shape[1]

    eye = sp.identity(k, format="csc")
    Xs = sp.csc_matrix(X)
    A_eq = sp.hstack([Xs, eye, -eye], format="csc")
    c = np.concatenate([np.zeros(m), w, w])
    bounds = [(None, None)] * m + [(0, None)] * (2 * k)
    res = linprog(
        c,
        A_eq=A_eq,
        b_eq=y,
        bounds=bounds,
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-9,
            "dual_feasibility_tolerance": 1e-9,
        },
    )
    if res.status != 0:
        raise LadSolverError(f"LP solve failed (status {res.status}): {res.message}")
    beta = res.x[:m]
    return beta, float(res.fun)
