import itertools

import numpy as np
import pytest

from aggrefine.subsolvers.svm_dual import solve_weighted_svm


def brute_force_lad(X, y, w):
    """Independent LAD oracle: search all interpolating m-subsets.

    A full-column-rank L1 fit attains its optimum at a vertex interpolating
    m rows, so the best objective over all invertible m-subsets is optimal.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    n, m = X.shape
    best = np.inf
    best_beta = None
    for rows in itertools.combinations(range(n), m):
        sub = X[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        beta = np.linalg.solve(sub, y[list(rows)])
        obj = float(w @ np.abs(y - X @ beta))
        if obj < best:
            best, best_beta = obj, beta
    return best_beta, best


def weighted_median_objective(y, w):
    """Intercept-only LAD oracle: sort and accumulate weights."""
    order = np.argsort(y)
    ys, ws = np.asarray(y, float)[order], np.asarray(w, float)[order]
    half = ws.sum() / 2.0
    cum = np.cumsum(ws)
    med = ys[np.searchsorted(cum, half)]
    return med, float(np.sum(ws * np.abs(ys - med)))


def cvxopt_svm_dual(y, upper, K):
    """Independent convex oracle for the SVM dual (interior point)."""
    from cvxopt import matrix, solvers

    opts = {"show_progress": False, "abstol": 1e-12, "reltol": 1e-12, "feastol": 1e-12}
    k = len(y)
    Q = (np.outer(y, y)) * K
    sol = solvers.qp(
        matrix(Q),
        matrix(-np.ones(k)),
        matrix(np.vstack([np.eye(k), -np.eye(k)])),
        matrix(np.concatenate([upper, np.zeros(k)])),
        matrix(np.asarray(y, float).reshape(1, -1)),
        matrix(np.zeros(1)),
        options=opts,
    )
    alpha = np.asarray(sol["x"]).ravel()
    dual = float(alpha.sum()) - 0.5 * float(alpha @ (Q @ alpha))
    return alpha, dual


def enumerate_s3vm(X_l, y_l, X_u, Ml, Mu):
    """Exhaustive oracle: solve the convex problem for every labeling."""
    u = X_u.shape[0]
    X = np.vstack([np.asarray(X_l, float), np.asarray(X_u, float)])
    costs = np.concatenate([Ml * np.ones(len(y_l)), Mu * np.ones(u)])
    best, best_d = np.inf, None
    for bits in itertools.product((1.0, -1.0), repeat=u):
        yy = np.concatenate([y_l, np.asarray(bits)])
        sol = solve_weighted_svm(X=X, y=yy, weights=costs, M=1.0)
        if sol.objective < best:
            best, best_d = sol.objective, np.asarray(bits)
    return best, best_d


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
