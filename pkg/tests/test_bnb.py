import numpy as np
import pytest

from aggrefine.subsolvers.bnb import solve_s3vm_bnb
from aggrefine.subsolvers.svm_dual import solve_weighted_svm

from conftest import enumerate_s3vm


def test_no_unlabeled_reduces_to_weighted_svm():
    g = np.random.default_rng(0)
    X = g.normal(size=(10, 2)) + np.array([1.0, -1.0] * 5)[:, None]
    y = np.array([1.0, -1.0] * 5)
    cost = g.uniform(0.5, 2.0, size=10)
    res = solve_s3vm_bnb(X, y, cost, np.zeros((0, 2)), np.zeros(0))
    ref = solve_weighted_svm(X=X, y=y, weights=cost, M=1.0)
    assert res.exact
    assert res.objective == pytest.approx(ref.objective, rel=1e-9, abs=1e-9)
    assert res.d.size == 0


def test_single_unlabeled_enumerates_both_labelings():
    X_l = np.array([[1.0, 0.0], [-1.0, 0.0]])
    y_l = np.array([1.0, -1.0])
    X_u = np.array([[0.2, 0.5]])
    best = np.inf
    for d in (1.0, -1.0):
        sol = solve_weighted_svm(
            X=np.vstack([X_l, X_u]),
            y=np.concatenate([y_l, [d]]),
            weights=np.array([5.0, 5.0, 1.0]),
            M=1.0,
        )
        best = min(best, sol.objective)
    res = solve_s3vm_bnb(X_l, y_l, np.array([5.0, 5.0]), X_u, np.array([1.0]))
    assert res.exact
    assert res.objective == pytest.approx(best, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_matches_exhaustive_enumeration(seed):
    g = np.random.default_rng(seed)
    l = int(g.integers(4, 9))
    u = int(g.integers(3, 8))
    X_l = g.normal(size=(l, 2)) + g.choice([-1.5, 1.5], size=l)[:, None]
    y_l = np.where(g.random(l) < 0.5, 1.0, -1.0)
    y_l[0], y_l[1] = 1.0, -1.0
    X_u = g.normal(size=(u, 2))
    Ml, Mu = 5.0, 1.0
    best, _ = enumerate_s3vm(X_l, y_l, X_u, Ml, Mu)
    res = solve_s3vm_bnb(X_l, y_l, Ml * np.ones(l), X_u, Mu * np.ones(u))
    assert res.exact
    assert res.objective == pytest.approx(best, rel=1e-8, abs=1e-8)


def test_node_limit_returns_inexact_incumbent():
    g = np.random.default_rng(1)
    X_l = g.normal(size=(6, 2)) + np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])[:, None]
    y_l = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
    X_u = g.normal(size=(8, 2))
    res = solve_s3vm_bnb(X_l, y_l, 5.0 * np.ones(6), X_u, np.ones(8), node_limit=1)
    assert not res.exact
    assert np.isfinite(res.objective)
    assert res.d.size == 8


def test_objective_matches_its_own_solution():
    g = np.random.default_rng(2)
    X_l = g.normal(size=(6, 2)) + np.array([2.0, -2.0] * 3)[:, None]
    y_l = np.array([1.0, -1.0] * 3)
    X_u = g.normal(size=(4, 2))
    res = solve_s3vm_bnb(X_l, y_l, 5.0 * np.ones(6), X_u, np.ones(4))
    norm_sq = float(res.w @ res.w)
    manual = (
        0.5 * norm_sq
        + 5.0 * float(res.xi_labeled.sum())
        + 1.0 * float(res.xi_unlabeled.sum())
    )
    assert res.objective == pytest.approx(manual, rel=1e-7, abs=1e-8)


def test_rejects_single_class_labeled():
    with pytest.raises(ValueError):
        solve_s3vm_bnb(np.eye(2), np.ones(2), np.ones(2), np.zeros((0, 2)), np.zeros(0))
