import numpy as np
import pytest

from aggrefine.subsolvers.svm_dual import SvmSolverError, solve_weighted_svm

from conftest import cvxopt_svm_dual


def two_point_instance():
    return np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([1.0, -1.0])


def test_two_points_interior_dual():
    # by hand: alpha = (0.5, 0.5) satisfies all KKT conditions
    X, y = two_point_instance()
    sol = solve_weighted_svm(X=X, y=y, weights=np.ones(2), M=10.0)
    assert np.allclose(sol.w, [1.0, 0.0], atol=1e-8)
    assert sol.b == pytest.approx(0.0, abs=1e-8)
    assert np.allclose(sol.xi, 0.0, atol=1e-8)
    assert sol.objective == pytest.approx(0.5, abs=1e-8)
    assert np.allclose(sol.alpha, 0.5, atol=1e-8)


def test_scaled_weights_do_not_bind():
    # alpha = 0.5 stays interior to [0, 30]: identical hyperplane
    X, y = two_point_instance()
    sol = solve_weighted_svm(X=X, y=y, weights=np.array([3.0, 3.0]), M=10.0)
    assert np.allclose(sol.w, [1.0, 0.0], atol=1e-8)
    assert sol.b == pytest.approx(0.0, abs=1e-8)


def test_small_penalty_hits_box():
    # closed form of the 2-variable QP: both alphas clip at M = 0.01,
    # w = 1/50, xi = 0.98, primal = dual = 0.0198
    X, y = two_point_instance()
    sol = solve_weighted_svm(X=X, y=y, weights=np.ones(2), M=0.01)
    assert np.allclose(sol.alpha, 0.01)
    assert sol.w[0] == pytest.approx(0.02, abs=1e-12)
    assert np.allclose(sol.xi, 0.98, atol=1e-10)
    assert sol.objective == pytest.approx(0.0198, abs=1e-10)
    assert abs(sol.objective - sol.dual_objective) <= 1e-6


def _random_instance(seed, k=24, m=3, weighted=True):
    g = np.random.default_rng(seed)
    X = g.normal(size=(k, m)) + g.choice([-1.0, 1.0], size=k)[:, None]
    y = np.sign(X[:, 0] + 0.3 * g.normal(size=k))
    y[y == 0] = 1.0
    if not ((y > 0).any() and (y < 0).any()):
        y[0] = -y[0]
    w = g.uniform(1.0, 5.0, size=k) if weighted else np.ones(k)
    return X, y, w


@pytest.mark.parametrize("seed", range(6))
def test_against_interior_point_oracle(seed):
    X, y, w = _random_instance(seed)
    M = 0.5
    sol = solve_weighted_svm(X=X, y=y, weights=w, M=M)
    _, dual_ref = cvxopt_svm_dual(y, w * M, X @ X.T)
    assert sol.dual_objective == pytest.approx(dual_ref, rel=1e-7, abs=1e-7)
    assert sol.objective >= dual_ref - 1e-6 * max(1.0, sol.objective)


def test_gram_and_rows_agree():
    X, y, w = _random_instance(3)
    a = solve_weighted_svm(X=X, y=y, weights=w, M=0.5)
    b = solve_weighted_svm(gram=X @ X.T, y=y, weights=w, M=0.5)
    assert a.objective == pytest.approx(b.objective, abs=1e-8)
    assert a.dual_objective == pytest.approx(b.dual_objective, abs=1e-8)


def test_dual_feasibility_invariants():
    X, y, w = _random_instance(7, k=40)
    M = 0.3
    sol = solve_weighted_svm(X=X, y=y, weights=w, M=M)
    assert abs(float(sol.alpha @ y)) <= 1e-8
    assert np.all(sol.alpha >= 0.0)
    assert np.all(sol.alpha <= w * M + 1e-12)


def test_complementary_slackness():
    X, y, w = _random_instance(11, k=30)
    M = 0.4
    sol = solve_weighted_svm(X=X, y=y, weights=w, M=M)
    f = X @ sol.w + sol.b
    margin = y * f - 1.0
    upper = w * M
    for a_k, m_k, u_k in zip(sol.alpha, margin, upper):
        if a_k < 1e-9:
            assert m_k >= -1e-6
        elif a_k > u_k - 1e-9:
            assert m_k <= 1e-6
        else:
            assert abs(m_k) <= 1e-6


def test_weak_duality():
    for seed in range(4):
        X, y, w = _random_instance(seed, k=35)
        sol = solve_weighted_svm(X=X, y=y, weights=w, M=0.2)
        assert sol.objective >= sol.dual_objective - 1e-6 * max(1.0, sol.objective)


def test_degenerate_duplicates_escalate_cleanly():
    # many exact duplicates force the flat-face tail the ascent cannot
    # resolve alone; the finisher must still certify the solve
    g = np.random.default_rng(0)
    base = g.normal(size=(8, 4))
    X = np.tile(base, (25, 1))
    y = np.tile(np.array([1.0, -1.0] * 4), 25)
    w = g.uniform(1.0, 20.0, size=200)
    sol = solve_weighted_svm(X=X, y=y, weights=w, M=0.1)
    _, dual_ref = cvxopt_svm_dual(y, w * 0.1, X @ X.T)
    assert sol.dual_objective == pytest.approx(dual_ref, rel=1e-9, abs=1e-7)
    assert sol.kkt_violation <= 1e-6


def test_fixed_offset_constraint_holds():
    X, y, w = _random_instance(5, k=20)
    c = X.mean(axis=0)
    g_val = 0.25
    sol = solve_weighted_svm(X=X, y=y, weights=w, M=0.5, fixed_offset=(c, g_val))
    assert float(sol.w @ c) + sol.b == pytest.approx(g_val, abs=1e-10)
    # slacks follow the original constraint with the pinned offset
    f = X @ sol.w + sol.b
    assert np.allclose(sol.xi, np.maximum(0.0, 1.0 - y * f), atol=1e-10)


def test_fixed_offset_against_penalized_reference():
    # eliminate the offset by hand and compare objectives against cvxopt
    from cvxopt import matrix, solvers

    X, y, w = _random_instance(9, k=15)
    M = 0.5
    c = X.mean(axis=0)
    g_val = -0.1
    sol = solve_weighted_svm(X=X, y=y, weights=w, M=M, fixed_offset=(c, g_val))
    Xs = X - c
    K = Xs @ Xs.T
    Q = np.outer(y, y) * K + 1e-12 * np.eye(15)
    p = 1.0 - y * g_val
    opts = {"show_progress": False, "abstol": 1e-12, "reltol": 1e-12, "feastol": 1e-12}
    ref = solvers.qp(
        matrix(Q), matrix(-p),
        matrix(np.vstack([np.eye(15), -np.eye(15)])),
        matrix(np.concatenate([w * M, np.zeros(15)])),
        options=opts,
    )
    a_ref = np.asarray(ref["x"]).ravel()
    dual_ref = float(p @ a_ref) - 0.5 * float(a_ref @ (Q @ a_ref))
    assert sol.dual_objective == pytest.approx(dual_ref, rel=1e-7, abs=1e-7)


def test_rejects_single_class():
    X = np.random.default_rng(0).normal(size=(5, 2))
    with pytest.raises(ValueError):
        solve_weighted_svm(X=X, y=np.ones(5), weights=np.ones(5), M=1.0)


def test_rejects_bad_labels():
    X = np.eye(3)
    with pytest.raises(ValueError):
        solve_weighted_svm(X=X, y=np.array([1.0, 2.0, -1.0]), weights=np.ones(3), M=1.0)


def test_error_carries_violation():
    err = SvmSolverError("nope", kkt_violation=0.5)
    assert err.kkt_violation == 0.5
