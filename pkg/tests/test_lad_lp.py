import numpy as np
import pytest

from aggrefine.subsolvers.lad_lp import solve_weighted_lad

from conftest import brute_force_lad, weighted_median_objective


def test_intercept_only_unit_weights():
    # weighted-median oracle: median of (1, 2, 10) is 2, objective 9
    beta, F = solve_weighted_lad(np.ones((3, 1)), [1.0, 2.0, 10.0], [1.0, 1.0, 1.0])
    assert beta[0] == pytest.approx(2.0, abs=1e-9)
    assert F == pytest.approx(9.0, abs=1e-9)


def test_intercept_only_heavy_tail_weight():
    # cumulative weight reaches half at y=10: objective |1-10| + |2-10| = 17
    beta, F = solve_weighted_lad(np.ones((3, 1)), [1.0, 2.0, 10.0], [1.0, 1.0, 5.0])
    assert beta[0] == pytest.approx(10.0, abs=1e-9)
    assert F == pytest.approx(17.0, abs=1e-9)


def test_weighted_median_randomized(rng):
    for _ in range(10):
        k = int(rng.integers(3, 12))
        y = rng.normal(size=k)
        w = rng.uniform(0.5, 4.0, size=k)
        med, obj = weighted_median_objective(y, w)
        beta, F = solve_weighted_lad(np.ones((k, 1)), y, w)
        assert F == pytest.approx(obj, abs=1e-8)


def test_exact_fit_zero_objective(rng):
    X = rng.normal(size=(20, 3))
    beta_true = np.array([1.0, -2.0, 0.5])
    beta, F = solve_weighted_lad(X, X @ beta_true, np.ones(20))
    assert F == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(beta, beta_true, atol=1e-7)


def test_matches_interpolating_subset_oracle(rng):
    for seed in range(8):
        g = np.random.default_rng(seed)
        k = int(g.integers(6, 12))
        m = int(g.integers(1, 4))
        X = g.normal(size=(k, m))
        y = g.normal(size=k)
        w = g.uniform(0.5, 3.0, size=k)
        _, best = brute_force_lad(X, y, w)
        beta, F = solve_weighted_lad(X, y, w)
        assert F == pytest.approx(best, rel=1e-8, abs=1e-8)


def test_vertex_interpolates_m_rows(rng):
    # LP vertex: at most k - m rows carry nonzero residual
    for seed in range(5):
        g = np.random.default_rng(seed)
        k, m = 30, 3
        X = g.normal(size=(k, m))
        y = g.normal(size=k)
        beta, _ = solve_weighted_lad(X, y, np.ones(k))
        resid = y - X @ beta
        zeros = np.sum(np.abs(resid) <= 1e-7 * (1 + np.abs(y)))
        assert zeros >= m


def test_complementary_deviations():
    # split deviations from any residual vector satisfy u*v = 0 exactly
    beta, _ = solve_weighted_lad(np.ones((3, 1)), [1.0, 2.0, 10.0], [1.0, 1.0, 1.0])
    r = np.array([1.0, 2.0, 10.0]) - beta[0]
    u, v = np.maximum(r, 0), np.maximum(-r, 0)
    assert np.all(u * v == 0)


def test_rejects_bad_weights():
    with pytest.raises(ValueError):
        solve_weighted_lad(np.ones((2, 1)), [1.0, 2.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        solve_weighted_lad(np.ones((2, 1)), [1.0, 2.0], [1.0])


def test_sparse_rows_accepted():
    import scipy.sparse as sp

    X = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    beta, F = solve_weighted_lad(X, [1.0, 2.0, 3.0], np.ones(3))
    assert F == pytest.approx(0.0, abs=1e-9)
