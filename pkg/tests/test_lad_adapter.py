import numpy as np
import pytest

from aggrefine.clustering import ClusterPartition
from aggrefine.core import RunConfig, run
from aggrefine.data import generate_lad
from aggrefine.lad import LadModel, LadProblem, aggregate
from aggrefine.subsolvers.lad_lp import solve_weighted_lad


def test_aggregate_singleton_identity():
    part = ClusterPartition.from_assignment([0])
    agg = aggregate(part, np.array([[1.0]]), np.array([2.0]))
    assert agg.centroids[0, 0] == 1.0
    assert agg.responses[0] == 2.0
    assert agg.weights[0] == 1.0


def test_aggregate_two_point_mean():
    part = ClusterPartition.from_assignment([0, 0])
    agg = aggregate(part, np.array([[1.0], [3.0]]), np.array([2.0, 4.0]))
    assert agg.centroids[0, 0] == 2.0
    assert agg.responses[0] == 3.0
    assert agg.weights[0] == 2.0


def test_aggregate_preserves_weighted_sums(rng):
    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    part = ClusterPartition.from_assignment(rng.integers(0, 7, size=40))
    agg = aggregate(part, X, y)
    lhs = agg.weights[:, None] * agg.centroids
    scale = np.abs(X).sum()
    assert np.abs(lhs.sum(axis=0) - X.sum(axis=0)).max() <= 1e-12 * max(scale, 1.0)
    assert abs(float(agg.weights @ agg.responses) - y.sum()) <= 1e-12 * max(np.abs(y).sum(), 1.0)


def test_evaluate_simple():
    prob = LadProblem(np.ones((2, 1)), np.array([0.0, 3.0]))
    assert prob.evaluate(LadModel(beta=np.array([0.0]))) == pytest.approx(3.0)


def test_evaluate_exact_fit_zero(rng):
    X = rng.normal(size=(15, 2))
    beta = np.array([2.0, -1.0])
    prob = LadProblem(X, X @ beta)
    assert prob.evaluate(LadModel(beta=beta)) == 0.0


def test_decluster_cases():
    # residuals (+, +) keep; (+, -) split; (0, +) split with zero nonpositive
    X = np.ones((6, 1))
    y = np.array([2.0, 3.0, 2.0, 0.0, 1.0, 2.0])
    prob = LadProblem(X, y)
    part = ClusterPartition.from_assignment([0, 0, 1, 1, 2, 2])
    model = LadModel(beta=np.array([1.0]))  # residuals: 1, 2, 1, -1, 0, 1
    new, any_split = prob.decluster(part, model)
    new.check_consistent()
    assert any_split
    clusters = sorted(tuple(new.members(c)) for c in new.cluster_ids())
    assert (0, 1) in clusters          # kept: both positive
    assert (2,) in clusters and (3,) in clusters  # split by sign
    assert (4,) in clusters and (5,) in clusters  # zero goes nonpositive


def test_check_optimality_rules():
    X = np.ones((4, 1))
    y = np.array([2.0, 3.0, 0.0, 0.5])
    prob = LadProblem(X, y)
    model = LadModel(beta=np.array([1.0]))  # residuals 1, 2, -1, -0.5
    pure = ClusterPartition.from_assignment([0, 0, 1, 1])
    mixed = ClusterPartition.from_assignment([0, 1, 0, 1])
    assert prob.check_optimality(pure, model)
    assert not prob.check_optimality(mixed, model)


def test_all_singletons_optimal():
    X = np.random.default_rng(0).normal(size=(8, 2))
    y = np.random.default_rng(1).normal(size=8)
    prob = LadProblem(X, y)
    part = ClusterPartition.singletons(8)
    model, F = prob.solve(aggregate(part, X, y))
    assert prob.check_optimality(part, model)
    assert abs(prob.evaluate(model) - F) <= 1e-6 * max(1.0, F)


def test_run_singleton_init_terminates_immediately():
    ds = generate_lad(30, 2, seed=3)
    prob = LadProblem(ds.X, ds.y)
    log = run(prob, RunConfig(r0=1.0, rng_seed=3))
    assert log.T == 0
    assert log.termination_reason == "optimality-condition"
    rec = log.records[0]
    assert abs(rec.E - rec.F) <= 1e-6 * max(1.0, rec.E)


def test_run_collinear_zero_residual():
    # y = 2x for six points: a two-cluster aggregate already fits exactly
    x = np.arange(1.0, 7.0)[:, None]
    y = 2.0 * x.ravel()
    prob = LadProblem(x, y)
    log = run(prob, RunConfig(r0=2.0 / 6.0, rng_seed=0))
    assert log.T == 0
    assert log.termination_reason == "optimality-condition"
    assert log.records[0].F == pytest.approx(0.0, abs=1e-9)
    assert log.records[0].E == pytest.approx(0.0, abs=1e-9)
    assert log.records[0].gap == 0.0


def test_run_matches_direct_oracle_small():
    ds = generate_lad(40, 2, noise=0.5, seed=11)
    prob = LadProblem(ds.X, ds.y)
    log = run(prob, RunConfig(r0=0.1, rng_seed=11, gap_tolerance=0.0))
    _, F_direct = solve_weighted_lad(ds.X, ds.y, np.ones(40))
    E_T = log.records[-1].E
    assert abs(E_T - F_direct) / F_direct <= 1e-6


def test_run_bound_and_monotonicity_properties():
    ds = generate_lad(300, 4, noise=1.0, seed=5)
    prob = LadProblem(ds.X, ds.y)
    log = run(prob, RunConfig(rng_seed=5, gap_tolerance=0.0))
    Fs = [r.F for r in log.records]
    Es = [r.E for r in log.records]
    gaps = [r.gap for r in log.records]
    assert all(b - a >= -1e-9 for a, b in zip(Fs, Fs[1:]))
    assert all(b - a <= 1e-12 for a, b in zip(gaps, gaps[1:]))
    # every aggregated objective bounds every converted objective
    for F in Fs:
        for E in Es:
            assert F <= E + 1e-6 * max(1.0, E)


def test_post_decluster_sign_purity():
    ds = generate_lad(120, 3, noise=1.0, seed=9)
    prob = LadProblem(ds.X, ds.y)
    part = prob.init_state(RunConfig(rng_seed=9))
    model, _, _ = prob.solve_aggregated(part)
    part, _ = prob.decluster(part, model)
    pos = prob.residual_positive(model)
    for cid in part.cluster_ids():
        signs = pos[part.members(cid)]
        assert signs.all() or not signs.any()


def test_rejects_config_below_cluster_minimum():
    # more attributes than entries: no admissible cluster count exists
    X = np.random.default_rng(0).normal(size=(3, 5))
    prob = LadProblem(X, np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        run(prob, RunConfig(r0=0.5, rng_seed=0))
