import math

import numpy as np
import pytest

from aggrefine.core import IterationRecord, RunConfig, compute_gap, decide_termination, run


def test_gap_basic():
    assert compute_gap(100.0, 90.0) == pytest.approx(0.10)
    assert compute_gap(100.0, 100.0) == 0.0


def test_gap_perfect_fit_convention():
    assert compute_gap(0.0, 0.0) == 0.0
    assert math.isinf(compute_gap(0.0, 1.0))


def test_gap_clamped_at_zero():
    # finite-precision subsolvers can push F slightly above E_best
    assert compute_gap(100.0, 100.0 + 1e-9) == 0.0


def _record(t=0, gap=1.0):
    return IterationRecord(t=t, num_clusters=5, rate=0.5, F=1.0, E=2.0, E_best=2.0, gap=gap)


def test_termination_gap_tolerance():
    cfg = RunConfig(gap_tolerance=1e-3)
    reason = decide_termination(
        _record(gap=5e-4), cfg, optimal=False, all_singletons=False,
        elapsed=0.0, supports_gap=True, gap_tolerance=1e-3,
    )
    assert reason == "gap-tolerance"


def test_termination_optimality_first():
    cfg = RunConfig(gap_tolerance=1e-3)
    reason = decide_termination(
        _record(t=0, gap=0.0), cfg, optimal=True, all_singletons=True,
        elapsed=0.0, supports_gap=True, gap_tolerance=1e-3,
    )
    assert reason == "optimality-condition"


def test_termination_fixed_iterations_mode():
    cfg = RunConfig(iterations=1)
    reason = decide_termination(
        _record(t=1), cfg, optimal=False, all_singletons=False,
        elapsed=0.0, supports_gap=False, gap_tolerance=0.0,
    )
    assert reason == "max-iterations"
    none_yet = decide_termination(
        _record(t=0), cfg, optimal=False, all_singletons=False,
        elapsed=0.0, supports_gap=False, gap_tolerance=0.0,
    )
    assert none_yet is None


def test_termination_no_gap_rule_for_unsupported():
    cfg = RunConfig()
    reason = decide_termination(
        _record(gap=0.0), cfg, optimal=False, all_singletons=False,
        elapsed=0.0, supports_gap=False, gap_tolerance=1e-3,
    )
    assert reason is None


def test_termination_time_limit():
    cfg = RunConfig(time_limit=0.5)
    reason = decide_termination(
        _record(), cfg, optimal=False, all_singletons=False,
        elapsed=1.0, supports_gap=False, gap_tolerance=0.0,
    )
    assert reason == "time-limit"


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(r0=0.0)
    with pytest.raises(ValueError):
        RunConfig(r0=1.5)
    with pytest.raises(ValueError):
        RunConfig(gap_tolerance=-1.0)
    with pytest.raises(ValueError):
        RunConfig(max_iterations=0)


class _StubProblem:
    """Minimal adapter with a scripted, non-monotone F sequence."""

    name = "s3vm"
    supports_gap = False
    default_gap_tolerance = 0.0
    n_entries = 8

    def __init__(self, F_seq):
        self.F_seq = F_seq
        self.calls = 0

    def init_state(self, config):
        return 0

    def num_clusters(self, state):
        return min(4 + state, self.n_entries)

    def all_singletons(self, state):
        return self.num_clusters(state) >= self.n_entries

    def snapshot_state(self, state):
        return state

    def solve_aggregated(self, state):
        F = self.F_seq[min(state, len(self.F_seq) - 1)]
        return {"t": state}, F, True

    def evaluate(self, model):
        return 10.0

    def check_optimality(self, state, model):
        return state >= len(self.F_seq) - 1

    def decluster(self, state, model):
        return state + 1, True


def test_loop_accepts_non_monotone_objective():
    # regression guard: the loop must not enforce any F monotonicity
    # (the semi-supervised aggregated objective may decrease between rounds)
    problem = _StubProblem([5.0, 3.0, 7.0, 2.0])
    log = run(problem, RunConfig(rng_seed=0))
    Fs = [r.F for r in log.records]
    assert Fs == [5.0, 3.0, 7.0, 2.0]
    assert any(b < a for a, b in zip(Fs, Fs[1:]))
    assert log.termination_reason == "optimality-condition"


def test_runlog_shapes():
    problem = _StubProblem([1.0, 2.0])
    log = run(problem, RunConfig(rng_seed=0))
    assert log.T == log.records[-1].t
    assert log.records[-1].rate == pytest.approx(log.records[-1].num_clusters / 8)
    header = log.header_json(n=8)
    assert "config_digest" in header
    assert log.summary_json()


def test_run_determinism_of_config_digest():
    assert RunConfig(rng_seed=1).digest() == RunConfig(rng_seed=1).digest()
    assert RunConfig(rng_seed=1).digest() != RunConfig(rng_seed=2).digest()
