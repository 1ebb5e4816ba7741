"""Generic aggregate / solve / certify / refine loop.

The loop is parameterized by a problem adapter that supplies the aggregated
solve, the original-data evaluation, a per-cluster optimality test, and the
cluster refinement step.  Iteration records carry the aggregated objective F
(a global lower bound for the convex problems), the original-data objective
E of the converted solution, the running best E, and the relative gap.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field, asdict

__all__ = [
    "RunConfig",
    "IterationRecord",
    "RunLog",
    "compute_gap",
    "decide_termination",
    "run",
]

TERMINATION_REASONS = (
    "optimality-condition",
    "gap-tolerance",
    "max-iterations",
    "time-limit",
    "singleton-clusters",
)


@dataclass
class RunConfig:
    """Knobs of a refinement run.

    ``r0`` overrides the problem's default initial aggregation rate;
    ``iterations`` switches to fixed-iteration mode (stop after that many
    refinement rounds even if the optimality condition has not fired).
    A ``gap_tolerance`` of 0 disables gap-based stopping so the run only
    ends on the exact per-cluster optimality condition.
    """

    r0: float | None = None
    gap_tolerance: float | None = None  # None -> problem default
    max_iterations: int = 100
    time_limit: float | None = None
    rng_seed: int = 0
    iterations: int | None = None  # fixed-iteration mode
    keep_history: bool = False  # retain per-iteration assignments (diagnostics)

    def __post_init__(self):
        if self.r0 is not None and not (0.0 < self.r0 <= 1.0):
            raise ValueError("r0 must lie in (0, 1]")
        if self.gap_tolerance is not None and self.gap_tolerance < 0:
            raise ValueError("gap_tolerance must be nonnegative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.iterations is not None and self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class IterationRecord:
    t: int
    num_clusters: int
    rate: float
    F: float
    E: float
    E_best: float
    gap: float
    solve_time: float = 0.0
    evaluate_time: float = 0.0
    decluster_time: float = 0.0
    solve_exact: bool = True

    def to_json(self) -> str:
        d = asdict(self)
        d["type"] = "iteration"
        d["gap"] = None if math.isinf(self.gap) else self.gap
        return json.dumps(d)


@dataclass
class RunLog:
    problem: str
    config: RunConfig
    records: list[IterationRecord]
    termination_reason: str
    model: object
    init_time: float = 0.0
    total_time: float = 0.0
    model_trail: list = field(default_factory=list)
    partition_trail: list = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def T(self) -> int:
        return self.records[-1].t

    @property
    def final_rate(self) -> float:
        return self.records[-1].rate

    def header_json(self, n: int | None = None) -> str:
        d = {
            "type": "header",
            "problem": self.problem,
            "config": asdict(self.config),
            "config_digest": self.config.digest(),
        }
        if n is not None:
            d["n"] = n
        return json.dumps(d)

    def summary_json(self) -> str:
        return json.dumps(
            {
                "type": "summary",
                "termination_reason": self.termination_reason,
                "T": self.T,
                "F_final": self.records[-1].F,
                "E_final": self.records[-1].E,
                "E_best": self.records[-1].E_best,
                "r_final": self.final_rate,
                "init_time": self.init_time,
                "total_time": self.total_time,
            }
        )


def compute_gap(E_best: float, F_t: float) -> float:
    """Relative gap (E_best - F_t) / E_best, clamped below at zero.

    A zero best objective means a perfect fit: the gap is 0 when the lower
    bound is also zero and +inf otherwise (the ratio is undefined and the
    caller must rely on the optimality condition instead).
    """
    tiny = 1e-12
    if E_best <= tiny:
        return 0.0 if abs(F_t) <= tiny else math.inf
    return max(0.0, (E_best - F_t) / E_best)


def decide_termination(
    record: IterationRecord,
    config: RunConfig,
    *,
    optimal: bool,
    all_singletons: bool,
    elapsed: float,
    supports_gap: bool,
    gap_tolerance: float,
) -> str | None:
    """First matching stop rule, or None to keep refining."""
    if optimal:
        return "optimality-condition"
    if supports_gap and gap_tolerance > 0 and record.gap <= gap_tolerance:
        return "gap-tolerance"
    limit = config.iterations if config.iterations is not None else config.max_iterations
    if record.t >= limit:
        return "max-iterations"
    if config.time_limit is not None and elapsed >= config.time_limit:
        return "time-limit"
    if all_singletons:
        return "singleton-clusters"
    return None


def run(problem, config: RunConfig | None = None) -> RunLog:
    """Drive the aggregate / solve / certify / refine loop to termination.

    ``problem`` is an adapter exposing: name, supports_gap,
    default_gap_tolerance, n_entries, init_state, num_clusters,
    all_singletons, solve_aggregated, evaluate, check_optimality, decluster,
    and snapshot_state.  The returned log carries one record per iteration
    and the converted (original-data) model of the final iteration.
    """
    config = config or RunConfig()
    gap_tolerance = (
        config.gap_tolerance
        if config.gap_tolerance is not None
        else problem.default_gap_tolerance
    )

    start = time.perf_counter()
    state = problem.init_state(config)
    init_time = time.perf_counter() - start

    n = problem.n_entries
    records: list[IterationRecord] = []
    trail: list = []
    partitions: list = []
    E_best = math.inf
    t = 0
    reason = None

    while True:
        t0 = time.perf_counter()
        model, F_t, exact = problem.solve_aggregated(state)
        t1 = time.perf_counter()
        E_t = problem.evaluate(model)
        t2 = time.perf_counter()
        E_best = min(E_best, E_t)

        k_t = problem.num_clusters(state)
        record = IterationRecord(
            t=t,
            num_clusters=k_t,
            rate=k_t / n,
            F=F_t,
            E=E_t,
            E_best=E_best,
            gap=compute_gap(E_best, F_t),
            solve_time=t1 - t0,
            evaluate_time=t2 - t1,
            solve_exact=exact,
        )
        records.append(record)
        trail.append(model)
        if config.keep_history:
            partitions.append(problem.snapshot_state(state))

        optimal = problem.check_optimality(state, model)
        reason = decide_termination(
            record,
            config,
            optimal=optimal,
            all_singletons=problem.all_singletons(state),
            elapsed=time.perf_counter() - start,
            supports_gap=problem.supports_gap,
            gap_tolerance=gap_tolerance,
        )
        if reason is not None:
            break

        t3 = time.perf_counter()
        state, any_split = problem.decluster(state, model)
        record.decluster_time = time.perf_counter() - t3
        if not any_split:
            # tolerance kept every cluster whole: no further progress possible
            reason = "singleton-clusters"
            break
        t += 1

    return RunLog(
        problem=problem.name,
        config=config,
        records=records,
        termination_reason=reason,
        model=trail[-1],
        init_time=init_time,
        total_time=time.perf_counter() - start,
        model_trail=trail,
        partition_trail=partitions,
        notes=list(getattr(problem, "notes", [])),
    )
