#!/usr/bin/env python3
"""Walkthrough: L1 regression solved on shrinking cluster aggregates.

The idea: instead of fitting all n rows at once, fit a weighted L1 model on
a handful of cluster centroids, check which clusters straddle the fitted
hyperplane, split exactly those, and repeat.  Each aggregated objective F is
a global lower bound; the converted fit's objective E on the full data is an
upper bound; when every cluster sits on one side of the fit, both meet and
the model is provably optimal for the original problem.
"""

import numpy as np

from aggrefine import LadProblem, RunConfig, run
from aggrefine.data import generate_lad, save_model
from aggrefine.subsolvers.lad_lp import solve_weighted_lad

# A synthetic instance: standard-normal rows, Laplace noise on the response.
n, m = 4000, 5
ds = generate_lad(n, m, noise=1.0, seed=42)
print(f"instance: {n} rows, {m} columns")

# Run to the exact per-cluster certificate (gap_tolerance=0 disables the
# early gap-based stop).
problem = LadProblem(ds.X, ds.y)
log = run(problem, RunConfig(rng_seed=42, gap_tolerance=0.0))

print(f"\n{'t':>3} {'clusters':>9} {'rate':>8} {'F (bound)':>14} {'E (value)':>14} {'gap':>10}")
for r in log.records:
    print(f"{r.t:>3} {r.num_clusters:>9} {r.rate:>8.4f} {r.F:>14.6f} {r.E:>14.6f} {r.gap:>10.2e}")
print(f"terminated: {log.termination_reason} after {log.T} refinement rounds")

# The whole point: the final model is optimal for the FULL data, which we can
# verify against a direct full-size solve.
_, F_direct = solve_weighted_lad(ds.X, ds.y, np.ones(n))
E_final = log.records[-1].E
print(f"\ndirect full-data optimum : {F_direct:.8f}")
print(f"refined final objective  : {E_final:.8f}")
print(f"relative difference      : {abs(E_final - F_direct) / F_direct:.2e}")

# Note how few rows the solver ever looked at simultaneously: the last
# aggregated problem had num_clusters rows instead of n.
print(f"\nlargest aggregated problem: {log.records[-1].num_clusters} rows "
      f"({100 * log.final_rate:.1f}% of the data)")

save_model(log.model, "/tmp/l1_model.txt", metadata={"seed": 42})
print("model written to /tmp/l1_model.txt")
