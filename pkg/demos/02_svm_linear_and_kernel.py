#!/usr/bin/env python3
"""Walkthrough: weighted soft-margin SVM on cluster centroids.

Clusters never mix labels, so each centroid keeps a clean class sign and the
aggregated problem is an ordinary weighted SVM.  A cluster is split when its
members disagree about the side of the margin-shifted hyperplane.  The same
loop runs in two interchangeable ways for the linear kernel: on centroids
directly, or purely through block means of the Gram matrix (which is how a
nonlinear kernel has to run).
"""

import numpy as np

from aggrefine import RunConfig, SvmProblem, run
from aggrefine.clustering import ClusterPartition
from aggrefine.data import generate_svm
from aggrefine.subsolvers.svm_dual import solve_weighted_svm

ds = generate_svm(1500, 5, separation=3.0, seed=7)
n = ds.n
print(f"instance: {n} rows, two classes, some overlap")

# --- linear kernel, centroid route ------------------------------------------
problem = SvmProblem(ds.X, ds.y, M=0.1)
cfg = RunConfig(rng_seed=7, gap_tolerance=0.0, keep_history=True)
log = run(problem, cfg)
print(f"\ncentroid route: {log.termination_reason} after {log.T} rounds, "
      f"final clusters {log.records[-1].num_clusters}")

direct = solve_weighted_svm(X=ds.X, y=ds.y, weights=np.ones(n), M=0.1)
print(f"objective refined {log.records[-1].E:.8f} vs direct {direct.objective:.8f}")

# --- the dual transfers too ---------------------------------------------------
# Spreading each cluster's dual value evenly over its members yields a
# feasible dual point for the FULL problem that reproduces the hyperplane.
part = ClusterPartition.from_assignment(log.partition_trail[-1])
alpha_hat = problem.disaggregate_dual(log.model_trail[-1], part)
w_hat = (alpha_hat * ds.y) @ ds.X
print(f"spread dual: sum(alpha*y) = {abs(float(alpha_hat @ ds.y)):.1e}, "
      f"box ok = {bool(np.all((alpha_hat >= 0) & (alpha_hat <= 0.1 + 1e-12)))}, "
      f"|w_hat - w|_inf = {np.abs(w_hat - log.model.w).max():.1e}")

# --- same run through the Gram matrix ----------------------------------------
gram_problem = SvmProblem(ds.X, ds.y, M=0.1, kernel="linear", use_gram=True)
gram_log = run(gram_problem, RunConfig(rng_seed=7, gap_tolerance=0.0))
drift = max(abs(a.F - b.F) for a, b in zip(log.records, gram_log.records))
print(f"\nGram route reproduces the bound sequence: max |dF| = {drift:.1e}")

# --- a genuinely nonlinear kernel ---------------------------------------------
# Ring-shaped data that no hyperplane separates; the rbf route still certifies.
rng = np.random.default_rng(0)
n2 = 400
radius = np.where(rng.random(n2) < 0.5, 1.0, 3.0)
angle = rng.uniform(0, 2 * np.pi, n2)
X_ring = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
X_ring += rng.normal(0, 0.15, X_ring.shape)
y_ring = np.where(radius < 2.0, 1.0, -1.0)

rbf = SvmProblem(X_ring, y_ring, M=1.0, kernel="rbf", gamma=1.0)
rbf_log = run(rbf, RunConfig(rng_seed=1, gap_tolerance=0.0))
rate = rbf.training_rate(rbf_log.model)
print(f"\nrbf on rings: {rbf_log.termination_reason} after {rbf_log.T} rounds, "
      f"training accuracy {100 * rate:.1f}%")
