"""Compare restart strategies on a small Lasso problem built from iris.

The problem is min 0.5||Ax - b||^2 + lam ||x||_1 with b = +1 for setosa and
-1 otherwise, lam = ||A^T b||_inf / 10. We count iterations until the
optimality gap falls below 1e-10.
"""

import math

from accrestart import (ApproxCombination, ConditionalAtX, FixedCombination, FunctionValueAdaptive,
                        StopRule, compute_reference, lasso_problem, run)
from accrestart.data_io import DatasetManifest, bundled_path, load_design

design = load_design(DatasetManifest(bundled_path("iris.csv"), "csv", "onevsrest:Iris-setosa"))
prob = lasso_problem(design)
prob = prob.with_reference(*compute_reference(prob))
print(f"{prob.design.A.shape[0]} samples, {prob.n} features, L = {prob.lipschitz:.1f}, mu_F = {prob.strong_convexity(prob.v_full):.3e}\n")

eps = 1e-10
stop = StopRule(gap_tol=eps)


def count(solver, policy=None):
    hit = run(prob, solver, policy, budget=20000, stop=stop, keep_events=False).iterations_to(eps)
    return ">20000" if hit is None else hit


rows = [("ISTA", "ista", None), ("FISTA", "fista", None), ("APG", "apg", None),
        ("FISTA + function-value restart", "fista", FunctionValueAdaptive()),
        ("APG + function-value restart", "apg", FunctionValueAdaptive())]
for mu in (1.0, 0.1, 0.01, 1e-3):
    rows.append((f"FISTA + fixed combination, mu={mu:g}", "fista", FixedCombination.from_estimate(mu)))
    rows.append((f"FISTA + history center, mu={mu:g}", "fista", ApproxCombination.from_estimate(mu)))
    rows.append((f"FISTA + conditional at x, mu={mu:g}", "fista", ConditionalAtX(mu, math.exp(-2))))
for label, solver, pol in rows:
    print(f"{label:<40} {count(solver, pol)}")
