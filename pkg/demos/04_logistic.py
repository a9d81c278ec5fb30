"""Sparse logistic regression with restarted accelerated coordinate descent."""

import numpy as np

from accrestart import ApproxCombination, SparseDesign, StopRule, compute_reference, logistic_problem, run
from accrestart.data_io import synth_lasso

design, _ = synth_lasso(n=60, m=200, density=0.3, seed=3)
labels = np.where(design.b > 0, 1.0, -1.0)
design = SparseDesign(design.A, labels)
prob = logistic_problem(design, lambda1=50.0, lambda2=1e-3)
prob = prob.with_reference(*compute_reference(prob))
print(f"F* = {prob.F_star:.10f}, {np.count_nonzero(np.abs(prob.x_star) > 1e-12)} nonzeros of {prob.n}")

stop = StopRule(max_epochs=300, gap_tol=1e-9)
for tau in (1, 8):
    plain = run(prob, "approx", None, budget=10**6, stop=stop, tau=tau)
    restarted = run(prob, "approx", ApproxCombination.from_estimate(1e-2, tau / prob.n, prob.n / tau),
                    budget=10**6, stop=stop, tau=tau)
    for name, tr in (("no restart", plain), ("restarted", restarted)):
        print(f"tau={tau} {name:>10}: {tr.epochs[-1]:7.1f} epochs, gap {tr.gap[-1]:.1e}")
