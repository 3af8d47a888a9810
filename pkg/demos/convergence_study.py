"""
Convergence of the estimate with sample size
============================================

Monte Carlo check that the fitted curve approaches the exact one at the
root-n rate: for each sample size, average the integrated squared distance
between the fit and a fine-grid reference over independent replications.
On a log-log plot the criterion falls on a line of slope about -1
(squared error halves when n doubles).
"""

import numpy as np

from hazard_transform import (
    ConstantHazard,
    Scenario,
    l2_convergence,
    write_study,
)

sc = Scenario(
    system="survival",
    hazards={"event": ConstantHazard(rate_value=1.0, horizon=1.0)},
    censor=ConstantHazard(rate_value=0.3, horizon=1.0),
    n=100,          # overridden per row by n_list
    seed=515,
    k_replications=40,
)

result = l2_convergence(sc, n_list=[100, 200, 400, 800], n_jobs=1)

print(f"columns: {result.columns}")
print("     n    mean integrated squared error")
for n, crit in result.rows:
    print(f"  {n:>4}    {crit:.3e}")

ns = np.array([row[0] for row in result.rows], dtype=float)
crit = np.array([row[1] for row in result.rows])
slope = np.polyfit(np.log(ns), np.log(crit), 1)[0]
print(f"\nlog-log slope: {slope:.3f}  (root-n convergence shows as -1)")
print(f"replications per row: {result.metadata['k_replications']}")
print(f"failures: {result.metadata['failures']}")

write_study(result, "/tmp/demo_convergence")
print("written: /tmp/demo_convergence.csv and .json")
