"""
Edwards reweighting
===================

Reweighting each path by exp(-g L_eps) gives a self-repelling polymer. The
same ensemble is reused for every coupling. The effective sample size shows
how far the reweighted law has moved from the sampling law.
"""

import numpy as np

from fbmloops import Grid, KernelSpec, center, edwards_weights, local_time, sample
from fbmloops import reweighted_observable, stability_scan

spec = KernelSpec.circle(1.0, 0.25, 2)
ens = sample(spec, Grid.circle(1.0, 128), n=4000, seed=6)
est = local_time(ens, 1e-2)
for g in (0.0, 0.5, 2.0, 8.0):
    ew = edwards_weights(est, g)
    rg = reweighted_observable(ens, ew, "gyration")
    print(f"g={g:<4} Z={ew.normalizer:.4f} ess={ew.ess:7.1f}"
          f"  R_g^2: raw {rg.raw:.4f} -> {rg.reweighted:.4f} +- {rg.std_error:.4f}")

# at Hd = 1 the centered local time is used; large couplings degenerate
crit = KernelSpec.circle(1.0, 0.5, 2)
cest = center(local_time(sample(crit, Grid.circle(1.0, 128), n=4000, seed=7), 1e-2))
scan = stability_scan(cest, np.geomspace(0.01, 100, 9))
print("couplings with finite normalizer and ess >= 1% of n:", scan.stable_range)
