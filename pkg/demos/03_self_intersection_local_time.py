"""
Self-intersection local time
============================

The regularized local time L_eps integrates a Gaussian heat kernel of width
eps over all pairs of times. Its mean is finite as eps -> 0 when Hd < 1 and
grows like |ln eps| at Hd = 1, which is why it is centered there.
"""

import numpy as np

from fbmloops import Grid, KernelSpec, center, expected_L_eps_analytic, local_time, sample
from fbmloops.localtime import local_time_gap_split

spec = KernelSpec.circle(1.0, 0.25, 2)
ens = sample(spec, Grid.circle(1.0, 256), n=1000, seed=3)
for eps in (1e-2, 1e-3):
    est = local_time(ens, eps)
    print(f"eps={eps:g}: MC {est.mean:.4f} +- {est.std_error:.4f},"
          f" continuum {expected_L_eps_analytic(spec, eps):.4f}")
print("eps -> 0 closed form:", expected_L_eps_analytic(spec, 0.0))

# the full local time splits into near pairs (lambda) and far pairs (gamma)
parts = local_time_gap_split(ens.paths[0], ens.grid, 1e-2, delta=0.1)
print("gap split of one path:", parts)

# at Hd = 1 the mean grows logarithmically
crit = KernelSpec.circle(1.0, 0.5, 2)
for eps in (1e-2, 1e-3, 1e-4):
    print(f"Hd=1, eps={eps:g}, |ln eps|={abs(np.log(eps)):.2f}:"
          f" E L = {expected_L_eps_analytic(crit, eps):.4f}")
cens = sample(crit, Grid.circle(1.0, 256), n=1000, seed=4)
c = center(local_time(cens, 1e-3))
print(f"centered mean at Hd=1: {c.mean:+.4f} +- {c.std_error:.4f}")
