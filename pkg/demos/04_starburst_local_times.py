"""
Starbursts: self and cross local times
======================================

On a star the local time splits into one self term per branch and one cross
term per branch pair. Cross terms stay bounded even at Hd = 1, since the two
branches only meet at the origin. The combined local time weights each term
by a coupling.
"""

from fbmloops import CouplingWeights, Grid, KernelSpec, sample
from fbmloops import combined_local_time, cross_local_time, expected_cross_local_time
from fbmloops.starburst import cross_branch_covariance

lengths = (1.0, 1.0, 1.0)
spec = KernelSpec.star(lengths, hurst=0.5, dim=2)
ens = sample(spec, Grid.star(lengths, 16), n=4000, seed=5)

# Brownian branches are independent
cov, se = cross_branch_covariance(ens, (0, 0.5), (1, 0.75))
print(f"cov(b_0(0.5), b_1(0.75)) = {cov:+.4f} +- {se:.4f}")

for eps in (1e-2, 1e-4, 0.0):
    print(f"E L_01 at eps={eps:g}: {expected_cross_local_time(spec, 0, 1, eps):.5f}")
est = cross_local_time(ens, 0, 1, 1e-2)
print(f"grid MC at eps=0.01: {est.mean:.5f} +- {est.std_error:.5f}")

w = CouplingWeights.uniform(3, g_self=1.0, g_cross=0.5)
tot = combined_local_time(ens, w, 1e-2)
print(f"combined local time: mean {tot.mean:+.4f}, se {tot.std_error:.4f}")
